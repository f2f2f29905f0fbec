import itertools

import numpy as np
import pytest

from divot import NoiseModel, ShapeError, conditional_w2, couple_sorted, w2_squared_1d
from divot.pairdata import BatchSet


def brute_force_w2(a, b):
    """Oracle: minimum mean squared pairing cost over all assignments."""
    best = np.inf
    for perm in itertools.permutations(range(len(b))):
        cost = np.mean([(a[i] - b[j]) ** 2 for i, j in enumerate(perm)])
        best = min(best, cost)
    return best


def test_identical_samples_cost_zero():
    a = np.array([3.0, -1.0, 2.0])
    assert w2_squared_1d(a, np.array([2.0, 3.0, -1.0])) == 0.0


def test_hand_value():
    assert w2_squared_1d([0.0, 1.0], [1.0, 2.0]) == pytest.approx(1.0)


def test_matches_brute_force_assignment():
    rng = np.random.default_rng(11)
    for _ in range(25):
        m = rng.integers(1, 7)
        a = rng.normal(size=m)
        b = rng.normal(size=m)
        assert w2_squared_1d(a, b) == pytest.approx(brute_force_w2(a, b), abs=1e-10)


def test_symmetry_and_permutation_invariance():
    rng = np.random.default_rng(12)
    a, b = rng.normal(size=20), rng.normal(size=20)
    v = w2_squared_1d(a, b)
    assert w2_squared_1d(b, a) == v
    assert w2_squared_1d(rng.permutation(a), rng.permutation(b)) == v


def test_translation_invariance():
    rng = np.random.default_rng(13)
    a, b = rng.normal(size=15), rng.normal(size=15)
    assert w2_squared_1d(a + 3.7, b + 3.7) == pytest.approx(w2_squared_1d(a, b))


def test_quadratic_scaling():
    rng = np.random.default_rng(14)
    a, b = rng.normal(size=15), rng.normal(size=15)
    assert w2_squared_1d(2.5 * a, 2.5 * b) == pytest.approx(2.5**2 * w2_squared_1d(a, b))


def test_shape_errors():
    with pytest.raises(ShapeError):
        w2_squared_1d([1.0, 2.0], [1.0])
    with pytest.raises(ShapeError):
        w2_squared_1d([], [])


def test_coupling_is_sorted_and_velocity():
    c = couple_sorted([3.0, 1.0], [0.0, 5.0])
    assert c.source.tolist() == [1.0, 3.0]
    assert c.target.tolist() == [0.0, 5.0]
    assert c.velocity().tolist() == [-1.0, 2.0]


# ------------------------------------------------------------ conditional form


def _batchset(sizes):
    idx = np.cumsum([0] + sizes)
    return BatchSet(
        positions=np.arange(len(sizes), dtype=float),
        batches=[np.arange(idx[i], idx[i + 1]) for i in range(len(sizes))],
    )


def test_conditional_identity_coupling_zero():
    model = NoiseModel("uniform", theta=2.0)
    draws = [np.array([0.1, 0.7, 0.4]), np.array([0.9, 0.2])]
    ys = [2.0 * d for d in draws]
    got = conditional_w2(_batchset([3, 2]), ys, model, source_draws=draws)
    assert got == 0.0


def test_conditional_hand_value():
    model = NoiseModel("uniform", theta=1.0)
    got = conditional_w2(_batchset([2]), [np.array([0.0, 2.0])], model,
                         source_draws=[np.array([0.0, 1.0])])
    assert got == pytest.approx(0.5)


def test_conditional_is_mean_over_batches():
    model = NoiseModel("uniform", theta=1.0)
    draws = [np.array([0.0, 1.0]), np.array([0.0, 1.0])]
    ys = [np.array([0.0, 2.0]), np.array([0.0, 1.0])]
    got = conditional_w2(_batchset([2, 2]), ys, model, source_draws=draws)
    assert got == pytest.approx((0.5 + 0.0) / 2.0)
