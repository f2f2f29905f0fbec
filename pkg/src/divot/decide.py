"""End-to-end direction decision: score both directions, compare, bootstrap.

Both candidate directions are scored with the same seed; the normalized
measure (raw divided by the fitted noise variance) is the loss, and the
smaller loss wins. The bootstrap path resamples the data, scores both
directions per replicate, and applies a two-sided Welch t-test to the two
loss samples; an insignificant difference means "independent".
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .divergence import MeasureValue, MeasureWorkspace, workspace_from_batches
from .noise import canonical_source
from .optimize import FitConfig, FitResult, fit_joint
from .pairdata import SamplePair, default_batch_frac, make_batches, select_positions

X_TO_Y = "x->y"
Y_TO_X = "y->x"
INDEPENDENT = "independent"

# losses closer than this are treated as indistinguishable without a bootstrap
TIE_EPS = 1e-12


@dataclass(frozen=True)
class ScoreConfig:
    """Pipeline knobs shared by both directions."""

    mode: str = "anm"  # anm | pnl
    source: str = "uniform"
    batch_frac: float | None = None  # None -> sample-size schedule
    max_positions: int = 50
    use_debias: bool = False
    debias_per_row: bool = False
    fit: FitConfig = field(default_factory=FitConfig)

    def __post_init__(self):
        if self.mode not in ("anm", "pnl"):
            raise ValueError(f"mode must be 'anm' or 'pnl', got {self.mode!r}")
        object.__setattr__(self, "source", canonical_source(self.source))
        if self.batch_frac is not None and not 0.0 < self.batch_frac <= 1.0:
            raise ValueError(f"batch_frac must be in (0, 1], got {self.batch_frac}")


@dataclass(frozen=True)
class DirectionScore:
    direction: str
    measure: MeasureValue
    theta: float
    w: float | None
    omega: tuple[float, float, float] | None
    mode: str

    @property
    def loss(self) -> float:
        return self.measure.normalized


@dataclass(frozen=True)
class BootstrapResult:
    b: int
    losses_xy: np.ndarray
    losses_yx: np.ndarray
    p_value: float
    degenerate: bool = False


@dataclass(frozen=True)
class Verdict:
    decision: str
    score_xy: DirectionScore
    score_yx: DirectionScore
    alpha: float = 0.05
    p_value: float | None = None
    bootstrap: BootstrapResult | None = None


def _workspace_for(pairs: SamplePair, config: ScoreConfig, seed: int) -> MeasureWorkspace:
    frac = config.batch_frac if config.batch_frac is not None else default_batch_frac(pairs.n)
    positions = select_positions(pairs, config.max_positions)
    batches = make_batches(pairs, positions, frac)
    return workspace_from_batches(pairs, batches, config.source, seed)


def _fit(ws: MeasureWorkspace, config: ScoreConfig, seed: int) -> FitResult:
    w0 = 0.0 if config.use_debias else None
    omega0 = (0.1, 0.1, 0.0) if config.mode == "pnl" else None
    fit_cfg = config.fit
    if config.mode == "pnl" and fit_cfg.lr_schedule == "constant":
        fit_cfg = dataclasses.replace(fit_cfg, lr_schedule="cyclic")
    return fit_joint(ws, 1.0, w0, omega0, config.debias_per_row, fit_cfg, seed)


def score_direction(pairs: SamplePair, direction: str, config: ScoreConfig,
                    seed: int = 0) -> DirectionScore:
    """Fit the measure for one hypothesized direction of preprocessed pairs."""
    if direction == Y_TO_X:
        oriented = pairs.swapped()
    elif direction == X_TO_Y:
        oriented = pairs
    else:
        raise ValueError(f"direction must be {X_TO_Y!r} or {Y_TO_X!r}, got {direction!r}")
    ws = _workspace_for(oriented, config, seed)
    fit = _fit(ws, config, seed)
    return DirectionScore(direction, fit.measure, fit.theta, fit.w, fit.omega, config.mode)


def bootstrap_test(pairs: SamplePair, config: ScoreConfig, b: int = 50,
                   alpha: float = 0.05, seed: int = 0) -> BootstrapResult:
    """Welch two-sample t-test on per-replicate direction losses.

    Replicate i resamples rows with replacement and scores both directions;
    replicate seeds are seed XOR i.
    """
    if b < 2:
        raise ValueError(f"need at least 2 bootstrap replicates, got {b}")
    losses_xy = np.empty(b)
    losses_yx = np.empty(b)
    for i in range(b):
        rep_seed = seed ^ i
        rng = np.random.default_rng(rep_seed)
        idx = rng.integers(0, pairs.n, pairs.n)
        sample = SamplePair(pairs.xs[idx], pairs.ys[idx],
                            pairs.provenance + (f"bootstrap:{i}",))
        losses_xy[i] = score_direction(sample, X_TO_Y, config, rep_seed).loss
        losses_yx[i] = score_direction(sample, Y_TO_X, config, rep_seed).loss
    if losses_xy.var(ddof=1) == 0.0 and losses_yx.var(ddof=1) == 0.0:
        return BootstrapResult(b, losses_xy, losses_yx, 1.0, degenerate=True)
    p = float(stats.ttest_ind(losses_xy, losses_yx, equal_var=False).pvalue)
    return BootstrapResult(b, losses_xy, losses_yx, p)


def divot(pairs: SamplePair, config: ScoreConfig | None = None, seed: int = 0,
          bootstrap_b: int | None = None, alpha: float = 0.05) -> Verdict:
    """Score both directions and decide, optionally with bootstrap significance.

    Without a bootstrap the strictly smaller loss wins and near-ties (within
    1e-12) are reported as independent. With `bootstrap_b` replicates the
    decision is independent unless the two loss samples differ significantly
    at level alpha, in which case the direction with the smaller loss wins.
    """
    config = config or ScoreConfig()
    score_xy = score_direction(pairs, X_TO_Y, config, seed)
    score_yx = score_direction(pairs, Y_TO_X, config, seed)

    if bootstrap_b is None:
        if abs(score_xy.loss - score_yx.loss) <= TIE_EPS:
            decision = INDEPENDENT
        elif score_yx.loss < score_xy.loss:
            decision = Y_TO_X
        else:
            decision = X_TO_Y
        return Verdict(decision, score_xy, score_yx, alpha)

    boot = bootstrap_test(pairs, config, bootstrap_b, alpha, seed)
    if boot.p_value >= alpha:
        decision = INDEPENDENT
    elif score_yx.loss < score_xy.loss:
        decision = Y_TO_X
    else:
        decision = X_TO_Y
    return Verdict(decision, score_xy, score_yx, alpha, boot.p_value, boot)
