"""The variance-based transport-mismatch measure and its parameter gradients.

Per batch the effect values are (optionally) passed through the invertible
post-nonlinear transform, debiased, sorted, matched against sorted scaled
noise draws, centered by the mean difference, and the residual energy is
divided by (batch size - 1). The measure averages those terms over batches.

Batches of equal size are stacked into matrices so evaluation is vectorized;
mixed sizes fall back to one stack per distinct size.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, NumericError
from .noise import NoiseModel, canonical_source, draw_source_batches, model_variance


@dataclass(frozen=True)
class DebiasFn:
    """Linear position correction g(x) = w * x subtracted from effect values.

    With `per_row=False` the batch anchor position is used for every member
    (the batch idealization: one shared cause value). A shared constant is
    absorbed by the mean-centering, so anchor debiasing cannot change the
    measure; `per_row=True` subtracts w * x_i using each row's own cause
    value, which is what actually offsets wide-batch bias.
    """

    w: float = 0.0
    per_row: bool = False

    def __call__(self, x):
        return self.w * np.asarray(x, dtype=float)


@dataclass(frozen=True)
class PnlTransform:
    """Invertible-when-flagged effect transform y + a * tanh(b * y + c)."""

    omega_a: float = 0.0
    omega_b: float = 0.0
    omega_c: float = 0.0

    @property
    def invertible(self) -> bool:
        # derivative 1 + a*b*sech^2(.) stays positive everywhere iff a*b > -1
        return self.omega_a * self.omega_b > -1.0

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.omega_a, self.omega_b, self.omega_c)


@dataclass(frozen=True)
class MeasureValue:
    """Raw measure estimate and its noise-variance-normalized companion."""

    raw: float
    normalized: float


def pnl_transform(ys, omega: PnlTransform) -> np.ndarray:
    """Elementwise y + a * tanh(b * y + c)."""
    ys = np.asarray(ys, dtype=float)
    return ys + omega.omega_a * np.tanh(omega.omega_b * ys + omega.omega_c)


@dataclass(frozen=True)
class _Stack:
    """Equal-size batches stacked row-wise."""

    y: np.ndarray  # (g, k)
    x: np.ndarray | None  # (g, k) per-row cause values
    anchors: np.ndarray  # (g,)
    e_sorted: np.ndarray  # (g, k) sorted unscaled draws

    @property
    def k(self) -> int:
        return self.y.shape[1]

    @property
    def g(self) -> int:
        return self.y.shape[0]


@dataclass(frozen=True)
class MeasureWorkspace:
    """Everything fixed during optimization: batch slices and source draws."""

    source: str
    anchors: np.ndarray
    ys: tuple[np.ndarray, ...]
    xs: tuple[np.ndarray, ...] | None
    draws: tuple[np.ndarray, ...]
    stacks: tuple[_Stack, ...]

    @property
    def n_batches(self) -> int:
        return len(self.ys)


def build_workspace(source: str, anchors, ys_per_batch, xs_per_batch=None,
                    seed: int = 0, source_draws=None) -> MeasureWorkspace:
    """Slice batches and draw one fixed source sample per batch member.

    The draws come from a single stream seeded once, so repeated evaluations
    during optimization see the same sample.
    """
    src = canonical_source(source)
    ys = tuple(np.asarray(y, dtype=float) for y in ys_per_batch)
    if any(len(y) < 2 for y in ys):
        raise InsufficientDataError("every batch needs at least 2 members")
    anchors = np.asarray(anchors, dtype=float)
    if len(anchors) != len(ys):
        raise InsufficientDataError("one anchor position per batch required")
    xs = None
    if xs_per_batch is not None:
        xs = tuple(np.asarray(x, dtype=float) for x in xs_per_batch)
        if tuple(len(x) for x in xs) != tuple(len(y) for y in ys):
            raise InsufficientDataError("xs_per_batch must match ys_per_batch lengths")
    if source_draws is None:
        source_draws = draw_source_batches(src, [len(y) for y in ys], seed)
    draws = tuple(np.asarray(e, dtype=float) for e in source_draws)
    if tuple(len(e) for e in draws) != tuple(len(y) for y in ys):
        raise InsufficientDataError("one source draw per batch member required")

    stacks = []
    for k in sorted({len(y) for y in ys}):
        sel = [i for i, y in enumerate(ys) if len(y) == k]
        stacks.append(
            _Stack(
                y=np.vstack([ys[i] for i in sel]),
                x=np.vstack([xs[i] for i in sel]) if xs is not None else None,
                anchors=anchors[sel],
                e_sorted=np.vstack([np.sort(draws[i]) for i in sel]),
            )
        )
    return MeasureWorkspace(src, anchors, ys, xs, draws, tuple(stacks))


def workspace_from_batches(pairs, batches, source: str, seed: int = 0,
                           source_draws=None) -> MeasureWorkspace:
    """Workspace for a SamplePair batched on its x (cause) axis."""
    ys = [pairs.ys[idx] for idx in batches.batches]
    xs = [pairs.xs[idx] for idx in batches.batches]
    return build_workspace(source, batches.positions, ys, xs, seed, source_draws)


def _debiased(st: _Stack, d: np.ndarray, debias: DebiasFn | None) -> np.ndarray:
    if debias is None:
        return d
    if debias.per_row:
        if st.x is None:
            raise InsufficientDataError("per-row debiasing needs per-batch x values")
        return d - debias.w * st.x
    return d - debias.w * st.anchors[:, None]


def measure_value(ws: MeasureWorkspace, theta: float,
                  debias: DebiasFn | None = None,
                  pnl: PnlTransform | None = None) -> float:
    """The raw measure at the given parameters."""
    total = 0.0
    for st in ws.stacks:
        d = pnl_transform(st.y, pnl) if pnl is not None else st.y
        d = _debiased(st, d, debias)
        s = np.sort(d, axis=1) - theta * st.e_sorted
        r = s - s.mean(axis=1, keepdims=True)
        total += float((r * r).sum()) / (st.k - 1)
    value = total / ws.n_batches
    if not np.isfinite(value):
        raise NumericError(f"measure is non-finite at theta={theta}")
    return value


def measure_with_grad(ws: MeasureWorkspace, theta: float,
                      debias: DebiasFn | None = None,
                      pnl: PnlTransform | None = None):
    """Raw measure plus analytic gradients under the frozen sort permutations.

    Returns (value, grads) where grads maps 'theta', 'w', 'omega_a',
    'omega_b', 'omega_c' to partial derivatives. At sorting ties this is the
    subgradient induced by the stable sort.
    """
    g = {"theta": 0.0, "w": 0.0, "omega_a": 0.0, "omega_b": 0.0, "omega_c": 0.0}
    total = 0.0
    for st in ws.stacks:
        if pnl is not None:
            t = np.tanh(pnl.omega_b * st.y + pnl.omega_c)
            d = st.y + pnl.omega_a * t
        else:
            t = None
            d = st.y
        d = _debiased(st, d, debias)
        order = np.argsort(d, kind="stable", axis=1)
        s = np.take_along_axis(d, order, axis=1) - theta * st.e_sorted
        r = s - s.mean(axis=1, keepdims=True)
        scale = 2.0 / (st.k - 1)
        total += float((r * r).sum()) / (st.k - 1)
        g["theta"] += scale * float((r * (-st.e_sorted)).sum())
        if debias is not None:
            if debias.per_row:
                xi = np.take_along_axis(st.x, order, axis=1)
            else:
                xi = np.broadcast_to(st.anchors[:, None], d.shape)
            g["w"] += scale * float((r * (-xi)).sum())
        if pnl is not None:
            t_s = np.take_along_axis(t, order, axis=1)
            y_s = np.take_along_axis(st.y, order, axis=1)
            sech2 = 1.0 - t_s**2
            g["omega_a"] += scale * float((r * t_s).sum())
            g["omega_b"] += scale * float((r * (pnl.omega_a * y_s * sech2)).sum())
            g["omega_c"] += scale * float((r * (pnl.omega_a * sech2)).sum())
    nb = ws.n_batches
    value = total / nb
    if not np.isfinite(value):
        raise NumericError(f"measure is non-finite at theta={theta}")
    return value, {key: val / nb for key, val in g.items()}


def variance_divergence(batches, ys_per_batch, model: NoiseModel,
                        debias: DebiasFn | None = None,
                        pnl: PnlTransform | None = None,
                        seed: int = 0,
                        xs_per_batch=None,
                        source_draws=None) -> MeasureValue:
    """Raw and variance-normalized measure for given batches at a fixed model.

    `batches` supplies the anchor positions; `source_draws` (unscaled, one
    vector per batch) overrides the seeded stream when provided.
    """
    ws = build_workspace(model.source, batches.positions, ys_per_batch,
                         xs_per_batch, seed, source_draws)
    raw = measure_value(ws, model.theta, debias, pnl)
    return MeasureValue(raw=raw, normalized=raw / model_variance(model))


def normalized_measure(ws: MeasureWorkspace, theta: float,
                       debias: DebiasFn | None = None,
                       pnl: PnlTransform | None = None) -> MeasureValue:
    """MeasureValue at theta using the workspace's source for normalization."""
    raw = measure_value(ws, theta, debias, pnl)
    return MeasureValue(raw=raw, normalized=raw / model_variance(NoiseModel(ws.source, theta)))
