"""Fitting the noise scale (convex in theta) and, jointly, debias/PNL parameters.

With the sort order frozen, the objective is an exact quadratic in theta, so
the scale has a closed-form minimizer; a bisection on the analytic gradient
is kept as an interchangeable cross-check. Debias/PNL parameters are fitted
by plain gradient descent with the scale refreshed periodically.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .divergence import (
    DebiasFn,
    MeasureValue,
    MeasureWorkspace,
    PnlTransform,
    _debiased,
    measure_value,
    measure_with_grad,
    normalized_measure,
    pnl_transform,
)
from .errors import NumericError

DEFAULT_THETA_RANGE = (1e-8, 100.0)


@dataclass(frozen=True)
class FitConfig:
    theta_range: tuple[float, float] = DEFAULT_THETA_RANGE
    step_size: float = 1.0
    theta_update_period: int = 10
    max_iters: int = 500
    tolerance: float = 1e-8
    lr_schedule: str = "constant"  # constant | cyclic
    cyclic_period: int = 50
    restarts: int = 0

    def __post_init__(self):
        lo, hi = self.theta_range
        if not (0 < lo < hi):
            raise ValueError(f"theta_range lower bound must be > 0, got {self.theta_range}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.lr_schedule not in ("constant", "cyclic"):
            raise ValueError(f"unknown lr_schedule {self.lr_schedule!r}")


@dataclass(frozen=True)
class FitResult:
    theta: float
    w: float | None
    omega: tuple[float, float, float] | None
    measure: MeasureValue
    iterations: int
    converged: bool
    # best objective seen up to each theta-refresh point (non-increasing)
    refresh_history: tuple[float, ...] = field(default_factory=tuple)
    per_row_debias: bool = False

    def debias(self) -> DebiasFn | None:
        return None if self.w is None else DebiasFn(self.w, per_row=self.per_row_debias)


def closed_form_theta(ws: MeasureWorkspace,
                      debias: DebiasFn | None = None,
                      pnl: PnlTransform | None = None,
                      theta_range: tuple[float, float] = DEFAULT_THETA_RANGE) -> float:
    """Exact minimizer of the quadratic-in-theta objective, clamped to range.

    With the sort order frozen the objective is
    sum_b ||d_b - theta * e_b||^2 / (k_b - 1) over batch-centered sorted
    vectors, so theta* = sum_b <d_b, e_b>/(k_b-1) / sum_b ||e_b||^2/(k_b-1).
    """
    num = 0.0
    den = 0.0
    for st in ws.stacks:
        d = pnl_transform(st.y, pnl) if pnl is not None else st.y
        d = _debiased(st, d, debias)
        ds = np.sort(d, axis=1)
        dt = ds - ds.mean(axis=1, keepdims=True)
        et = st.e_sorted - st.e_sorted.mean(axis=1, keepdims=True)
        num += float((dt * et).sum()) / (st.k - 1)
        den += float((et * et).sum()) / (st.k - 1)
    if den <= 0.0:
        return theta_range[0]
    theta = num / den
    return float(min(max(theta, theta_range[0]), theta_range[1]))


def bisect_theta(ws: MeasureWorkspace,
                 debias: DebiasFn | None = None,
                 pnl: PnlTransform | None = None,
                 theta_range: tuple[float, float] = DEFAULT_THETA_RANGE,
                 tol: float = 1e-10) -> float:
    """Root of the analytic theta-gradient by bisection over theta_range."""
    lo, hi = theta_range

    def grad(theta: float) -> float:
        return measure_with_grad(ws, theta, debias, pnl)[1]["theta"]

    g_lo = grad(lo)
    if g_lo >= 0.0:
        return float(lo)
    if grad(hi) <= 0.0:
        return float(hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if grad(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return float(0.5 * (lo + hi))


def fit_theta(ws: MeasureWorkspace,
              debias: DebiasFn | None = None,
              pnl: PnlTransform | None = None,
              config: FitConfig | None = None,
              method: str = "closed_form") -> float:
    """Best noise scale for fixed debias/PNL parameters and fixed draws."""
    config = config or FitConfig()
    if method == "closed_form":
        theta = closed_form_theta(ws, debias, pnl, config.theta_range)
    elif method == "bisection":
        theta = bisect_theta(ws, debias, pnl, config.theta_range)
    else:
        raise ValueError(f"unknown method {method!r}")
    # numeric sanity of the objective at the fitted scale
    measure_value(ws, theta, debias, pnl)
    return theta


def _learning_rate(config: FitConfig, t: int) -> float:
    if config.lr_schedule == "constant":
        return config.step_size
    # triangular wave between 0.1*step_size and step_size
    c = (t % config.cyclic_period) / config.cyclic_period
    tri = 1.0 - abs(2.0 * c - 1.0)
    return config.step_size * (0.1 + 0.9 * tri)


def _fit_joint_once(ws: MeasureWorkspace, theta0: float, w0: float | None,
                    omega0: tuple[float, float, float] | None,
                    per_row: bool, config: FitConfig) -> FitResult:
    fit_w = w0 is not None
    fit_omega = omega0 is not None
    theta = float(theta0)
    w = float(w0) if fit_w else None
    omega = tuple(float(v) for v in omega0) if fit_omega else None

    def mk(wv, ov):
        d = DebiasFn(wv, per_row) if fit_w else None
        p = PnlTransform(*ov) if fit_omega else None
        return d, p

    if not fit_w and not fit_omega:
        theta = fit_theta(ws, None, None, config)
        mv = normalized_measure(ws, theta)
        return FitResult(theta, None, None, mv, 0, True, (mv.raw,), per_row)

    debias, pnl = mk(w, omega)
    theta = fit_theta(ws, debias, pnl, config)
    obj = measure_value(ws, theta, debias, pnl)
    best = (obj, theta, w, omega)
    refresh_hist = [obj]
    prev = obj
    converged = False
    iterations = 0
    for t in range(1, config.max_iters + 1):
        iterations = t
        lr = _learning_rate(config, t)
        _, grads = measure_with_grad(ws, theta, debias, pnl)
        if fit_w:
            w = w - lr * grads["w"]
        if fit_omega:
            omega = (
                omega[0] - lr * grads["omega_a"],
                omega[1] - lr * grads["omega_b"],
                omega[2] - lr * grads["omega_c"],
            )
        debias, pnl = mk(w, omega)
        try:
            if t % config.theta_update_period == 0:
                theta = fit_theta(ws, debias, pnl, config)
            obj = measure_value(ws, theta, debias, pnl)
        except NumericError as exc:
            raise NumericError(f"objective diverged at iteration {t}: {exc}") from None
        if not np.isfinite(obj):
            raise NumericError(f"objective diverged at iteration {t}")
        if obj < best[0]:
            best = (obj, theta, w, omega)
        if t % config.theta_update_period == 0:
            refresh_hist.append(best[0])
        if abs(prev - obj) < config.tolerance:
            converged = True
            break
        prev = obj

    obj, theta, w, omega = best
    debias, pnl = mk(w, omega)
    raw = measure_value(ws, theta, debias, pnl)
    mv = normalized_measure(ws, theta, debias, pnl)
    return FitResult(theta, w, omega, mv, iterations, converged, tuple(refresh_hist), per_row)


def fit_joint(ws: MeasureWorkspace,
              theta0: float = 1.0,
              w0: float | None = None,
              omega0: tuple[float, float, float] | None = None,
              per_row_debias: bool = False,
              config: FitConfig | None = None,
              seed: int = 0) -> FitResult:
    """Alternating fit: gradient steps on (w, omega), theta refreshed periodically.

    Pass w0 / omega0 as None to exclude those parameters; with both excluded
    this reduces exactly to fit_theta. Returns the parameters achieving the
    best observed objective. `config.restarts` adds randomized re-initializations
    seeded from `seed`, keeping the overall best.
    """
    config = config or FitConfig()
    results = [_fit_joint_once(ws, theta0, w0, omega0, per_row_debias, config)]
    if config.restarts > 0 and (w0 is not None or omega0 is not None):
        rng = np.random.default_rng(seed)
        for _ in range(config.restarts):
            t0 = float(rng.uniform(0.5, 2.0))
            wr = float(rng.normal(0.0, 0.5)) if w0 is not None else None
            omr = (
                tuple(float(v) for v in rng.normal([0.1, 0.1, 0.0], 0.2))
                if omega0 is not None
                else None
            )
            results.append(_fit_joint_once(ws, t0, wr, omr, per_row_debias, config))
    return min(results, key=lambda r: r.measure.raw)
