"""Seeded synthetic cause-effect generators, including confounded variants."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pairdata import SamplePair

MECHANISMS = ("linear", "cubic", "sine", "piecewise")


def mechanism_fn(name: str):
    if name == "linear":
        return lambda x: x
    if name == "cubic":
        return lambda x: 0.1 * (2.5 * x) ** 3 - 0.1 * x
    if name == "sine":
        return lambda x: np.sin(4.0 * x)
    if name == "piecewise":
        return lambda x: np.where(x <= 0, 0.5 * x**3 - x, 1.0 - 0.5 * x**3 + x)
    raise ValueError(f"unknown mechanism {name!r}; choose from {MECHANISMS}")


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters of one synthetic data process.

    Without `confounder` the process is x ~ U(-1,1), y = weight * g(x) + e.
    With `confounder` = (w_x, w_y, fcm_id) the processes of the unknown-
    confounder study are used instead (fcm_id in {1, 2, 3}).
    """

    mechanism: str = "linear"
    weight: float = 1.0
    noise: str = "uniform"  # uniform | laplace
    noise_shift: float = 0.0
    confounder: tuple[float, float, int] | None = None
    n: int = 500
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.noise not in ("uniform", "laplace"):
            raise ValueError(f"noise must be 'uniform' or 'laplace', got {self.noise!r}")
        mechanism_fn(self.mechanism)
        if self.confounder is not None and self.confounder[2] not in (1, 2, 3):
            raise ValueError("confounder fcm_id must be 1, 2 or 3")


def _noise(spec: GeneratorSpec, rng: np.random.Generator, n: int) -> np.ndarray:
    if spec.noise == "uniform":
        e = rng.random(n)
    else:
        e = rng.laplace(0.0, 1.0, n)
    return e + spec.noise_shift


def generate(spec: GeneratorSpec) -> SamplePair:
    """Draw a SamplePair from the process described by spec (deterministic)."""
    rng = np.random.default_rng(spec.seed)
    g = mechanism_fn(spec.mechanism)

    if spec.confounder is None:
        x = rng.uniform(-1.0, 1.0, spec.n)
        y = spec.weight * g(x) + _noise(spec, rng, spec.n)
        tag = f"synthetic:{spec.mechanism}:w={spec.weight:g}:n={spec.n}:seed={spec.seed}"
        return SamplePair(x, y, (tag,))

    w_x, w_y, fcm_id = spec.confounder
    u = rng.random(spec.n)
    if fcm_id == 1:
        x = u
        y = u.copy()
    elif fcm_id == 2:
        x = _noise(spec, rng, spec.n) + w_x * u
        y = _noise(spec, rng, spec.n) + w_y * u
    else:
        x = _noise(spec, rng, spec.n) + w_x * u
        y = spec.weight * g(x) + _noise(spec, rng, spec.n) + w_y * u
    tag = (
        f"synthetic:fcm{fcm_id}:{spec.mechanism}:wx={w_x:g}:wy={w_y:g}"
        f":n={spec.n}:seed={spec.seed}"
    )
    return SamplePair(x, y, (tag,))
