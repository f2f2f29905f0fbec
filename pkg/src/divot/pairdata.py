"""Cause-effect pair ingestion, preprocessing, position selection and batching.

A pair file is plain text with one observation per line, whitespace-separated
numeric columns; lines starting with '#' are ignored.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateDataError, InsufficientDataError, PairParseError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SamplePair:
    """An ordered dataset of (x, y) observations.

    Arrays are treated as immutable after construction; `provenance` records
    the preprocessing steps that produced this view of the data.
    """

    xs: np.ndarray
    ys: np.ndarray
    provenance: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        if xs.ndim != 1 or ys.ndim != 1 or len(xs) != len(ys):
            raise InsufficientDataError("xs and ys must be 1-d vectors of equal length")
        if len(xs) < 2:
            raise InsufficientDataError(f"need at least 2 rows, got {len(xs)}")

    @property
    def n(self) -> int:
        return len(self.xs)

    def swapped(self) -> "SamplePair":
        """The same dataset with the roles of x and y exchanged."""
        return SamplePair(self.ys, self.xs, self.provenance + ("swap",))


@dataclass(frozen=True)
class BatchSet:
    """Positions on the cause axis and the sample indices batched around them."""

    positions: np.ndarray
    batches: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "positions", np.asarray(self.positions, dtype=float))
        object.__setattr__(
            self, "batches", tuple(np.asarray(b, dtype=int) for b in self.batches)
        )
        if len(self.positions) != len(self.batches):
            raise InsufficientDataError("positions and batches must align")
        if any(len(b) < 2 for b in self.batches):
            raise InsufficientDataError("every batch needs at least 2 members")

    @property
    def batch_sizes(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.batches)

    def __len__(self) -> int:
        return len(self.batches)


def load_pairs(path: str, columns: tuple[int, int] = (0, 1)) -> SamplePair:
    """Read a two-column whitespace-separated pair file.

    `columns` selects which fields become x and y; row order is preserved.
    """
    xs: list[float] = []
    ys: list[float] = []
    cx, cy = columns
    need = max(cx, cy) + 1
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            fields = stripped.split()
            if len(fields) < max(2, need):
                raise PairParseError(
                    path, line_no, f"expected at least {max(2, need)} columns, got {len(fields)}"
                )
            try:
                xs.append(float(fields[cx]))
                ys.append(float(fields[cy]))
            except ValueError as exc:
                raise PairParseError(path, line_no, f"non-numeric field: {exc}") from None
    if len(xs) < 2:
        raise InsufficientDataError(f"{path}: fewer than 2 data rows")
    return SamplePair(np.array(xs), np.array(ys), (f"load:{path}",))


def normalize(pairs: SamplePair) -> SamplePair:
    """Z-score both columns (sample std, n-1 denominator)."""
    out = []
    for name, col in (("x", pairs.xs), ("y", pairs.ys)):
        sd = col.std(ddof=1)
        if sd == 0.0 or not np.isfinite(sd):
            raise DegenerateDataError(f"column {name} has zero standard deviation")
        out.append((col - col.mean()) / sd)
    return SamplePair(out[0], out[1], pairs.provenance + ("normalize",))


def trim_outliers(pairs: SamplePair, k_std: float = 2.0) -> SamplePair:
    """Drop rows where either normalized coordinate lies beyond k_std."""
    keep = (np.abs(pairs.xs) <= k_std) & (np.abs(pairs.ys) <= k_std)
    removed = int(pairs.n - keep.sum())
    if pairs.n - removed < 2:
        raise InsufficientDataError("fewer than 2 rows survive outlier trimming")
    return SamplePair(
        pairs.xs[keep], pairs.ys[keep],
        pairs.provenance + (f"trim:k={k_std:g}:removed={removed}",),
    )


def subsample(pairs: SamplePair, max_n: int, seed: int) -> SamplePair:
    """Uniform random subsample down to max_n rows, preserving row order."""
    if pairs.n <= max_n:
        return pairs
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(pairs.n, size=max_n, replace=False))
    return SamplePair(
        pairs.xs[idx], pairs.ys[idx],
        pairs.provenance + (f"subsample:{max_n}:seed={seed}",),
    )


def preprocess(pairs: SamplePair, max_n: int = 500, k_std: float = 2.0, seed: int = 0) -> SamplePair:
    """Normalize, trim outliers, then subsample to at most max_n rows."""
    return subsample(trim_outliers(normalize(pairs), k_std), max_n, seed)


def default_batch_frac(n: int) -> float:
    """Batch size (as a fraction of n) by sample-size bracket."""
    if n <= 10:
        return 0.4
    if n <= 50:
        return 0.2
    if n <= 200:
        return 0.15
    return 0.05


def select_position_values(x: np.ndarray, max_positions: int = 50) -> np.ndarray:
    """Anchor values along the x-range, snapped to actual data values.

    With n <= max_positions every distinct value is used; otherwise anchors
    are laid out every (max-min)/max_positions and snapped to the nearest
    data value. Returned sorted ascending and deduplicated.
    """
    x = np.asarray(x, dtype=float)
    uniq = np.unique(x)
    if len(x) <= max_positions:
        return uniq
    lo, hi = uniq[0], uniq[-1]
    step = (hi - lo) / max_positions
    grid = lo + step * np.arange(max_positions)
    # snap each grid point to the nearest available value (ties to the lower)
    right = np.searchsorted(uniq, grid, side="left")
    right = np.clip(right, 0, len(uniq) - 1)
    left = np.clip(right - 1, 0, len(uniq) - 1)
    pick_left = np.abs(grid - uniq[left]) <= np.abs(uniq[right] - grid)
    snapped = np.where(pick_left, uniq[left], uniq[right])
    return np.unique(snapped)


def select_positions(pairs: SamplePair, max_positions: int = 50) -> np.ndarray:
    return select_position_values(pairs.xs, max_positions)


def nearest_batches(x: np.ndarray, positions: np.ndarray, k: int) -> tuple[np.ndarray, ...]:
    """For each position, the indices of the k nearest rows in |x - position|.

    Distance ties are broken by smaller row index (stable argsort).
    """
    x = np.asarray(x, dtype=float)
    out = []
    for p in positions:
        order = np.argsort(np.abs(x - p), kind="stable")
        out.append(np.array(sorted(order[:k])))
    return tuple(out)


def make_batches(pairs: SamplePair, positions: np.ndarray, batch_frac: float) -> BatchSet:
    """Gather the ceil(batch_frac * n) nearest rows around each position.

    Positions whose batch would have fewer than 2 members are dropped; if
    every position is dropped the data cannot support the measure.
    """
    if not 0.0 < batch_frac <= 1.0:
        raise ValueError(f"batch_frac must be in (0, 1], got {batch_frac}")
    positions = np.asarray(positions, dtype=float)
    k = math.ceil(batch_frac * pairs.n)
    kept_pos = []
    kept_batches = []
    dropped = 0
    for p, batch in zip(positions, nearest_batches(pairs.xs, positions, k)):
        if len(batch) < 2:
            dropped += 1
            continue
        kept_pos.append(p)
        kept_batches.append(batch)
    if dropped:
        log.info("dropped %d position(s) with batch size < 2", dropped)
    if not kept_batches:
        raise InsufficientDataError(
            f"all {len(positions)} batches dropped (batch size {k} < 2)"
        )
    return BatchSet(np.array(kept_pos), tuple(kept_batches))


def batch_values(pairs: SamplePair, batches: BatchSet) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Per-batch (y values, x values) slices of the pair data."""
    ys = [pairs.ys[idx] for idx in batches.batches]
    xs = [pairs.xs[idx] for idx in batches.batches]
    return ys, xs
