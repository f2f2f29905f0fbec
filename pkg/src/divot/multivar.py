"""Orient a causal skeleton by scoring every acyclic orientation.

Each variable contributes the raw transport-mismatch of its conditional given
its parents (k-nearest-neighbor batches in standardized parent space, scale
fitted per variable); roots contribute a single whole-sample noise fit. The
DAG score is the sum over variables, and the orientation with the minimum
score wins.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .divergence import build_workspace, measure_value
from .errors import (
    DegenerateDataError,
    InsufficientDataError,
    SkeletonTooLargeError,
)
from .optimize import FitConfig, fit_theta
from .pairdata import default_batch_frac, nearest_batches, select_position_values

MAX_EDGES = 12


def variable_seed(seed: int, i: int) -> int:
    """Per-variable noise stream seed (decorrelates the variable fits)."""
    return seed ^ (0x9E3779B1 * (i + 1))


@dataclass(frozen=True)
class Skeleton:
    """Undirected adjacency structure over m variables."""

    m: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        seen = set()
        norm = []
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at variable {u}")
            if not (0 <= u < self.m and 0 <= v < self.m):
                raise ValueError(f"edge ({u}, {v}) out of range for m={self.m}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
            norm.append(key)
        object.__setattr__(self, "edges", tuple(sorted(norm)))


def load_skeleton(path: str, m: int) -> Skeleton:
    """Edge-list file: one 'i j' pair per line, 0-based indices; '#' comments."""
    edges = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            u, v = stripped.split()[:2]
            edges.append((int(u), int(v)))
    return Skeleton(m, tuple(edges))


@dataclass(frozen=True)
class DagOrientation:
    """A directed acyclic orientation; edges are (parent, child) pairs."""

    m: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(u), int(v)) for u, v in self.edges))
        if not self._is_acyclic():
            raise ValueError("orientation contains a cycle")

    def parents(self, i: int) -> tuple[int, ...]:
        return tuple(sorted(u for u, v in self.edges if v == i))

    def _is_acyclic(self) -> bool:
        return _is_acyclic_edges(self.m, self.edges)


def _is_acyclic_edges(m: int, edges) -> bool:
    indeg = [0] * m
    out = {i: [] for i in range(m)}
    for u, v in edges:
        indeg[v] += 1
        out[u].append(v)
    queue = [i for i in range(m) if indeg[i] == 0]
    seen = 0
    while queue:
        node = queue.pop()
        seen += 1
        for nxt in out[node]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                queue.append(nxt)
    return seen == m


def _standardize(col: np.ndarray, what: str) -> np.ndarray:
    sd = col.std(ddof=1)
    if sd == 0.0 or not np.isfinite(sd):
        raise DegenerateDataError(f"{what} has zero standard deviation")
    return (col - col.mean()) / sd


def _parent_batches(parent_mat: np.ndarray, max_positions: int, batch_frac: float):
    """Anchor rows and k-NN batches in standardized Euclidean parent space.

    One parent reduces to the axis batching of the bivariate path (grid
    positions snapped to values); more parents anchor on rows evenly spaced
    in lexicographic parent order.
    """
    n, d = parent_mat.shape
    z = np.column_stack([_standardize(parent_mat[:, j], f"parent column {j}") for j in range(d)])
    k = int(np.ceil(batch_frac * n))
    if d == 1:
        positions = select_position_values(z[:, 0], max_positions)
        batches = nearest_batches(z[:, 0], positions, k)
        return positions.reshape(-1, 1), batches
    order = np.lexsort(tuple(z[:, j] for j in reversed(range(d))))
    uniq_rows, uniq_idx = np.unique(z[order], axis=0, return_index=True)
    anchor_rows = order[np.sort(uniq_idx)]
    if len(anchor_rows) > max_positions:
        pick = np.unique(np.round(np.linspace(0, len(anchor_rows) - 1, max_positions)).astype(int))
        anchor_rows = anchor_rows[pick]
    anchors = z[anchor_rows]
    batches = []
    for a in anchors:
        dist = np.sqrt(((z - a) ** 2).sum(axis=1))
        batches.append(np.array(sorted(np.argsort(dist, kind="stable")[:k])))
    return anchors, tuple(batches)


def variable_term(data: np.ndarray, i: int, parents: tuple[int, ...],
                  source: str = "uniform",
                  batch_frac: float | None = None,
                  max_positions: int = 50,
                  fit: FitConfig | None = None,
                  seed: int = 0) -> float:
    """Raw measure of variable i's conditional given its parents.

    Roots are fitted as pure noise over a single whole-sample batch.
    """
    n = data.shape[0]
    x_i = np.asarray(data[:, i], dtype=float)
    frac = batch_frac if batch_frac is not None else default_batch_frac(n)
    vseed = variable_seed(seed, i)
    if not parents:
        ws = build_workspace(source, np.zeros(1), [x_i], None, vseed)
        theta = fit_theta(ws, config=fit)
        return measure_value(ws, theta)
    anchors, batches = _parent_batches(data[:, list(parents)], max_positions, frac)
    keep = [j for j, b in enumerate(batches) if len(b) >= 2]
    if not keep:
        raise InsufficientDataError(f"variable {i}: every parent-space batch has < 2 members")
    kept = [batches[j] for j in keep]
    if len(parents) == 1:
        anchor_vals = np.array([anchors[j, 0] for j in keep])
        xs_per_batch = [data[b, parents[0]] for b in kept]
    else:
        anchor_vals = np.zeros(len(kept))
        xs_per_batch = None
    ys_per_batch = [x_i[b] for b in kept]
    ws = build_workspace(source, anchor_vals, ys_per_batch, xs_per_batch, vseed)
    theta = fit_theta(ws, config=fit)
    return measure_value(ws, theta)


def multivariate_measure(data: np.ndarray, dag: DagOrientation,
                         sources=None,
                         batch_frac: float | None = None,
                         max_positions: int = 50,
                         fit: FitConfig | None = None,
                         seed: int = 0) -> float:
    """Sum of per-variable conditional measures under the orientation.

    `sources` may be a single source name or one per variable.
    """
    data = np.asarray(data, dtype=float)
    m = data.shape[1]
    if dag.m != m:
        raise ValueError(f"orientation is over {dag.m} variables, data has {m} columns")
    if sources is None:
        sources = ["uniform"] * m
    elif isinstance(sources, str):
        sources = [sources] * m
    return sum(
        variable_term(data, i, dag.parents(i), sources[i], batch_frac, max_positions, fit, seed)
        for i in range(m)
    )


@dataclass(frozen=True)
class OrientationResult:
    dag: DagOrientation
    score: float
    # (direction flags over sorted skeleton edges, score) for every acyclic
    # orientation; flag 0 keeps (u, v) as u->v, 1 reverses it
    ranking: tuple[tuple[tuple[int, ...], float], ...]


def orient_skeleton(data: np.ndarray, skeleton: Skeleton,
                    sources=None,
                    batch_frac: float | None = None,
                    max_positions: int = 50,
                    fit: FitConfig | None = None,
                    seed: int = 0,
                    max_edges: int = MAX_EDGES) -> OrientationResult:
    """Score every acyclic orientation of the skeleton and keep the minimum.

    Ties break toward the lexicographically smallest direction-flag vector.
    """
    edges = skeleton.edges
    if len(edges) > max_edges:
        raise SkeletonTooLargeError(
            f"{len(edges)} edges exceed the enumeration limit of {max_edges}; "
            "orient edges pairwise with the bivariate tool instead"
        )
    data = np.asarray(data, dtype=float)
    scored = []
    for flags in itertools.product((0, 1), repeat=len(edges)):
        directed = tuple(
            (v, u) if flip else (u, v) for (u, v), flip in zip(edges, flags)
        )
        if not _is_acyclic_edges(skeleton.m, directed):
            continue
        dag = DagOrientation(skeleton.m, directed)
        score = multivariate_measure(data, dag, sources, batch_frac, max_positions, fit, seed)
        scored.append((flags, score, dag))
    if not scored:
        raise InsufficientDataError("skeleton admits no acyclic orientation")
    scored.sort(key=lambda t: (t[1], t[0]))
    best = scored[0]
    ranking = tuple((flags, score) for flags, score, _ in scored)
    return OrientationResult(dag=best[2], score=best[1], ranking=ranking)
