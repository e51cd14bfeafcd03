"""Anchored and uniform isoperimetric profiles on windows and their clusters.

Connected anchored sets are enumerated by canonical augmentation (each set is
produced exactly once); profiles beyond the enumeration guard fall back to
simulated-annealing upper bounds that are flagged inexact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np
import scipy.stats

from .errors import DomainError, EnumerationGuardError, UnfittableError
from .graph_core import GraphWindow, VertexSet
from .percolation import ClusterPartition, Configuration

ENUM_GUARD = 14
BAD_SET_GUARD = 30


@dataclass(frozen=True)
class IsoFunction:
    """Increasing candidate boundary function phi with phi(t) <= t."""

    kind: str
    dprime: float | None
    _eval: Callable[[float], float]

    def __call__(self, t: float) -> float:
        return self._eval(t)

    @classmethod
    def power(cls, dprime: float) -> "IsoFunction":
        if dprime <= 1.0:
            raise DomainError(f"power iso-function needs d' > 1, got {dprime}")
        expo = (dprime - 1.0) / dprime
        return cls("power", dprime, lambda t: t**expo)

    @classmethod
    def tabulated(cls, ts: Sequence[float], values: Sequence[float]) -> "IsoFunction":
        ts = np.asarray(ts, dtype=float)
        values = np.asarray(values, dtype=float)
        if np.any(np.diff(ts) <= 0) or np.any(np.diff(values) < 0):
            raise DomainError("tabulated iso-function must be increasing")
        if np.any(values > ts):
            raise DomainError("tabulated iso-function must satisfy phi(t) <= t")
        return cls("tabulated", None, lambda t: float(np.interp(t, ts, values)))


def psi(phi: IsoFunction, t: float) -> float:
    """phi(t) / log(2t / phi(t)), the log-corrected boundary function."""
    if t <= 0:
        raise DomainError(f"t must be positive, got {t}")
    val = phi(t)
    if val > t * (1 + 1e-12):
        raise DomainError(f"phi({t}) = {val} exceeds t")
    return val / math.log(2.0 * t / val)


# ---------------------------------------------------------------------------
# ambient graphs and anchored-set enumeration


def _adjacency(graph) -> Sequence:
    if isinstance(graph, GraphWindow):
        return graph.adjacency
    return graph


def open_adjacency(window: GraphWindow, config: Configuration) -> tuple:
    """Adjacency lists of the open subgraph (every vertex kept, open edges only)."""
    adj: list[list[int]] = [[] for _ in range(window.n_vertices)]
    for e in np.flatnonzero(config.open):
        u, v = window.edges[e]
        adj[int(u)].append(int(v))
        adj[int(v)].append(int(u))
    return tuple(tuple(sorted(a)) for a in adj)


def enumerate_anchored_sets(
    graph, v: int, max_size: int, *, prune: Callable[[frozenset], bool] | None = None
) -> Iterator[tuple[int, ...]]:
    """All connected vertex sets containing v with size <= max_size, each once.

    Canonical augmentation: candidates are consumed in a fixed order and either
    included or permanently forbidden, so every set has a unique generation
    path.  ``prune`` may cut a branch; only sound for monotone criteria.
    """
    if max_size > ENUM_GUARD:
        raise EnumerationGuardError(
            f"max_size {max_size} exceeds guard {ENUM_GUARD}: "
            "connected-set counts blow up combinatorially"
        )
    adj = _adjacency(graph)
    if max_size < 1:
        return

    def rec(S: frozenset, cand: list, forb: frozenset):
        yield tuple(sorted(S))
        if len(S) == max_size:
            return
        cand = list(cand)
        banned = set(forb)
        while cand:
            u = cand.pop(0)
            known = S | banned | set(cand) | {u}
            new_cand = cand + [int(w) for w in adj[u] if int(w) not in known]
            S2 = S | {u}
            if prune is None or prune(S2):
                yield from rec(S2, new_cand, frozenset(banned))
            banned.add(u)

    yield from rec(frozenset([v]), [int(w) for w in adj[v]], frozenset())


def _boundary_and_volume(adj, W: Iterable[int]) -> tuple[int, int]:
    """(#ambient edges leaving W, sum of ambient degrees over W)."""
    member = set(W)
    boundary = 0
    volume = 0
    for w in member:
        volume += len(adj[w])
        boundary += sum(1 for nb in adj[w] if int(nb) not in member)
    return boundary, volume


def _ratio(adj, W, phi: IsoFunction, normalization: str) -> float:
    boundary, volume = _boundary_and_volume(adj, W)
    t = float(volume) if normalization == "degree" else float(len(W))
    if t <= 0:
        return math.inf
    return boundary / phi(t)


# ---------------------------------------------------------------------------
# profiles


@dataclass(frozen=True)
class ProfileResult:
    """Minimum boundary/phi(volume) ratio over anchored sets of one size.

    Exact entries are true minima over the enumerated class; heuristic entries
    are annealing upper bounds.
    """

    n: int
    ratio: float
    witness: tuple[int, ...]
    exact: bool


def anchored_profile(
    graph,
    v: int,
    phi: IsoFunction,
    max_size: int,
    *,
    heuristic_sizes: Sequence[int] = (),
    heuristic_budget: int = 20000,
    normalization: str = "degree",
    seed: int = 0,
) -> list[ProfileResult]:
    """Per-size minimum of |boundary W| / phi(volume W) over anchored sets.

    Sizes up to ``max_size`` are exact (full enumeration); ``heuristic_sizes``
    beyond that are simulated-annealing upper bounds flagged inexact.
    """
    if normalization not in ("degree", "cardinality"):
        raise DomainError(f"unknown normalization {normalization!r}")
    adj = _adjacency(graph)
    if not 0 <= v < len(adj):
        raise DomainError(f"anchor {v} outside graph")
    best: dict[int, tuple[float, tuple[int, ...]]] = {}
    for W in enumerate_anchored_sets(adj, v, max_size):
        r = _ratio(adj, W, phi, normalization)
        n = len(W)
        if n not in best or r < best[n][0]:
            best[n] = (r, W)
    results = [ProfileResult(n, r, W, exact=True) for n, (r, W) in sorted(best.items())]
    rng = np.random.default_rng(seed)
    for n in heuristic_sizes:
        if n <= max_size:
            continue
        r, W = _anneal_min_ratio(adj, v, phi, n, heuristic_budget, rng, normalization)
        results.append(ProfileResult(n, r, W, exact=False))
    return results


def _greedy_ball(adj, v: int, size: int) -> set[int]:
    W = {v}
    frontier = [v]
    while len(W) < size and frontier:
        nxt = []
        for u in frontier:
            for w in adj[u]:
                w = int(w)
                if w not in W:
                    W.add(w)
                    nxt.append(w)
                    if len(W) == size:
                        return W
        frontier = nxt
    return W


def _is_connected_without(adj, W: set[int], drop: int) -> bool:
    rest = W - {drop}
    start = next(iter(rest))
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for w in adj[u]:
            w = int(w)
            if w in rest and w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(rest)


def _anneal_min_ratio(adj, v, phi, size, budget, rng, normalization):
    """Fixed-size swap annealing: remove a non-anchor vertex, add a frontier one."""
    W = _greedy_ball(adj, v, size)
    if len(W) < size:
        raise DomainError(f"graph component of {v} smaller than requested size {size}")
    cur = _ratio(adj, W, phi, normalization)
    best, best_W = cur, tuple(sorted(W))
    temp = 1.0
    cooling = 0.999
    for _ in range(budget):
        temp *= cooling
        removable = [u for u in W if u != v and _is_connected_without(adj, W, u)]
        frontier = sorted({int(w) for u in W for w in adj[u] if int(w) not in W})
        if not removable or not frontier:
            break
        u = removable[rng.integers(len(removable))]
        w = frontier[rng.integers(len(frontier))]
        cand = (W - {u}) | {w}
        # swap may disconnect if w only attached through u
        if not _is_connected_without(adj, cand | {u}, u):
            continue
        r = _ratio(adj, cand, phi, normalization)
        if r <= cur or rng.random() < math.exp(-(r - cur) / max(temp, 1e-9)):
            W, cur = cand, r
            if cur < best:
                best, best_W = cur, tuple(sorted(W))
    return best, best_W


# ---------------------------------------------------------------------------
# bad-set search (the union-bound isoperimetry event)


def bad_set_search(
    window: GraphWindow,
    config: Configuration,
    partition: ClusterPartition,
    v: int,
    n: int,
    threshold,
) -> VertexSet | None:
    """Witness for the bad-set event at level n, or None.

    Searches connected W (in the window) with v in W, all vertices in the open
    cluster of v, exactly n window edges touching W, and open edge boundary
    at most ``threshold`` (a number, or a callable evaluated on W).
    """
    if n > BAD_SET_GUARD:
        raise EnumerationGuardError(
            f"n = {n} exceeds bad-set guard {BAD_SET_GUARD}: "
            "touching-edge counts blow up combinatorially"
        )
    member = partition.root == partition.root[v]
    adj = tuple(
        tuple(int(w) for w in window.adjacency[u] if member[w]) if member[u] else ()
        for u in range(window.n_vertices)
    )

    def touching(W) -> int:
        internal = sum(
            1 for u in W for w in window.adjacency[u] if int(w) in W and int(w) > u
        )
        return int(sum(window.degrees[u] for u in W)) - internal

    def open_boundary(W) -> int:
        count = 0
        for u in W:
            for e in window.incident_edges[u]:
                if not config.open[e]:
                    continue
                a, b = window.edges[e]
                other = int(b) if int(a) == u else int(a)
                if other not in W:
                    count += 1
        return count

    max_vertices = min(n, ENUM_GUARD)
    for W in enumerate_anchored_sets(
        adj, v, max_vertices, prune=lambda S: touching(S) <= n
    ):
        Wset = set(W)
        if touching(Wset) != n:
            continue
        limit = threshold(Wset) if callable(threshold) else threshold
        if open_boundary(Wset) <= limit:
            return VertexSet.of(Wset)
    return None


# ---------------------------------------------------------------------------
# uniform isoperimetry and dimension fitting


@dataclass(frozen=True)
class UniformIsoResult:
    c: float
    per_size: dict
    witness: tuple[int, ...]


def check_uniform_isoperimetry(window: GraphWindow, d: float, max_size: int) -> UniformIsoResult:
    """Smallest |boundary| / (sum deg)^((d-1)/d) over ALL connected sets <= max_size.

    Each connected set is enumerated once, anchored at its minimum vertex in
    the subgraph induced on larger-indexed vertices.
    """
    if d <= 1:
        raise DomainError(f"need d > 1, got {d}")
    phi = IsoFunction.power(d)
    adj = window.adjacency
    best: dict[int, float] = {}
    c = math.inf
    witness: tuple[int, ...] = ()
    for v in range(window.n_vertices):
        restricted = tuple(
            tuple(int(w) for w in adj[u] if int(w) >= v) if u >= v else ()
            for u in range(window.n_vertices)
        )
        for W in enumerate_anchored_sets(restricted, v, max_size):
            boundary, _ = _boundary_and_volume(adj, W)  # boundary in the full window
            volume = int(sum(window.degrees[list(W)]))
            r = boundary / phi(volume)
            n = len(W)
            if n not in best or r < best[n]:
                best[n] = r
            if r < c:
                c, witness = r, W
    return UniformIsoResult(c=c, per_size=dict(sorted(best.items())), witness=witness)


@dataclass(frozen=True)
class DimensionFit:
    dprime: float
    stderr: float
    slope: float
    slope_stderr: float
    intercept: float
    n_points: int


def fit_dimension(tail: Sequence[tuple[float, float]], min_n: int = 8) -> DimensionFit:
    """Fit d' from (n, -log p_n) points assuming p_n ~ exp(-c n^((d'-1)/d')).

    Least-squares slope s of log(-log p_n) against log n; d' = 1/(1-s) with a
    delta-method standard error.  Points with n < min_n are dropped to reduce
    pre-asymptotic bias; refuses when s falls outside (0, 1).
    """
    pts = [(n, y) for n, y in tail if n >= min_n and y > 0]
    if len(pts) < 5:
        raise UnfittableError(
            f"need >= 5 usable points with n >= {min_n}, got {len(pts)}",
            diagnostics={"points": pts},
        )
    x = np.log([n for n, _ in pts])
    y = np.log([y for _, y in pts])
    fit = scipy.stats.linregress(x, y)
    s = float(fit.slope)
    if not 0.0 < s < 1.0:
        raise UnfittableError(
            f"slope {s:.4f} outside (0, 1): no finite d' > 1 consistent with the tail",
            diagnostics={"slope": s, "stderr": float(fit.stderr)},
        )
    dprime = 1.0 / (1.0 - s)
    stderr = float(fit.stderr) / (1.0 - s) ** 2
    return DimensionFit(
        dprime=dprime,
        stderr=stderr,
        slope=s,
        slope_stderr=float(fit.stderr),
        intercept=float(fit.intercept),
        n_points=len(pts),
    )
