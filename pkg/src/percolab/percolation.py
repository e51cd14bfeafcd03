"""Monotone coupling via per-edge uniforms, cluster decomposition, and the
repulsion / hull / edge-disjoint-path statistics built on top of it.

One uniform label per edge realizes every percolation level simultaneously:
edge e is p-open iff label(e) < p, so monotonicity in p is structural.
"""

from __future__ import annotations

import collections
from dataclasses import dataclass

import numpy as np
import scipy.sparse
from scipy.sparse.csgraph import maximum_flow

from . import kernels
from .errors import DomainError
from .graph_core import GraphWindow, OrientedEdge, VertexSet, as_members, _member_mask

__all__ = [
    "EdgeLabels",
    "Configuration",
    "ClusterPartition",
    "assign_uniforms",
    "threshold",
    "clusters",
    "tau",
    "repulsion_statistic",
    "connected_off",
    "reachable_off",
    "hull",
    "open_oriented_boundary",
    "count_edge_disjoint_paths",
]


@dataclass(frozen=True)
class EdgeLabels:
    """One uniform in [0,1) per edge; reproducible from (seed, sample_index)."""

    labels: np.ndarray
    seed: int
    sample_index: int


@dataclass(frozen=True)
class Configuration:
    """Open-edge bitset at a single percolation level p."""

    open: np.ndarray
    p: float


def assign_uniforms(window: GraphWindow, seed: int, sample_index: int) -> EdgeLabels:
    """Counter-based uniforms: Philox keyed by (seed, sample_index).

    Identical arguments reproduce identical label arrays bit-for-bit,
    independent of how samples are distributed over workers.
    """
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, sample_index], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    return EdgeLabels(labels=gen.random(window.n_edges), seed=seed, sample_index=sample_index)


def threshold(labels: EdgeLabels, p: float) -> Configuration:
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    return Configuration(open=labels.labels < p, p=p)


@dataclass(frozen=True)
class ClusterPartition:
    """Union-find decomposition of an open configuration.

    Per-root arrays are only meaningful at root indices; ``root`` is fully
    compressed (root[root[v]] == root[v]).
    """

    root: np.ndarray
    size_by_root: np.ndarray
    edge_count_by_root: np.ndarray
    pseudo_by_root: np.ndarray

    def root_of(self, v: int) -> int:
        return int(self.root[v])

    def size_of(self, v: int) -> int:
        return int(self.size_by_root[self.root[v]])

    def edge_count_of(self, v: int) -> int:
        """|E(K_v)|: number of edges touching the cluster of v."""
        return int(self.edge_count_by_root[self.root[v]])

    def is_pseudo_infinite(self, v: int) -> bool:
        return bool(self.pseudo_by_root[self.root[v]])

    def infinite_mask(self) -> np.ndarray:
        """Per-vertex membership in the union of pseudo-infinite clusters."""
        return self.pseudo_by_root[self.root]

    def cluster_of(self, v: int) -> np.ndarray:
        return np.flatnonzero(self.root == self.root[v])


def clusters(window: GraphWindow, config: Configuration) -> ClusterPartition:
    n = window.n_vertices
    eu = window.edges[:, 0]
    ev = window.edges[:, 1]
    root = kernels.cluster_roots(eu, ev, config.open, n)
    size = np.bincount(root, minlength=n)
    ru, rv = root[eu], root[ev]
    internal = ru == rv
    edge_count = (
        np.bincount(ru[internal], minlength=n)
        + np.bincount(ru[~internal], minlength=n)
        + np.bincount(rv[~internal], minlength=n)
    )
    pseudo = np.zeros(n, dtype=bool)
    pseudo[root[window.boundary_mask]] = True
    return ClusterPartition(
        root=root, size_by_root=size, edge_count_by_root=edge_count, pseudo_by_root=pseudo
    )


def _count_between(window: GraphWindow, mask_a: np.ndarray, mask_b: np.ndarray) -> int:
    au = mask_a[window.edges[:, 0]]
    av = mask_a[window.edges[:, 1]]
    bu = mask_b[window.edges[:, 0]]
    bv = mask_b[window.edges[:, 1]]
    return int(np.count_nonzero((au & bv) | (bu & av)))


def tau(window: GraphWindow, A, B) -> int:
    """Number of window edges (open or closed) with one endpoint in A, one in B."""
    mask_a = _member_mask(window, A)
    mask_b = _member_mask(window, B)
    if np.any(mask_a & mask_b):
        raise DomainError("tau requires disjoint vertex sets")
    return _count_between(window, mask_a, mask_b)


def repulsion_statistic(
    window: GraphWindow, labels: EdgeLabels, p1: float, p2: float, v: int
) -> tuple[bool, int]:
    """(finite, tau) for the sprinkled repulsion event at vertex v.

    finite: the p2-cluster of v is not pseudo-infinite.  tau: number of edges
    between that cluster and the union of pseudo-infinite p1-clusters
    (0 when the p2-cluster is itself pseudo-infinite).
    """
    if not 0.0 < p1 < p2 < 1.0:
        raise DomainError(f"need 0 < p1 < p2 < 1, got ({p1}, {p2})")
    part2 = clusters(window, threshold(labels, p2))
    if part2.is_pseudo_infinite(v):
        return False, 0
    k2_mask = part2.root == part2.root[v]
    part1 = clusters(window, threshold(labels, p1))
    inf1_mask = part1.infinite_mask()
    return True, _count_between(window, k2_mask, inf1_mask)


def reachable_off(window: GraphWindow, config: Configuration, S) -> np.ndarray:
    """Vertices connected to the window boundary by open paths avoiding S.

    Multi-source BFS from the boundary; vertices of S are never entered, so
    membership in the returned mask is exactly "<- infinity off S".
    """
    s_mask = _member_mask(window, S) if len(as_members(S)) else np.zeros(window.n_vertices, bool)
    reached = np.zeros(window.n_vertices, dtype=bool)
    queue = collections.deque()
    for b in np.flatnonzero(window.boundary_mask):
        b = int(b)
        if not s_mask[b]:
            reached[b] = True
            queue.append(b)
    while queue:
        u = queue.popleft()
        for e in window.incident_edges[u]:
            if not config.open[e]:
                continue
            a, b = window.edges[e]
            w = int(b) if int(a) == u else int(a)
            if not reached[w] and not s_mask[w]:
                reached[w] = True
                queue.append(w)
    return reached


def connected_off(window: GraphWindow, config: Configuration, x: int, S) -> bool:
    """True iff x reaches the window boundary by an open path avoiding S."""
    members = set(as_members(S)) if S else set()
    if x in members:
        raise DomainError(f"vertex {x} lies in the excluded set")
    if window.boundary_mask[x]:
        return True
    seen = {x}
    queue = collections.deque([x])
    while queue:
        u = queue.popleft()
        for e in window.incident_edges[u]:
            if not config.open[e]:
                continue
            a, b = window.edges[e]
            w = int(b) if int(a) == u else int(a)
            if w in seen or w in members:
                continue
            if window.boundary_mask[w]:
                return True
            seen.add(w)
            queue.append(w)
    return False


def hull(window: GraphWindow, config: Configuration, S) -> VertexSet:
    """Vertices of pseudo-infinite clusters whose every open route to the
    boundary passes through S (contains S itself intersected with K_inf)."""
    part = clusters(window, config)
    inf_mask = part.infinite_mask()
    s_mask = _member_mask(window, S)
    reach = reachable_off(window, config, S)
    gamma = inf_mask & (s_mask | ~reach)
    return VertexSet.of(np.flatnonzero(gamma))


def open_oriented_boundary(
    window: GraphWindow, config: Configuration, gamma
) -> list[OrientedEdge]:
    """Open edges leaving gamma, oriented outward."""
    members = as_members(gamma)
    if not members:
        return []
    mask = _member_mask(window, gamma)
    out = []
    in_g = mask[window.edges]
    for e in np.flatnonzero((in_g[:, 0] ^ in_g[:, 1]) & config.open):
        u, v = window.edges[e]
        u, v = int(u), int(v)
        tail, head = (u, v) if mask[u] else (v, u)
        out.append(OrientedEdge(tail, head, int(e)))
    return out


def count_edge_disjoint_paths(window: GraphWindow, config: Configuration, S) -> int:
    """Maximum number of edge-disjoint open paths from S to the boundary.

    Unit-capacity max-flow (Dinic, via scipy) from a super-source attached to S
    to a super-sink attached to the boundary; terminal arcs are capped at the
    vertex degree, which never binds for interior S.
    """
    members = as_members(S)
    if not members:
        raise DomainError("S must be nonempty")
    n = window.n_vertices
    source, sink = n, n + 1
    rows, cols, caps = [], [], []
    for e in np.flatnonzero(config.open):
        u, v = window.edges[e]
        rows += [int(u), int(v)]
        cols += [int(v), int(u)]
        caps += [1, 1]
    for v in members:
        rows.append(source)
        cols.append(v)
        caps.append(int(window.degrees[v]))
    for b in np.flatnonzero(window.boundary_mask):
        rows.append(int(b))
        cols.append(sink)
        caps.append(int(window.degrees[b]))
    graph = scipy.sparse.csr_matrix(
        (np.array(caps, dtype=np.int32), (rows, cols)), shape=(n + 2, n + 2)
    )
    return int(maximum_flow(graph, source, sink).flow_value)
