"""Finite windows of infinite transitive graphs and exact set/boundary combinatorics.

A window is a finite truncation of an infinite graph; its outer face plays the
role of "infinity" for every percolation quantity downstream.  Windows are
immutable after construction and safe to share across worker processes.
"""

from __future__ import annotations

import collections
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError


class OrientedEdge(NamedTuple):
    """An edge oriented tail -> head, remembering its undirected index."""

    tail: int
    head: int
    edge: int


@dataclass(frozen=True)
class VertexSet:
    """Sorted, duplicate-free vertex indices with an optional cached boundary."""

    members: tuple[int, ...]
    cached_edge_boundary: tuple[int, ...] | None = None

    @classmethod
    def of(cls, vertices: Iterable[int]) -> "VertexSet":
        return cls(tuple(sorted(set(int(v) for v in vertices))))

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, v) -> bool:
        return v in set(self.members)


def as_members(S) -> tuple[int, ...]:
    """Normalize a VertexSet / iterable of vertices to a sorted tuple."""
    if isinstance(S, VertexSet):
        return S.members
    return tuple(sorted(set(int(v) for v in S)))


@dataclass(frozen=True)
class GraphWindow:
    """Finite window of an infinite transitive graph.

    Vertices are indexed 0..N-1; edges 0..M-1, lexicographic in
    (min endpoint, max endpoint).  ``boundary_mask`` marks the vertices on the
    window's outer face (the "infinity" proxy); ``full_degree`` is the degree
    every vertex would have in the infinite graph.
    """

    family: str
    params: dict
    n_vertices: int
    edges: np.ndarray                 # (M, 2) int64, each row sorted
    adjacency: tuple                  # per-vertex sorted neighbor arrays
    incident_edges: tuple             # per-vertex sorted incident edge indices
    boundary_mask: np.ndarray         # (N,) bool
    degrees: np.ndarray               # (N,) window degrees
    full_degree: int
    _edge_ids: dict = field(repr=False, default_factory=dict)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def boundary(self) -> tuple[int, ...]:
        return tuple(np.flatnonzero(self.boundary_mask))

    def edge_id(self, u: int, v: int) -> int:
        a, b = (u, v) if u < v else (v, u)
        return self._edge_ids[(a, b)]

    def are_adjacent(self, u: int, v: int) -> bool:
        a, b = (u, v) if u < v else (v, u)
        return (a, b) in self._edge_ids

    # hypercubic coordinate helpers -------------------------------------------

    def coords(self, v: int) -> tuple[int, ...]:
        if self.family != "hypercubic":
            raise ConfigurationError("coords only defined for hypercubic windows")
        sides = self.params["sides"]
        out = []
        for s in reversed(sides):
            out.append(v % s)
            v //= s
        return tuple(reversed(out))

    def vertex_at(self, coords: Sequence[int]) -> int:
        if self.family != "hypercubic":
            raise ConfigurationError("vertex_at only defined for hypercubic windows")
        sides = self.params["sides"]
        if len(coords) != len(sides):
            raise ConfigurationError("coords: wrong dimension")
        v = 0
        for c, s in zip(coords, sides):
            if not 0 <= c < s:
                raise ConfigurationError(f"coords: component {c} outside [0, {s})")
            v = v * s + c
        return v

    def center_vertex(self) -> int:
        if self.family == "hypercubic":
            return self.vertex_at([s // 2 for s in self.params["sides"]])
        if self.family == "regular_tree":
            return 0
        raise ConfigurationError(f"no canonical center for family {self.family!r}")


def _finish_window(family, params, n, edge_set, boundary_mask, full_degree):
    edges = np.array(sorted((min(u, v), max(u, v)) for u, v in edge_set), dtype=np.int64)
    if len(edges) == 0:
        raise ConfigurationError("window has no edges")
    adjacency = [[] for _ in range(n)]
    incident = [[] for _ in range(n)]
    edge_ids = {}
    for idx, (u, v) in enumerate(edges):
        u, v = int(u), int(v)
        adjacency[u].append(v)
        adjacency[v].append(u)
        incident[u].append(idx)
        incident[v].append(idx)
        edge_ids[(u, v)] = idx
    degrees = np.array([len(a) for a in adjacency], dtype=np.int64)
    window = GraphWindow(
        family=family,
        params=params,
        n_vertices=n,
        edges=edges,
        adjacency=tuple(np.array(sorted(a), dtype=np.int64) for a in adjacency),
        incident_edges=tuple(np.array(sorted(i), dtype=np.int64) for i in incident),
        boundary_mask=np.asarray(boundary_mask, dtype=bool),
        degrees=degrees,
        full_degree=full_degree,
        _edge_ids=edge_ids,
    )
    # sanity: connected, boundary vertices miss at least one infinite-graph neighbor
    if not is_connected_set(window, range(n)):
        raise ConfigurationError("window graph is not connected")
    if np.any(degrees[window.boundary_mask] >= full_degree):
        raise ConfigurationError("boundary vertex with full infinite-graph degree")
    return window


def _build_hypercubic(d: int, L) -> GraphWindow:
    if d < 1:
        raise ConfigurationError(f"hypercubic: d must be >= 1, got {d}")
    sides = tuple(int(s) for s in (L if isinstance(L, (tuple, list)) else [L] * d))
    if len(sides) != d:
        raise ConfigurationError(f"hypercubic: expected {d} side lengths, got {len(sides)}")
    if any(s < 2 for s in sides):
        raise ConfigurationError(f"hypercubic: L must be >= 2, got {sides}")
    n = int(np.prod(sides))
    strides = np.cumprod((1,) + sides[::-1][:-1])[::-1]

    def vid(coords):
        return int(np.dot(coords, strides))

    edge_set = []
    boundary = np.zeros(n, dtype=bool)
    for flat in range(n):
        coords = []
        v = flat
        for s in reversed(sides):
            coords.append(v % s)
            v //= s
        coords = coords[::-1]
        if any(c == 0 or c == s - 1 for c, s in zip(coords, sides)):
            boundary[flat] = True
        for axis in range(d):
            if coords[axis] + 1 < sides[axis]:
                nb = list(coords)
                nb[axis] += 1
                edge_set.append((flat, vid(nb)))
    params = {"d": d, "L": L if not isinstance(L, (tuple, list)) else tuple(L), "sides": sides}
    return _finish_window("hypercubic", params, n, edge_set, boundary, full_degree=2 * d)


def _build_regular_tree(r: int, R: int) -> GraphWindow:
    if r < 3:
        raise ConfigurationError(f"regular_tree: degree r must be >= 3, got {r}")
    if R < 1:
        raise ConfigurationError(f"regular_tree: radius R must be >= 1, got {R}")
    # breadth-first construction; vertex 0 is the root
    edge_set = []
    depth = [0]
    next_id = 1
    frontier = [0]
    for level in range(R):
        new_frontier = []
        for v in frontier:
            n_children = r if level == 0 else r - 1
            for _ in range(n_children):
                edge_set.append((v, next_id))
                depth.append(level + 1)
                new_frontier.append(next_id)
                next_id += 1
        frontier = new_frontier
    n = next_id
    boundary = np.array([d == R for d in depth], dtype=bool)
    return _finish_window("regular_tree", {"r": r, "R": R}, n, edge_set, boundary, full_degree=r)


def _build_product(w1: GraphWindow, w2: GraphWindow) -> GraphWindow:
    n1, n2 = w1.n_vertices, w2.n_vertices
    n = n1 * n2

    def vid(a, b):
        return a * n2 + b

    edge_set = []
    for u, v in w1.edges:
        for b in range(n2):
            edge_set.append((vid(int(u), b), vid(int(v), b)))
    for u, v in w2.edges:
        for a in range(n1):
            edge_set.append((vid(a, int(u)), vid(a, int(v))))
    boundary = np.zeros(n, dtype=bool)
    for a in range(n1):
        for b in range(n2):
            if w1.boundary_mask[a] or w2.boundary_mask[b]:
                boundary[vid(a, b)] = True
    params = {"factors": (w1.params, w2.params)}
    return _finish_window(
        "product", params, n, edge_set, boundary, full_degree=w1.full_degree + w2.full_degree
    )


def build_window(family: str, **params) -> GraphWindow:
    """Construct a window; deterministic indexing for identical params."""
    if family == "hypercubic":
        try:
            return _build_hypercubic(params["d"], params["L"])
        except KeyError as exc:
            raise ConfigurationError(f"hypercubic: missing field {exc.args[0]!r}") from None
    if family == "regular_tree":
        try:
            return _build_regular_tree(params["r"], params["R"])
        except KeyError as exc:
            raise ConfigurationError(f"regular_tree: missing field {exc.args[0]!r}") from None
    if family == "product":
        try:
            return _build_product(params["first"], params["second"])
        except KeyError as exc:
            raise ConfigurationError(f"product: missing field {exc.args[0]!r}") from None
    raise ConfigurationError(f"unknown window family {family!r}")


# set / boundary combinatorics ---------------------------------------------------


def _member_mask(window: GraphWindow, S) -> np.ndarray:
    members = as_members(S)
    if not members:
        raise DomainError("vertex set must be nonempty")
    if members[0] < 0 or members[-1] >= window.n_vertices:
        raise DomainError(f"vertex {members[0] if members[0] < 0 else members[-1]} outside window")
    mask = np.zeros(window.n_vertices, dtype=bool)
    mask[list(members)] = True
    return mask


def edge_boundary(window: GraphWindow, S) -> np.ndarray:
    """Edge indices with exactly one endpoint in S."""
    mask = _member_mask(window, S)
    inS = mask[window.edges]
    return np.flatnonzero(inS[:, 0] ^ inS[:, 1])


def oriented_edge_boundary(window: GraphWindow, S) -> list[OrientedEdge]:
    """The edges of ``edge_boundary`` oriented outward (tail in S)."""
    mask = _member_mask(window, S)
    out = []
    for e in edge_boundary(window, S):
        u, v = window.edges[e]
        u, v = int(u), int(v)
        tail, head = (u, v) if mask[u] else (v, u)
        out.append(OrientedEdge(tail, head, int(e)))
    return out


def touching_edges(window: GraphWindow, S) -> np.ndarray:
    """Edge indices with at least one endpoint in S."""
    mask = _member_mask(window, S)
    inS = mask[window.edges]
    return np.flatnonzero(inS[:, 0] | inS[:, 1])


def degree_volume(window: GraphWindow, S) -> int:
    """Sum of window degrees over S."""
    mask = _member_mask(window, S)
    return int(window.degrees[mask].sum())


def is_connected_set(window: GraphWindow, S) -> bool:
    """True iff the subgraph induced by S is connected (BFS)."""
    members = as_members(S)
    if not members:
        raise DomainError("vertex set must be nonempty")
    member_set = set(members)
    seen = {members[0]}
    queue = collections.deque([members[0]])
    while queue:
        u = queue.popleft()
        for w in window.adjacency[u]:
            w = int(w)
            if w in member_set and w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == len(member_set)


def ball(window: GraphWindow, center: int, radius: int) -> VertexSet:
    """Graph-distance ball around ``center`` in the window."""
    if not 0 <= center < window.n_vertices:
        raise DomainError(f"vertex {center} outside window")
    if radius < 0:
        raise DomainError(f"radius must be >= 0, got {radius}")
    dist = {center: 0}
    queue = collections.deque([center])
    while queue:
        u = queue.popleft()
        if dist[u] == radius:
            continue
        for w in window.adjacency[u]:
            w = int(w)
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    return VertexSet.of(dist)


def boundary_margin(window: GraphWindow, S) -> int:
    """Minimum graph distance from S to the window boundary."""
    members = as_members(S)
    dist = np.full(window.n_vertices, -1, dtype=np.int64)
    queue = collections.deque()
    for b in np.flatnonzero(window.boundary_mask):
        dist[b] = 0
        queue.append(int(b))
    while queue:
        u = queue.popleft()
        for w in window.adjacency[u]:
            w = int(w)
            if dist[w] < 0:
                dist[w] = dist[u] + 1
                queue.append(w)
    return int(min(dist[v] for v in members))
