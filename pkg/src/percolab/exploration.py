"""Edge-by-edge cluster exploration martingales and the Azuma tail bound.

Two explorations are provided: the plain one (Z), which queries edges adjacent
to the revealed cluster in a fixed global edge order, and the off-infinity one
(Z~), which first reveals every pseudo-infinite cluster for free and then
explores the cluster of v in the complement.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .graph_core import GraphWindow
from .percolation import EdgeLabels, clusters, threshold


@dataclass(frozen=True)
class ExplorationTrace:
    """Ordered edge queries with their open/closed statuses.

    ``stopped`` is False when the revealed cluster touched the window boundary
    before the exploration could finish (the window proxy for an infinite
    cluster); final-value fields are None in that case.
    """

    v: int
    p: float
    queried: tuple[int, ...]
    status: np.ndarray          # open flag per queried edge
    stopped: bool
    v_in_infinite: bool = False

    @property
    def n_open(self) -> int:
        return int(np.count_nonzero(self.status))

    @property
    def n_closed(self) -> int:
        return len(self.queried) - self.n_open

    @property
    def increments(self) -> np.ndarray:
        return np.where(self.status, 1.0 - self.p, -self.p)

    @property
    def partial_sums(self) -> np.ndarray:
        return np.cumsum(self.increments)

    @property
    def T(self):
        return len(self.queried) if self.stopped else None

    @property
    def z_final(self):
        if not self.stopped:
            return None
        return (1.0 - self.p) * self.n_open - self.p * self.n_closed


def _explore(window, labels, p, v, skip_edges=None, reverse=False):
    key = (lambda e: -e) if reverse else (lambda e: e)
    in_cluster = {v}
    heap: list[int] = []
    enqueued = set()

    def push_incident(u):
        for e in window.incident_edges[u]:
            e = int(e)
            if e in enqueued:
                continue
            if skip_edges is not None and skip_edges[e]:
                continue
            enqueued.add(e)
            heapq.heappush(heap, key(e))

    if window.boundary_mask[v]:
        return ExplorationTrace(v, p, (), np.zeros(0, dtype=bool), stopped=False)
    push_incident(v)

    queried = []
    status = []
    stopped = True
    while heap:
        e = key(heapq.heappop(heap))
        is_open = bool(labels.labels[e] < p)
        queried.append(e)
        status.append(is_open)
        if is_open:
            hit_boundary = False
            for w in window.edges[e]:
                w = int(w)
                if w in in_cluster:
                    continue
                in_cluster.add(w)
                if window.boundary_mask[w]:
                    hit_boundary = True
                    break
                push_incident(w)
            if hit_boundary:
                stopped = False
                break
    return ExplorationTrace(v, p, tuple(queried), np.array(status, dtype=bool), stopped=stopped)


def explore_cluster(
    window: GraphWindow, labels: EdgeLabels, p: float, v: int, reverse: bool = False
) -> ExplorationTrace:
    """The Z martingale: explore the cluster of v edge by edge.

    Queries follow the global lexicographic edge index (reversed when
    ``reverse`` is set) restricted to unqueried edges adjacent to the revealed
    cluster; stops once every edge touching K_v has been queried.
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p}")
    return _explore(window, labels, p, v, reverse=reverse)


def explore_off_infinity(
    window: GraphWindow, labels: EdgeLabels, p: float, v: int, reverse: bool = False
) -> ExplorationTrace:
    """The Z~ martingale: pseudo-infinite clusters are revealed first for free.

    Edges touching the union of pseudo-infinite clusters are pre-queried and
    contribute no increments.  If v itself is pseudo-infinite the trace is
    empty with T = 0 and final value 0.
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p}")
    config = threshold(labels, p)
    part = clusters(window, config)
    if part.is_pseudo_infinite(v):
        return ExplorationTrace(
            v, p, (), np.zeros(0, dtype=bool), stopped=True, v_in_infinite=True
        )
    inf_mask = part.infinite_mask()
    pre_queried = inf_mask[window.edges[:, 0]] | inf_mask[window.edges[:, 1]]
    return _explore(window, labels, p, v, skip_edges=pre_queried, reverse=reverse)


def azuma_bound(p: float, n: int, m: int) -> float:
    """Closed-form martingale tail bound 2*exp(-p^2 n^2 / (8 m)).

    Values >= 1 are vacuous; callers decide whether to flag them.
    """
    if n < 1 or m < 1:
        raise DomainError(f"need n, m >= 1, got n={n}, m={m}")
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p}")
    return 2.0 * math.exp(-(p * p * n * n) / (8.0 * m))
