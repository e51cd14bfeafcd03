"""Exhaustive enumeration oracles for tiny windows.

Everything here is exact (up to float arithmetic) and independent of the Monte
Carlo sampling paths: configurations are enumerated with their binomial
weights, coupling states with their trinomial weights, and walk quantities are
solved as sparse linear systems.
"""

from __future__ import annotations

import itertools
from collections import defaultdict

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .errors import DomainError, EnumerationGuardError
from .graph_core import GraphWindow, as_members, oriented_edge_boundary
from .percolation import (
    Configuration,
    clusters,
    count_edge_disjoint_paths,
    reachable_off,
    _count_between,
    _member_mask,
)

CONFIG_GUARD = 20   # 2^M states
COUPLING_GUARD = 13  # 3^M states


def _check_guard(m: int, guard: int, base: int) -> None:
    if m > guard:
        raise EnumerationGuardError(
            f"{base}^{m} states exceed the exhaustive guard ({base}^{guard})"
        )


def iter_configs(window: GraphWindow, p: float):
    """All 2^M open/closed configurations with their probabilities."""
    m = window.n_edges
    _check_guard(m, CONFIG_GUARD, 2)
    for bits in itertools.product((False, True), repeat=m):
        open_mask = np.array(bits, dtype=bool)
        k = int(open_mask.sum())
        prob = (p**k) * ((1.0 - p) ** (m - k))
        yield Configuration(open=open_mask, p=p), prob


def iter_coupling_states(window: GraphWindow, p1: float, p2: float):
    """All 3^M joint states of the monotone coupling at (p1, p2).

    Per edge: open at both levels (prob p1), open only at p2 (p2 - p1), or
    closed at both (1 - p2).  Yields (config_p1, config_p2, probability).
    """
    if not 0.0 < p1 < p2 < 1.0:
        raise DomainError(f"need 0 < p1 < p2 < 1, got ({p1}, {p2})")
    m = window.n_edges
    _check_guard(m, COUPLING_GUARD, 3)
    weights = (p1, p2 - p1, 1.0 - p2)
    for states in itertools.product((0, 1, 2), repeat=m):
        arr = np.array(states)
        open1 = arr == 0
        open2 = arr <= 1
        prob = 1.0
        for s in states:
            prob *= weights[s]
        yield Configuration(open1, p1), Configuration(open2, p2), prob


def exact_disconnect_prob(window: GraphWindow, S, p: float) -> float:
    """P_p(no vertex of S lies in a pseudo-infinite cluster)."""
    s_members = list(as_members(S))
    total = 0.0
    for config, prob in iter_configs(window, p):
        part = clusters(window, config)
        if not any(part.is_pseudo_infinite(v) for v in s_members):
            total += prob
    return total


def exact_psi_sum(window: GraphWindow, S, p: float) -> float:
    """Sum over outward boundary edges of P_p(head <-> infinity off S)."""
    heads = [e.head for e in oriented_edge_boundary(window, S)]
    total = 0.0
    for config, prob in iter_configs(window, p):
        reach = reachable_off(window, config, S)
        total += prob * sum(1 for h in heads if reach[h])
    return total


def exact_cluster_size_dist(window: GraphWindow, v: int, p: float):
    """(dict size -> P(|K_v| = size, finite), P(pseudo-infinite))."""
    dist: dict[int, float] = defaultdict(float)
    p_inf = 0.0
    for config, prob in iter_configs(window, p):
        part = clusters(window, config)
        if part.is_pseudo_infinite(v):
            p_inf += prob
        else:
            dist[part.size_of(v)] += prob
    return dict(dist), p_inf


def exact_edge_count_dist(window: GraphWindow, v: int, p: float) -> dict[int, float]:
    """dict n -> P(|E(K_v)| = n) (finite or not)."""
    dist: dict[int, float] = defaultdict(float)
    for config, prob in iter_configs(window, p):
        part = clusters(window, config)
        dist[part.edge_count_of(v)] += prob
    return dict(dist)


def exact_Ir_prob(window: GraphWindow, S, p: float, r: int) -> float:
    """P_p(at least r+1 edge-disjoint open paths from S to the boundary)."""
    if r < 0:
        raise DomainError(f"r must be >= 0, got {r}")
    total = 0.0
    for config, prob in iter_configs(window, p):
        if count_edge_disjoint_paths(window, config, S) >= r + 1:
            total += prob
    return total


def exact_repulsion_tail(window: GraphWindow, v: int, p1: float, p2: float, n_max: int):
    """dict n -> P(|K_{v,p2}| finite and tau(K_{v,p2}, K_inf,p1) >= n), n = 0..n_max."""
    tail = np.zeros(n_max + 1)
    for config1, config2, prob in iter_coupling_states(window, p1, p2):
        part2 = clusters(window, config2)
        if part2.is_pseudo_infinite(v):
            continue
        k2 = part2.root == part2.root[v]
        inf1 = clusters(window, config1).infinite_mask()
        t = _count_between(window, k2, inf1)
        tail[: min(t, n_max) + 1] += prob
    return {n: float(tail[n]) for n in range(n_max + 1)}


def conditional_law_tv(window: GraphWindow, p1: float, p2: float) -> float:
    """Exact total-variation check of the off-infinity conditional law.

    Conditional on the union K of pseudo-infinite p1-clusters, the p2-statuses
    of edges with both endpoints outside K should be independent Bernoulli(p2).
    Returns the maximum TV distance over conditioning classes with positive
    probability.
    """
    groups: dict[tuple, dict[tuple, float]] = defaultdict(lambda: defaultdict(float))
    eu = window.edges[:, 0]
    ev = window.edges[:, 1]
    for config1, config2, prob in iter_coupling_states(window, p1, p2):
        inf1 = clusters(window, config1).infinite_mask()
        key = tuple(np.flatnonzero(inf1))
        off = np.flatnonzero(~inf1[eu] & ~inf1[ev])
        value = tuple(bool(config2.open[e]) for e in off)
        groups[key][value] += prob
    worst = 0.0
    for dist in groups.values():
        mass = sum(dist.values())
        if mass <= 0:
            continue
        n_off = len(next(iter(dist)))
        tv = 0.0
        for bits in itertools.product((False, True), repeat=n_off):
            target = 1.0
            for b in bits:
                target *= p2 if b else (1.0 - p2)
            tv += abs(dist.get(bits, 0.0) / mass - target)
        worst = max(worst, 0.5 * tv)
    return worst


def exact_escape_probabilities(window: GraphWindow, S) -> dict[int, float]:
    """P_v(simple random walk hits the boundary before returning to S), v in S.

    Solved as a sparse linear system for the harmonic function with value 1 on
    the boundary and 0 on S; independent of any walk simulation.
    """
    s_mask = _member_mask(window, S)
    if np.any(s_mask & window.boundary_mask):
        raise DomainError("S must be interior (disjoint from the boundary)")
    n = window.n_vertices
    free = ~s_mask & ~window.boundary_mask
    free_idx = np.flatnonzero(free)
    pos = {int(v): i for i, v in enumerate(free_idx)}
    rows, cols, vals = [], [], []
    rhs = np.zeros(len(free_idx))
    for i, v in enumerate(free_idx):
        v = int(v)
        rows.append(i)
        cols.append(i)
        vals.append(float(window.degrees[v]))
        for w in window.adjacency[v]:
            w = int(w)
            if free[w]:
                rows.append(i)
                cols.append(pos[w])
                vals.append(-1.0)
            elif window.boundary_mask[w]:
                rhs[i] += 1.0
            # neighbors in S contribute 0
    if len(free_idx):
        A = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(len(free_idx),) * 2)
        h_free = scipy.sparse.linalg.spsolve(A, rhs)
    else:
        h_free = np.zeros(0)
    h = np.zeros(n)
    h[window.boundary_mask] = 1.0
    h[free_idx] = h_free
    out = {}
    for v in as_members(S):
        out[v] = float(sum(h[int(w)] for w in window.adjacency[v]) / window.degrees[v])
    return out


def exact_capacity(window: GraphWindow, S) -> float:
    """Sum over S of deg(v) * exact escape probability."""
    esc = exact_escape_probabilities(window, S)
    return float(sum(window.degrees[v] * esc[v] for v in esc))
