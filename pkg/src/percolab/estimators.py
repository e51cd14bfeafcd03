"""Monte Carlo estimators with confidence intervals and bound-vs-estimate verdicts.

Sampling is deterministic in (seed, config): each sample index owns a
counter-based label stream, per-sample statistics are integers, and reduction
is associative summation, so results are identical for any worker count.
Shared seeds across estimators realize the monotone coupling for free.
"""

from __future__ import annotations

import math
import multiprocessing
from dataclasses import dataclass, replace

import numpy as np
import scipy.stats

from . import kernels
from .errors import DomainError
from .graph_core import (
    GraphWindow,
    as_members,
    boundary_margin,
    oriented_edge_boundary,
)
from .percolation import (
    assign_uniforms,
    clusters,
    count_edge_disjoint_paths,
    reachable_off,
    threshold,
    _count_between,
)

_CHUNK = 512  # fixed chunk size keeps reduction independent of worker count


@dataclass(frozen=True)
class MCResult:
    """Point estimate with a two-sided confidence interval and reproducibility
    metadata; rerunning with identical metadata reproduces identical numbers."""

    estimate: float
    ci_low: float
    ci_high: float
    samples: int
    successes: int | None
    seed: int
    level: float = 0.99
    config_hash: str = ""
    warnings: tuple[str, ...] = ()

    def with_hash(self, config_hash: str) -> "MCResult":
        return replace(self, config_hash=config_hash)


@dataclass(frozen=True)
class BoundVerdict:
    """Comparison of a proved bound against a Monte Carlo estimate."""

    check: str
    bound: float
    estimate: MCResult
    direction: str            # "upper": bound should dominate the estimate
    slack: float
    verdict: str              # consistent | violated | vacuous
    caveat: str = ""


def wilson_interval(successes: int, trials: int, level: float = 0.99) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials == 0:
        return 0.0, 1.0
    z = scipy.stats.norm.ppf(1.0 - (1.0 - level) / 2.0)
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    margin = (z / denom) * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials**2))
    # at phat = 0 or 1 the interval endpoint equals phat exactly; keep it there
    # despite float rounding in center +/- margin
    lo = 0.0 if successes == 0 else max(0.0, float(center - margin))
    hi = 1.0 if successes == trials else min(1.0, float(center + margin))
    return lo, hi


def _binomial_result(successes, trials, seed, level, warnings=()) -> MCResult:
    lo, hi = wilson_interval(successes, trials, level)
    return MCResult(
        estimate=successes / trials,
        ci_low=lo,
        ci_high=hi,
        samples=trials,
        successes=successes,
        seed=seed,
        level=level,
        warnings=tuple(warnings),
    )


def _mean_result(total, total_sq, trials, seed, level, warnings=()) -> MCResult:
    mean = total / trials
    var = max(0.0, total_sq / trials - mean * mean) * trials / max(1, trials - 1)
    z = scipy.stats.norm.ppf(1.0 - (1.0 - level) / 2.0)
    half = z * math.sqrt(var / trials)
    return MCResult(
        estimate=mean,
        ci_low=mean - half,
        ci_high=mean + half,
        samples=trials,
        successes=None,
        seed=seed,
        level=level,
        warnings=tuple(warnings),
    )


def verdict_upper(check, bound, mc: MCResult, caveat: str = "", vacuous_at=1.0) -> BoundVerdict:
    """Verdict for 'estimated probability <= bound'."""
    if bound >= vacuous_at:
        verdict = "vacuous"
    elif mc.ci_low > bound:
        verdict = "violated"
    else:
        verdict = "consistent"
    return BoundVerdict(check, bound, mc, "upper", bound - mc.ci_low, verdict, caveat)


def verdict_lower(check, bound, mc: MCResult, caveat: str = "") -> BoundVerdict:
    """Verdict for 'estimated quantity >= bound'."""
    if bound <= 0.0:
        verdict = "vacuous"
    elif mc.ci_high < bound:
        verdict = "violated"
    else:
        verdict = "consistent"
    return BoundVerdict(check, bound, mc, "lower", mc.ci_high - bound, verdict, caveat)


# ---------------------------------------------------------------------------
# deterministic sample reduction


def _chunk_worker(task):
    fn, window, params, seed, lo, hi = task
    acc = None
    for i in range(lo, hi):
        stats = fn(window, params, seed, i)
        acc = stats if acc is None else acc + stats
    return acc


def run_reduce(fn, window, params, seed, samples, workers=1) -> np.ndarray:
    """Sum per-sample integer statistics over sample indices 0..samples-1."""
    if samples < 1:
        raise DomainError(f"samples must be >= 1, got {samples}")
    tasks = [
        (fn, window, params, seed, lo, min(lo + _CHUNK, samples))
        for lo in range(0, samples, _CHUNK)
    ]
    if workers <= 1 or len(tasks) == 1:
        parts = [_chunk_worker(t) for t in tasks]
    else:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(processes=workers) as pool:
            parts = pool.map(_chunk_worker, tasks)
    total = parts[0]
    for part in parts[1:]:
        total = total + part
    return total


def _margin_warnings(window: GraphWindow, S) -> list[str]:
    dmax = _max_boundary_distance(window)
    required = max(1, dmax // 2)
    margin = boundary_margin(window, S)
    if margin < required:
        return [f"boundary margin {margin} below recommended {required}"]
    return []


def _max_boundary_distance(window: GraphWindow) -> int:
    import collections

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
    return int(dist.max())


# ---------------------------------------------------------------------------
# estimator kernels (top-level so they pickle into worker processes)


def _kernel_disconnect(window, params, seed, i):
    config = threshold(assign_uniforms(window, seed, i), params["p"])
    part = clusters(window, config)
    disconnected = not any(part.is_pseudo_infinite(v) for v in params["S"])
    return np.array([1 if disconnected else 0], dtype=np.int64)


def _kernel_psi_sum(window, params, seed, i):
    config = threshold(assign_uniforms(window, seed, i), params["p"])
    reach = reachable_off(window, config, params["S"])
    count = int(np.count_nonzero(reach[params["heads"]]))
    return np.array([count, count * count], dtype=np.int64)


def _kernel_cluster_tail(window, params, seed, i):
    config = threshold(assign_uniforms(window, seed, i), params["p"])
    part = clusters(window, config)
    v = params["v"]
    finite = not part.is_pseudo_infinite(v)
    size = part.size_of(v)
    ek = part.edge_count_of(v)
    tail = [(1 if finite and size >= n else 0) for n in params["n_grid"]]
    ek_hits = [(1 if ek == n else 0) for n in params["ek_grid"]]
    return np.array([1 if finite else 0] + tail + ek_hits, dtype=np.int64)


def _kernel_repulsion(window, params, seed, i):
    labels = assign_uniforms(window, seed, i)
    part2 = clusters(window, threshold(labels, params["p2"]))
    v = params["v"]
    if part2.is_pseudo_infinite(v):
        return np.zeros(len(params["n_grid"]), dtype=np.int64)
    k2 = part2.root == part2.root[v]
    inf1 = clusters(window, threshold(labels, params["p1"])).infinite_mask()
    t = _count_between(window, k2, inf1)
    return np.array([(1 if t >= n else 0) for n in params["n_grid"]], dtype=np.int64)


def _kernel_ir(window, params, seed, i):
    config = threshold(assign_uniforms(window, seed, i), params["p"])
    paths = count_edge_disjoint_paths(window, config, params["S"])
    return np.array([1 if paths >= params["r"] + 1 else 0], dtype=np.int64)


# ---------------------------------------------------------------------------
# public estimators


def est_disconnect_prob(window, S, p, samples, seed, *, level=0.99, workers=1) -> MCResult:
    """P_p(S not connected to the window boundary)."""
    members = as_members(S)
    warnings = _margin_warnings(window, members)
    total = run_reduce(
        _kernel_disconnect, window, {"p": p, "S": members}, seed, samples, workers
    )
    return _binomial_result(int(total[0]), samples, seed, level, warnings)


def est_psi_sum(window, S, p, samples, seed, *, level=0.99, workers=1) -> MCResult:
    """Expected number of outward boundary edges whose head reaches the
    boundary off S; range [0, |edge boundary of S|]."""
    members = as_members(S)
    warnings = _margin_warnings(window, members)
    heads = np.array([e.head for e in oriented_edge_boundary(window, members)], dtype=np.int64)
    total = run_reduce(
        _kernel_psi_sum,
        window,
        {"p": p, "S": members, "heads": heads},
        seed,
        samples,
        workers,
    )
    return _mean_result(int(total[0]), int(total[1]), samples, seed, level, warnings)


def est_cluster_tail(
    window, v, p, n_grid, samples, seed, *, ek_grid=(), level=0.99, workers=1
):
    """Per-n estimates of P_p(n <= |K_v| < infinity) and P_p(|E(K_v)| = n).

    All estimates share one sample stream.  Returns (tail, edge_count, finite)
    where tail and edge_count map n to MCResult and finite is the MCResult for
    P(|K_v| < infinity).
    """
    n_grid = tuple(int(n) for n in n_grid)
    ek_grid = tuple(int(n) for n in ek_grid)
    warnings = _margin_warnings(window, [v])
    params = {"p": p, "v": int(v), "n_grid": n_grid, "ek_grid": ek_grid}
    total = run_reduce(_kernel_cluster_tail, window, params, seed, samples, workers)
    finite = _binomial_result(int(total[0]), samples, seed, level, warnings)
    tail = {
        n: _binomial_result(int(total[1 + j]), samples, seed, level, warnings)
        for j, n in enumerate(n_grid)
    }
    offset = 1 + len(n_grid)
    edge_count = {
        n: _binomial_result(int(total[offset + j]), samples, seed, level, warnings)
        for j, n in enumerate(ek_grid)
    }
    return tail, edge_count, finite


def est_repulsion_tail(window, v, p1, p2, n_grid, samples, seed, *, level=0.99, workers=1):
    """Per-n estimates of P(|K_{v,p2}| finite and tau(K_{v,p2}, K_inf,p1) >= n)."""
    if not 0.0 < p1 < p2 < 1.0:
        raise DomainError(f"need 0 < p1 < p2 < 1, got ({p1}, {p2})")
    n_grid = tuple(int(n) for n in n_grid)
    params = {"p1": p1, "p2": p2, "v": int(v), "n_grid": n_grid}
    total = run_reduce(_kernel_repulsion, window, params, seed, samples, workers)
    return {
        n: _binomial_result(int(total[j]), samples, seed, level)
        for j, n in enumerate(n_grid)
    }


def est_Ir_prob(window, S, p, r, samples, seed, *, level=0.99, workers=1) -> MCResult:
    """P_p(the connection S <-> boundary survives removal of any r edges),
    computed via the Menger equivalence as P(>= r+1 edge-disjoint open paths)."""
    if r < 0:
        raise DomainError(f"r must be >= 0, got {r}")
    members = as_members(S)
    total = run_reduce(
        _kernel_ir, window, {"p": p, "S": members, "r": int(r)}, seed, samples, workers
    )
    return _binomial_result(int(total[0]), samples, seed, level)


def est_capacity(window, S, walkers, max_steps, seed, *, level=0.99) -> MCResult:
    """Cap(S) = sum over v in S of deg(v) * P_v(escape to boundary before
    returning to S), each escape probability from independent random walks."""
    members = as_members(S)
    warnings = _margin_warnings(window, members)
    s_mask = np.zeros(window.n_vertices, dtype=bool)
    s_mask[list(members)] = True
    if np.any(s_mask & window.boundary_mask):
        raise DomainError("S must be interior (disjoint from the boundary)")
    neigh_ptr = np.zeros(window.n_vertices + 1, dtype=np.int64)
    neigh_ptr[1:] = np.cumsum(window.degrees)
    neigh_flat = np.concatenate(window.adjacency).astype(np.int64)
    cap = 0.0
    var = 0.0
    total_escapes = 0
    total_truncated = 0
    for v in members:
        escapes, truncated = kernels.escape_walks(
            neigh_flat,
            neigh_ptr,
            int(v),
            s_mask,
            window.boundary_mask,
            int(walkers),
            int(max_steps),
            np.uint64(seed & 0xFFFFFFFFFFFFFFFF),
        )
        total_escapes += escapes
        total_truncated += truncated
        phat = escapes / walkers
        deg = float(window.degrees[v])
        cap += deg * phat
        var += deg * deg * phat * (1 - phat) / walkers
    if total_truncated > 0.01 * walkers * len(members):
        warnings.append(
            f"{total_truncated} walks hit max_steps={max_steps} (> 1%), counted as non-escapes"
        )
    z = scipy.stats.norm.ppf(1.0 - (1.0 - level) / 2.0)
    half = z * math.sqrt(var)
    return MCResult(
        estimate=cap,
        ci_low=max(0.0, cap - half),
        ci_high=cap + half,
        samples=int(walkers) * len(members),
        successes=total_escapes,
        seed=seed,
        level=level,
        warnings=tuple(warnings),
    )


def markov_lower_bound(mean: float, M: float, theta: float) -> float:
    """(1 - theta) * mean / M, the reverse-Markov lower bound on
    P(X > theta * E X) for X in [0, M]."""
    if not 0.0 < theta < 1.0:
        raise DomainError(f"theta must lie in (0, 1), got {theta}")
    if M <= 0:
        raise DomainError(f"M must be positive, got {M}")
    if not 0.0 <= mean <= M:
        raise DomainError(f"mean must lie in [0, M], got {mean}")
    return (1.0 - theta) * mean / M


def dgrsy_cross_check(
    window, S, p, samples, seed, *, walkers=20000, max_steps=100000, level=0.99, workers=1
) -> BoundVerdict:
    """Compare the disconnection estimate against exp(-Cap(S)/2).

    The bound is proved for uniform dimension > 4 and p above an unknown
    threshold; outside that regime the verdict carries an explicit caveat.
    """
    disc = est_disconnect_prob(window, S, p, samples, seed, level=level, workers=workers)
    cap = est_capacity(window, S, walkers, max_steps, seed, level=level)
    bound = math.exp(-0.5 * cap.estimate)
    caveats = []
    d = window.params.get("d") if window.family == "hypercubic" else None
    if d is not None and d <= 4:
        caveats.append(f"informative only: window dimension d={d} <= 4")
    caveats.append("informative only: p may lie below the unknown threshold p0")
    return verdict_upper("dgrsy", bound, disc, caveat="; ".join(caveats))
