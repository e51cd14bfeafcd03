"""Bound-vs-estimate checks: every proved inequality gets a verdict.

Each check returns BoundVerdict rows.  Statistical checks use the acceptance
slack convention (empirical frequency within 3 standard errors of the bound);
per-sample identities are exact and any failing sample is a violation.
"""

from __future__ import annotations

import math

import numpy as np

from . import exact
from .errors import DomainError
from .estimators import (
    BoundVerdict,
    MCResult,
    dgrsy_cross_check,
    est_disconnect_prob,
    est_Ir_prob,
    run_reduce,
    wilson_interval,
)
from .exploration import azuma_bound, explore_cluster, explore_off_infinity
from .graph_core import as_members, oriented_edge_boundary
from .isoperimetry import bad_set_search, psi, IsoFunction
from .percolation import (
    assign_uniforms,
    clusters,
    count_edge_disjoint_paths,
    hull,
    open_oriented_boundary,
    reachable_off,
    threshold,
    _count_between,
)


def _mc(successes, trials, seed, level=0.99) -> MCResult:
    lo, hi = wilson_interval(successes, trials, level)
    return MCResult(successes / trials, lo, hi, trials, successes, seed, level)


def _upper_3se(check, bound, successes, trials, seed, caveat="") -> BoundVerdict:
    """Consistent iff empirical frequency <= bound + 3*SE."""
    phat = successes / trials
    se = math.sqrt(max(phat * (1 - phat), 1e-12) / trials)
    if bound >= 1.0:
        verdict = "vacuous"
    elif phat > bound + 3 * se:
        verdict = "violated"
    else:
        verdict = "consistent"
    return BoundVerdict(check, bound, _mc(successes, trials, seed), "upper",
                        bound + 3 * se - phat, verdict, caveat)


def _lower_3se(check, bound, successes, trials, seed, caveat="") -> BoundVerdict:
    """Consistent iff empirical frequency >= bound - 3*SE."""
    phat = successes / trials
    se = math.sqrt(max(phat * (1 - phat), 1e-12) / trials)
    if bound <= 0.0:
        verdict = "vacuous"
    elif phat < bound - 3 * se:
        verdict = "violated"
    else:
        verdict = "consistent"
    return BoundVerdict(check, bound, _mc(successes, trials, seed), "lower",
                        phat - (bound - 3 * se), verdict, caveat)


def _all_pass(check, passed, trials, seed, caveat="") -> BoundVerdict:
    verdict = "consistent" if passed == trials else "violated"
    return BoundVerdict(check, 1.0, _mc(passed, trials, seed), "exact",
                        float(passed - trials), verdict, caveat)


# ---------------------------------------------------------------------------
# coupling monotonicity (exact, per instance)


def check_coupling_monotonicity(window, instances, seed) -> list[BoundVerdict]:
    """p1-open subset of p2-open for random (labels, p1 <= p2) instances."""
    rng = np.random.default_rng(seed)
    passed = 0
    for i in range(instances):
        labels = assign_uniforms(window, seed, i)
        p1, p2 = sorted(rng.uniform(0.0, 1.0, size=2))
        open1 = threshold(labels, p1).open
        open2 = threshold(labels, p2).open
        if not np.any(open1 & ~open2):
            passed += 1
    return [_all_pass("coupling_monotonicity", passed, instances, seed)]


# ---------------------------------------------------------------------------
# exhaustive-oracle equivalence on tiny windows


def _kernel_exhaustive(window, params, seed, i):
    labels = assign_uniforms(window, seed, i)
    config = threshold(labels, params["p"])
    part = clusters(window, config)
    S = params["S"]
    v = params["v"]
    disconnected = not any(part.is_pseudo_infinite(u) for u in S)
    reach = reachable_off(window, config, S)
    psi_count = int(np.count_nonzero(reach[params["heads"]]))
    finite = not part.is_pseudo_infinite(v)
    size = part.size_of(v)
    ek = part.edge_count_of(v)
    paths = count_edge_disjoint_paths(window, config, S)
    tail = [(1 if finite and size >= n else 0) for n in params["n_grid"]]
    ek_hits = [(1 if ek == n else 0) for n in params["n_grid"]]
    ir = [(1 if paths >= r + 1 else 0) for r in params["r_grid"]]
    # coupled repulsion at (p1, p2) from the same labels
    part2 = clusters(window, threshold(labels, params["p2"]))
    if part2.is_pseudo_infinite(v):
        rep = [0] * len(params["rep_grid"])
    else:
        k2 = part2.root == part2.root[v]
        inf1 = clusters(window, threshold(labels, params["p1"])).infinite_mask()
        t = _count_between(window, k2, inf1)
        rep = [(1 if t >= n else 0) for n in params["rep_grid"]]
    return np.array([1 if disconnected else 0, psi_count] + tail + ek_hits + ir + rep,
                    dtype=np.int64)


def check_exhaustive(window, S, v, p, p1, p2, samples, seeds, workers=1) -> list[BoundVerdict]:
    """Every estimator against full enumeration, plus the conditional-law TV.

    Consistent iff the exact value falls inside the estimator's 99% CI for
    every seed; the TV check requires < 1e-10 outright.
    """
    S = as_members(S)
    n_grid = (1, 2, 3)
    r_grid = (0, 1, 2)
    rep_grid = (1, 2)
    heads = np.array([e.head for e in oriented_edge_boundary(window, S)], dtype=np.int64)
    params = {"p": p, "p1": p1, "p2": p2, "S": S, "v": v, "heads": heads,
              "n_grid": n_grid, "r_grid": r_grid, "rep_grid": rep_grid}

    exact_disc = exact.exact_disconnect_prob(window, S, p)
    exact_psi = exact.exact_psi_sum(window, S, p)
    size_dist, _ = exact.exact_cluster_size_dist(window, v, p)
    exact_tail = {n: sum(q for k, q in size_dist.items() if k >= n) for n in n_grid}
    ek_dist = exact.exact_edge_count_dist(window, v, p)
    exact_ir = {r: exact.exact_Ir_prob(window, S, p, r) for r in r_grid}
    exact_rep = exact.exact_repulsion_tail(window, v, p1, p2, max(rep_grid))

    rows = []
    for seed in seeds:
        totals = run_reduce(_kernel_exhaustive, window, params, seed, samples, workers)
        idx = 0

        def prob_row(name, successes, target):
            lo, hi = wilson_interval(successes, samples, 0.99)
            verdict = "consistent" if lo <= target <= hi else "violated"
            return BoundVerdict(name, target, _mc(successes, samples, seed),
                                "oracle", min(target - lo, hi - target), verdict)

        rows.append(prob_row(f"exhaustive_disconnect[seed={seed}]", int(totals[0]), exact_disc))
        # psi sum: bounded count, normal CI on the mean
        mean = totals[1] / samples
        se = math.sqrt(len(heads) ** 2 / (4 * samples))  # conservative bounded-range SE
        verdict = "consistent" if abs(mean - exact_psi) <= 3 * se else "violated"
        rows.append(BoundVerdict(f"exhaustive_psi_sum[seed={seed}]", exact_psi,
                                 MCResult(mean, mean - 3 * se, mean + 3 * se, samples,
                                          None, seed),
                                 "oracle", 3 * se - abs(mean - exact_psi), verdict))
        idx = 2
        for j, n in enumerate(n_grid):
            rows.append(prob_row(f"exhaustive_tail[n={n},seed={seed}]",
                                 int(totals[idx + j]), exact_tail[n]))
        idx += len(n_grid)
        for j, n in enumerate(n_grid):
            rows.append(prob_row(f"exhaustive_edge_count[n={n},seed={seed}]",
                                 int(totals[idx + j]), ek_dist.get(n, 0.0)))
        idx += len(n_grid)
        for j, r in enumerate(r_grid):
            rows.append(prob_row(f"exhaustive_ir[r={r},seed={seed}]",
                                 int(totals[idx + j]), exact_ir[r]))
        idx += len(r_grid)
        for j, n in enumerate(rep_grid):
            rows.append(prob_row(f"exhaustive_repulsion[n={n},seed={seed}]",
                                 int(totals[idx + j]), exact_rep[n]))

    tv = exact.conditional_law_tv(window, p1, p2)
    rows.append(BoundVerdict("conditional_law_tv", 1e-10,
                             MCResult(tv, tv, tv, 0, None, 0),
                             "upper", 1e-10 - tv,
                             "consistent" if tv < 1e-10 else "violated"))
    return rows


# ---------------------------------------------------------------------------
# sprinkled cluster repulsion


def _kernel_repulsion_tail(window, params, seed, i):
    labels = assign_uniforms(window, seed, i)
    part2 = clusters(window, threshold(labels, params["p2"]))
    v = params["v"]
    if part2.is_pseudo_infinite(v):
        return np.zeros(len(params["n_grid"]), dtype=np.int64)
    k2 = part2.root == part2.root[v]
    inf1 = clusters(window, threshold(labels, params["p1"])).infinite_mask()
    t = _count_between(window, k2, inf1)
    return np.array([(1 if t >= n else 0) for n in params["n_grid"]], dtype=np.int64)


def check_sprinkled_repulsion(window, v, p1, p2, n_grid, samples, seed, workers=1) -> list[BoundVerdict]:
    """P(finite and tau >= n) <= ((1-p2)/(1-p1))^n + 3*SE per n."""
    n_grid = tuple(int(n) for n in n_grid)
    params = {"v": int(v), "p1": p1, "p2": p2, "n_grid": n_grid}
    totals = run_reduce(_kernel_repulsion_tail, window, params, seed, samples, workers)
    ratio = (1.0 - p2) / (1.0 - p1)
    return [
        _upper_3se(f"sprinkled_repulsion[n={n}]", ratio**n, int(totals[j]), samples, seed)
        for j, n in enumerate(n_grid)
    ]


# ---------------------------------------------------------------------------
# martingale cluster repulsion


def _kernel_azuma_event(window, params, seed, i):
    labels = assign_uniforms(window, seed, i)
    part = clusters(window, threshold(labels, params["p"]))
    v = params["v"]
    if part.is_pseudo_infinite(v):
        return np.zeros(len(params["pairs"]), dtype=np.int64)
    ek = part.edge_count_of(v)
    k_mask = part.root == part.root[v]
    t = _count_between(window, k_mask, part.infinite_mask())
    return np.array([(1 if ek <= m and t >= n else 0) for m, n in params["pairs"]],
                    dtype=np.int64)


def check_martingale_repulsion(window, v, p, pairs, samples, seed, workers=1) -> list[BoundVerdict]:
    """P(|E(K_v)| <= m and tau >= n) <= 2 exp(-p^2 n^2 / 8m) + 3*SE.

    Pairs with a vacuous closed-form bound are reported as vacuous.
    """
    pairs = tuple((int(m), int(n)) for m, n in pairs)
    params = {"v": int(v), "p": p, "pairs": pairs}
    totals = run_reduce(_kernel_azuma_event, window, params, seed, samples, workers)
    return [
        _upper_3se(f"martingale_repulsion[m={m},n={n}]", azuma_bound(p, n, m), int(totals[j]),
                   samples, seed)
        for j, (m, n) in enumerate(pairs)
    ]


# ---------------------------------------------------------------------------
# reverse Markov on exact discrete distributions


def check_markov(n_distributions, thetas, seed) -> list[BoundVerdict]:
    """Exact P(X > theta*EX) >= (1-theta)*EX/M for random bounded distributions."""
    from .estimators import markov_lower_bound

    rng = np.random.default_rng(seed)
    passed = {theta: 0 for theta in thetas}
    for _ in range(n_distributions):
        support = rng.choice(np.arange(0, 11), size=rng.integers(2, 7), replace=False)
        weights = rng.dirichlet(np.ones(len(support)))
        M = 10.0
        mean = float(np.dot(support, weights))
        for theta in thetas:
            p_exceed = float(weights[support > theta * mean].sum())
            if p_exceed >= markov_lower_bound(mean, M, theta) - 1e-12:
                passed[theta] += 1
    return [
        _all_pass(f"markov[theta={theta}]", passed[theta], n_distributions, seed)
        for theta in thetas
    ]


# ---------------------------------------------------------------------------
# sprinkling stability of robust connection


def _kernel_stability(window, params, seed, i):
    labels = assign_uniforms(window, seed, i)
    config1 = threshold(labels, params["p1"])
    part1 = clusters(window, config1)
    connected1 = 1 if any(part1.is_pseudo_infinite(u) for u in params["S"]) else 0
    config2 = threshold(labels, params["p2"])
    paths = count_edge_disjoint_paths(window, config2, params["S"])
    ir = [(1 if paths >= r + 1 else 0) for r in params["r_grid"]]
    return np.array([connected1] + ir, dtype=np.int64)


def check_sprinkling_stability(window, S, p1, p2, r_grid, samples, seed, workers=1) -> list[BoundVerdict]:
    """P_{p2}(I_r) >= 1 - (p2/(p2-p1))^r (1 - P_{p1}(S<->inf)) - 3*SE per r."""
    S = as_members(S)
    r_grid = tuple(int(r) for r in r_grid)
    params = {"S": S, "p1": p1, "p2": p2, "r_grid": r_grid}
    totals = run_reduce(_kernel_stability, window, params, seed, samples, workers)
    p_conn1 = totals[0] / samples
    rows = []
    for j, r in enumerate(r_grid):
        bound = 1.0 - (p2 / (p2 - p1)) ** r * (1.0 - p_conn1)
        rows.append(_lower_3se(f"sprinkling_stability[r={r}]", bound, int(totals[1 + j]), samples, seed))
    return rows


# ---------------------------------------------------------------------------
# union-bound isoperimetry (bad-set event)


def _kernel_bad_set(window, params, seed, i):
    labels = assign_uniforms(window, seed, i)
    config = threshold(labels, params["p"])
    part = clusters(window, config)
    v = params["v"]
    c = params["c"]
    phi = IsoFunction.power(params["dprime"])

    def limit(W):
        return (c / 4.0) * psi(phi, float(len(W)))

    hits = []
    for n in params["n_grid"]:
        witness = bad_set_search(window, config, part, v, n, limit)
        hits.append(1 if witness is not None else 0)
    return np.array(hits, dtype=np.int64)


def check_iso_union_bound(window, v, p, n_grid, c, samples, seed, *, dprime=2.0,
                 fit_at=4, C=None, workers=1) -> list[BoundVerdict]:
    """Empirical P(bad set at level n) vs C exp(-(c/2) phi(n)), phi = power(dprime).

    When C is None it is fitted so the bound is tight at n = fit_at.
    """
    n_grid = tuple(int(n) for n in n_grid)
    params = {"v": int(v), "p": p, "c": c, "dprime": dprime, "n_grid": n_grid}
    totals = run_reduce(_kernel_bad_set, window, params, seed, samples, workers)
    phi = IsoFunction.power(dprime)
    if C is None:
        if fit_at not in n_grid:
            raise DomainError(f"fit_at={fit_at} not in n_grid")
        p_ref = totals[n_grid.index(fit_at)] / samples
        C = p_ref * math.exp((c / 2.0) * phi(float(fit_at)))
    rows = []
    for j, n in enumerate(n_grid):
        bound = C * math.exp(-(c / 2.0) * phi(float(n)))
        rows.append(_upper_3se(f"iso_union_bound[n={n}]", min(bound, 1.0), int(totals[j]),
                               samples, seed, caveat=f"C={C:.6g} fitted, c={c:.4g}"))
    return rows


# ---------------------------------------------------------------------------
# hull identity and Menger lower bound (per-sample exact)


def _kernel_hull_menger(window, params, seed, i):
    config = threshold(assign_uniforms(window, seed, i), params["p"])
    S = params["S"]
    reach = reachable_off(window, config, S)
    gamma = hull(window, config, S)
    lhs = {
        e.edge
        for e in params["oriented"]
        if config.open[e.edge] and reach[e.head]
    }
    rhs = {e.edge for e in open_oriented_boundary(window, config, gamma)}
    hull_ok = lhs == rhs
    indicator_sum = int(np.count_nonzero(reach[params["heads"]]))
    paths = count_edge_disjoint_paths(window, config, S)
    return np.array([1 if hull_ok else 0, 1 if indicator_sum >= paths else 0],
                    dtype=np.int64)


def check_hull_menger(window, S, p_list, samples, seed, workers=1) -> list[BoundVerdict]:
    """Exact per-sample set equality of the open hull boundary, and the
    edge-disjoint-path lower bound on the boundary indicator sum."""
    S = as_members(S)
    oriented = oriented_edge_boundary(window, S)
    heads = np.array([e.head for e in oriented], dtype=np.int64)
    rows = []
    for p in p_list:
        params = {"p": p, "S": S, "oriented": oriented, "heads": heads}
        totals = run_reduce(_kernel_hull_menger, window, params, seed, samples, workers)
        rows.append(_all_pass(f"hull_identity[p={p}]", int(totals[0]), samples, seed))
        rows.append(_all_pass(f"menger_lower_bound[p={p}]", int(totals[1]), samples, seed))
    return rows


# ---------------------------------------------------------------------------
# exploration identities (per-sample exact)


def _kernel_exploration(window, params, seed, i):
    labels = assign_uniforms(window, seed, i)
    p = params["p"]
    v = params["v"]
    trace = explore_cluster(window, labels, p, v)
    reversed_trace = explore_cluster(window, labels, p, v, reverse=True)
    order_ok = trace.stopped == reversed_trace.stopped
    if trace.stopped and reversed_trace.stopped:
        order_ok = order_ok and abs(trace.z_final - reversed_trace.z_final) < 1e-9
    if not trace.stopped:
        return np.array([0, 1, 1, 1 if order_ok else 0], dtype=np.int64)
    config = threshold(labels, p)
    part = clusters(window, config)
    k_mask = part.root == part.root[v]
    open_in_k = int(np.count_nonzero(
        config.open & k_mask[window.edges[:, 0]] & k_mask[window.edges[:, 1]]
    ))
    closed_touching = part.edge_count_of(v) - open_in_k
    expected_z = (1.0 - p) * open_in_k - p * closed_touching
    id1_ok = abs(trace.z_final - expected_z) < 1e-9
    tilde = explore_off_infinity(window, labels, p, v)
    t = _count_between(window, k_mask, part.infinite_mask())
    id2_ok = tilde.stopped and abs(tilde.z_final - trace.z_final - p * t) < 1e-9
    return np.array([1, 1 if id1_ok else 0, 1 if id2_ok else 0,
                     1 if order_ok else 0], dtype=np.int64)


def check_exploration_identities(window, v, p, samples, seed, workers=1) -> list[BoundVerdict]:
    """Z_T decomposition, Z~ - Z = p*tau, and order invariance, every sample."""
    params = {"p": p, "v": int(v)}
    totals = run_reduce(_kernel_exploration, window, params, seed, samples, workers)
    stopped = int(totals[0])
    rows = [
        _all_pass(f"exploration_z_identity[p={p}]", int(totals[1]), samples, seed,
                  caveat=f"{stopped} finite traces"),
        _all_pass(f"exploration_ztilde_identity[p={p}]", int(totals[2]), samples, seed,
                  caveat=f"{stopped} finite traces"),
        _all_pass(f"exploration_order_invariance[p={p}]", int(totals[3]), samples, seed),
    ]
    return rows


def check_dgrsy(window, S, p, samples, seed, workers=1, **kwargs) -> list[BoundVerdict]:
    return [dgrsy_cross_check(window, S, p, samples, seed, workers=workers, **kwargs)]
