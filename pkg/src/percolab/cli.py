"""Command-line harness: experiment orchestration, persistence, reporting.

Exit codes: 0 success, 1 configuration error, 2 at least one "violated"
verdict (so CI pipelines fail loudly on a broken inequality).
All result files are deterministic functions of (config, seed); timestamps
live only in the run manifest.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import json
import math
import os
import sys
from pathlib import Path

from . import __version__, verify
from .config import ExperimentConfig, resolve_set, resolve_vertex
from .errors import PercolabError
from .estimators import (
    dgrsy_cross_check,
    est_capacity,
    est_cluster_tail,
    est_disconnect_prob,
    est_Ir_prob,
    est_psi_sum,
    est_repulsion_tail,
)
from .exploration import explore_cluster, explore_off_infinity
from .graph_core import boundary_margin
from .isoperimetry import IsoFunction, anchored_profile, open_adjacency
from .percolation import assign_uniforms, clusters, threshold, _count_between

RESULT_COLUMNS = [
    "estimand", "p", "p1", "p2", "n", "r", "estimate", "ci_low", "ci_high",
    "samples", "successes", "seed", "config_hash", "bound", "verdict", "warnings",
]
VERDICT_COLUMNS = [
    "check", "direction", "bound", "estimate", "ci_low", "ci_high", "samples",
    "successes", "slack", "verdict", "caveat", "seed", "config_hash",
]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


class RunWriter:
    """Collects output files, removes partial outputs on failure, and writes
    an atomic manifest with content digests at the end."""

    def __init__(self, out_dir: Path, cfg: ExperimentConfig):
        self.out_dir = out_dir
        self.cfg = cfg
        self.files: list[Path] = []
        self.started = datetime.datetime.now(datetime.timezone.utc)

    def path(self, name: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        p = self.out_dir / name
        self.files.append(p)
        return p

    def write_csv(self, name: str, columns, rows) -> Path:
        p = self.path(name)
        with open(p, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_fmt(row.get(c)) for c in columns])
        return p

    def write_jsonl(self, name: str, records) -> Path:
        p = self.path(name)
        with open(p, "w") as fh:
            for rec in records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
        return p

    def cleanup(self) -> None:
        for p in self.files:
            try:
                p.unlink()
            except OSError:
                pass

    def finish(self) -> None:
        digests = {}
        previous = self.out_dir / "manifest.json"
        if previous.exists():
            # keep digests of outputs from an earlier command in the same dir
            try:
                digests.update(json.loads(previous.read_text()).get("outputs", {}))
            except (OSError, json.JSONDecodeError):
                pass
        for p in self.files:
            digests[p.name] = hashlib.sha256(p.read_bytes()).hexdigest()
        manifest = {
            "config_hash": self.cfg.hash,
            "tool_version": __version__,
            "started": self.started.isoformat(),
            "finished": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "outputs": digests,
        }
        tmp = self.out_dir / ".manifest.tmp"
        with open(tmp, "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, self.out_dir / "manifest.json")


def _mc_row(mc, **extra) -> dict:
    row = {
        "estimate": mc.estimate, "ci_low": mc.ci_low, "ci_high": mc.ci_high,
        "samples": mc.samples, "successes": mc.successes, "seed": mc.seed,
        "warnings": "; ".join(mc.warnings),
    }
    row.update(extra)
    return row


def cmd_estimate(cfg: ExperimentConfig, writer: RunWriter, workers: int) -> int:
    estimands = cfg.raw.get("estimands", [])
    if not estimands:
        raise PercolabError("no estimands in config")
    window = cfg.build_window()
    rows = []
    for est in estimands:
        kind = est["kind"]
        samples = int(est.get("samples", cfg.samples))
        seed = cfg.seed
        level = cfg.ci_level
        p_grid = est.get("p_grid", [est["p"]] if "p" in est else [])
        common = {"estimand": kind, "config_hash": cfg.hash}
        if kind == "disconnect":
            S = resolve_set(window, est["S"])
            for p in p_grid:
                mc = est_disconnect_prob(window, S, p, samples, seed,
                                         level=level, workers=workers)
                rows.append(_mc_row(mc, p=p, **common))
        elif kind == "psi_sum":
            S = resolve_set(window, est["S"])
            for p in p_grid:
                mc = est_psi_sum(window, S, p, samples, seed, level=level, workers=workers)
                rows.append(_mc_row(mc, p=p, **common))
        elif kind == "cluster_tail":
            v = resolve_vertex(window, est["v"])
            n_grid = est.get("n_grid", [1, 2, 4, 8])
            ek_grid = est.get("ek_grid", [])
            for p in p_grid:
                tail, ek, finite = est_cluster_tail(
                    window, v, p, n_grid, samples, seed,
                    ek_grid=ek_grid, level=level, workers=workers,
                )
                rows.append(_mc_row(finite, p=p, estimand="cluster_finite",
                                    config_hash=cfg.hash))
                for n, mc in tail.items():
                    rows.append(_mc_row(mc, p=p, n=n, **common))
                for n, mc in ek.items():
                    rows.append(_mc_row(mc, p=p, n=n, estimand="cluster_edge_count",
                                        config_hash=cfg.hash))
        elif kind == "capacity":
            S = resolve_set(window, est["S"])
            mc = est_capacity(window, S, est.get("walkers", samples),
                              est.get("max_steps", 100000), seed, level=level)
            rows.append(_mc_row(mc, **common))
        elif kind == "repulsion_tail":
            v = resolve_vertex(window, est["v"])
            n_grid = est.get("n_grid", [1, 2, 4])
            per_n = est_repulsion_tail(window, v, est["p1"], est["p2"], n_grid,
                                       samples, seed, level=level, workers=workers)
            for n, mc in per_n.items():
                rows.append(_mc_row(mc, p1=est["p1"], p2=est["p2"], n=n, **common))
        elif kind == "ir_prob":
            S = resolve_set(window, est["S"])
            r_grid = est.get("r_grid", [est.get("r", 0)])
            for p in p_grid:
                for r in r_grid:
                    mc = est_Ir_prob(window, S, p, r, samples, seed,
                                     level=level, workers=workers)
                    rows.append(_mc_row(mc, p=p, r=r, **common))
        elif kind == "dgrsy":
            S = resolve_set(window, est["S"])
            for p in p_grid:
                vd = dgrsy_cross_check(window, S, p, samples, seed,
                                       walkers=est.get("walkers", 20000),
                                       max_steps=est.get("max_steps", 100000),
                                       level=level, workers=workers)
                rows.append(_mc_row(vd.estimate, p=p, bound=vd.bound,
                                    verdict=vd.verdict, **common))
        else:
            raise PercolabError(f"unknown estimand kind {kind!r}")
    writer.write_csv("results.csv", RESULT_COLUMNS, rows)
    margin = _anchor_margin(cfg, window)
    if margin is not None:
        print(f"anchor boundary margin: {margin}")
    return 0


def _anchor_margin(cfg, window):
    margins = []
    for est in cfg.raw.get("estimands", []):
        for key in ("S", "v"):
            if key in est:
                try:
                    spec = est[key]
                    members = (resolve_set(window, spec) if key == "S"
                               else [resolve_vertex(window, spec)])
                    margins.append(boundary_margin(window, members))
                except PercolabError:
                    pass
    return min(margins) if margins else None


def cmd_simulate(cfg: ExperimentConfig, writer: RunWriter, workers: int) -> int:
    spec = cfg.raw.get("explore")
    if spec is None:
        raise PercolabError("no explore section in config")
    window = cfg.build_window()
    v = resolve_vertex(window, spec["v"])
    p = float(spec["p"])
    samples = int(spec.get("samples", cfg.samples))

    def records():
        for i in range(samples):
            labels = assign_uniforms(window, cfg.seed, i)
            trace = explore_cluster(window, labels, p, v)
            tilde = explore_off_infinity(window, labels, p, v)
            part = clusters(window, threshold(labels, p))
            k_mask = part.root == part.root[v]
            if part.is_pseudo_infinite(v):
                tau_v = None
            else:
                tau_v = _count_between(window, k_mask, part.infinite_mask())
            yield {
                "sample": i, "v": v, "p": p, "stopped": trace.stopped,
                "T": trace.T, "Z_T": trace.z_final,
                "T_tilde": tilde.T, "Z_tilde": tilde.z_final, "tau": tau_v,
                "config_hash": cfg.hash,
            }

    writer.write_jsonl("samples.jsonl", records())
    return 0


def cmd_profile(cfg: ExperimentConfig, writer: RunWriter, workers: int) -> int:
    spec = cfg.raw.get("profile")
    if spec is None:
        raise PercolabError("no profile section in config")
    window = cfg.build_window()
    v = resolve_vertex(window, spec["anchor"])
    phi = IsoFunction.power(float(spec.get("dprime", 2.0)))
    target = spec.get("target", "window")
    if target == "cluster":
        labels = assign_uniforms(window, cfg.seed, int(spec.get("sample_index", 0)))
        config = threshold(labels, float(spec["p"]))
        graph = open_adjacency(window, config)
    else:
        graph = window
    results = anchored_profile(
        graph, v, phi,
        int(spec.get("max_size", 8)),
        heuristic_sizes=spec.get("heuristic_sizes", ()),
        heuristic_budget=int(spec.get("heuristic_budget", 20000)),
        normalization=spec.get("normalization", "degree"),
        seed=cfg.seed,
    )
    rows = [
        {"n": r.n, "ratio": r.ratio, "exact": r.exact,
         "witness": "|".join(str(u) for u in r.witness),
         "seed": cfg.seed, "config_hash": cfg.hash}
        for r in results
    ]
    writer.write_csv("profile.csv", ["n", "ratio", "exact", "witness", "seed",
                                     "config_hash"], rows)
    return 0


def _run_check(window, cfg, check, workers):
    name = check["check"]
    seed = int(check.get("seed", cfg.seed))
    samples = int(check.get("samples", cfg.samples))
    if name == "coupling_monotonicity":
        return verify.check_coupling_monotonicity(window, samples, seed)
    if name == "exhaustive":
        return verify.check_exhaustive(
            window,
            resolve_set(window, check.get("S", 0)),
            resolve_vertex(window, check.get("v", 0)),
            float(check.get("p", 0.5)),
            float(check.get("p1", 0.5)), float(check.get("p2", 0.75)),
            samples, check.get("seeds", [seed, seed + 1, seed + 2]), workers)
    if name == "sprinkled_repulsion":
        return verify.check_sprinkled_repulsion(
            window, resolve_vertex(window, check["v"]),
            float(check["p1"]), float(check["p2"]),
            check.get("n_grid", list(range(1, 11))), samples, seed, workers)
    if name == "martingale_repulsion":
        pairs = check.get("pairs") or [(m, n) for m in check["m_grid"] for n in check["n_grid"]]
        return verify.check_martingale_repulsion(
            window, resolve_vertex(window, check["v"]), float(check["p"]),
            pairs, samples, seed, workers)
    if name == "markov":
        return verify.check_markov(
            int(check.get("distributions", 1000)),
            check.get("thetas", [0.1, 0.5, 0.9]), seed)
    if name == "sprinkling_stability":
        return verify.check_sprinkling_stability(
            window, resolve_set(window, check["S"]),
            float(check["p1"]), float(check["p2"]),
            check.get("r_grid", [1, 2, 3]), samples, seed, workers)
    if name == "iso_union_bound":
        return verify.check_iso_union_bound(
            window, resolve_vertex(window, check["v"]), float(check["p"]),
            check.get("n_grid", list(range(1, 11))), float(check["c"]),
            samples, seed, dprime=float(check.get("dprime", 2.0)),
            fit_at=int(check.get("fit_at", 4)), C=check.get("C"), workers=workers)
    if name == "hull_menger":
        return verify.check_hull_menger(
            window, resolve_set(window, check["S"]),
            check.get("p_list", [0.55, 0.7]), samples, seed, workers)
    if name == "exploration_identities":
        return verify.check_exploration_identities(
            window, resolve_vertex(window, check["v"]),
            float(check.get("p", 0.5)), samples, seed, workers)
    if name == "dgrsy":
        return verify.check_dgrsy(
            window, resolve_set(window, check["S"]), float(check["p"]),
            samples, seed, workers,
            walkers=int(check.get("walkers", 20000)),
            max_steps=int(check.get("max_steps", 100000)))
    raise PercolabError(f"unknown check {name!r}")


def cmd_verify(cfg: ExperimentConfig, writer: RunWriter, workers: int) -> int:
    checks = cfg.raw.get("checks", [])
    if not checks:
        raise PercolabError("no checks in config")
    window = cfg.build_window()
    rows = []
    violated = False
    for check in checks:
        for vd in _run_check(window, cfg, check, workers):
            mc = vd.estimate
            rows.append({
                "check": vd.check, "direction": vd.direction, "bound": vd.bound,
                "estimate": mc.estimate, "ci_low": mc.ci_low, "ci_high": mc.ci_high,
                "samples": mc.samples, "successes": mc.successes,
                "slack": vd.slack, "verdict": vd.verdict, "caveat": vd.caveat,
                "seed": mc.seed, "config_hash": cfg.hash,
            })
            print(f"{vd.verdict.upper():>10}  {vd.check}  bound={_fmt(vd.bound)}"
                  f"  estimate={_fmt(mc.estimate)}")
            if vd.verdict == "violated":
                violated = True
    writer.write_csv("verdicts.csv", VERDICT_COLUMNS, rows)
    return 2 if violated else 0


def cmd_report(run_dir: Path, writer: RunWriter) -> int:
    results = run_dir / "results.csv"
    profile = run_dir / "profile.csv"
    if not results.exists() and not profile.exists():
        raise PercolabError(f"no results.csv or profile.csv in {run_dir}")
    rows = []
    if results.exists():
        with open(results) as fh:
            for rec in csv.DictReader(fh):
                if rec["estimand"] != "cluster_tail" or not rec["n"]:
                    continue
                phat = float(rec["estimate"])
                if not 0.0 < phat < 1.0:
                    continue
                rows.append({
                    "series": "cluster_tail_fit", "p": rec["p"], "n": rec["n"],
                    "x": math.log(float(rec["n"])),
                    "y": math.log(-math.log(phat)),
                })
    if profile.exists():
        with open(profile) as fh:
            for rec in csv.DictReader(fh):
                ratio = float(rec["ratio"])
                if ratio <= 0:
                    continue
                rows.append({
                    "series": "profile", "p": "", "n": rec["n"],
                    "x": math.log(float(rec["n"])), "y": math.log(ratio),
                })
    writer.write_csv("report.csv", ["series", "p", "n", "x", "y"], rows)
    return 0


def _resolve_workers(args, cfg) -> int:
    if args.workers is not None:
        return args.workers
    if cfg is not None and "workers" in cfg.raw:
        return cfg.workers
    env = os.environ.get("PERCOLAB_WORKERS")
    if env:
        return int(env)
    return 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="percolab",
        description="Desk-scale percolation laboratory: estimates, profiles, "
                    "and proved-inequality verdicts on finite graph windows.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [
        ("simulate", "dump raw exploration-martingale samples (JSONL)"),
        ("estimate", "run Monte Carlo estimators (results CSV)"),
        ("profile", "compute isoperimetric profiles (CSV)"),
        ("verify", "run bound checks and write a verdict table (CSV)"),
        ("report", "convert a run directory into plot-ready long-format CSV"),
    ]:
        sp = sub.add_parser(name, help=text)
        if name == "report":
            sp.add_argument("run_dir", type=Path)
        else:
            sp.add_argument("--config", type=Path, required=True)
            sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--out", type=Path, default=None)
    args = parser.parse_args(argv)

    try:
        if args.command == "report":
            out = args.out or args.run_dir
            cfg = ExperimentConfig.from_dict({"window": {"family": "hypercubic",
                                                         "d": 1, "L": 2},
                                              "seed": 0})
            writer = RunWriter(out, cfg)
            try:
                code = cmd_report(args.run_dir, writer)
            except BaseException:
                writer.cleanup()
                raise
            writer.finish()
            return code
        cfg = ExperimentConfig.from_file(args.config)
        if args.seed is not None:
            raw = dict(cfg.raw)
            raw["seed"] = args.seed
            cfg = ExperimentConfig.from_dict(raw)
        workers = _resolve_workers(args, cfg)
        out = args.out or Path(cfg.raw.get("out", "percolab_run"))
        writer = RunWriter(out, cfg)
        try:
            runner = {"simulate": cmd_simulate, "estimate": cmd_estimate,
                      "profile": cmd_profile, "verify": cmd_verify}[args.command]
            code = runner(cfg, writer, workers)
        except BaseException:
            writer.cleanup()
            raise
        writer.finish()
        return code
    except PercolabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
