"""Command-line interface: ``drwgeom <subcommand> ...``.

Subcommands
-----------
analyze      hitting-time mean, variance and pmf head per transient node
sensitivity  per-node betweenness, gradient norms and zeta (CSV or JSON)
reproduce    the synthetic line / star / SBM sensitivity experiment
check        brute-force oracle cross-validation suite
rewire       top-B edges ranked by ``zeta(q) * A0_qk``

Exit codes: 0 success, 1 a check failed, 2 invalid input or numerical
failure. With ``--json`` errors are also written to stderr as one JSON
object ``{"error": <type>, "message": <text>}``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DRWGeomError
from .experiments import TOPOLOGIES, ExperimentConfig, format_table, reproduce_table1, results_to_csv
from .graph import build_kernel, decompose_for_class, load_graph
from .hitting import hitting_law, hitting_moments, pmf_sequence
from .oracles import mc_drw_betweenness
from .quotient import DEFAULT_RANK_TOL
from .score import rewire_candidates, zeta

__all__ = ["main", "build_parser", "parse_theta"]

log = logging.getLogger("drwgeom")


def parse_theta(text, p=None):
    """Comma-separated floats; a single value is broadcast to length ``p``."""
    try:
        vals = [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise ValueError(f"cannot parse theta {text!r}") from None
    if not vals:
        raise ValueError("empty theta")
    if p is not None:
        if len(vals) == 1:
            vals = vals * p
        elif len(vals) != p:
            raise ValueError(f"theta has {len(vals)} entries, graph has p={p}")
    return np.array(vals)


def _resolve_graph(path):
    """Local path, or the name of a bundled example graph."""
    p = Path(path)
    if p.exists():
        return load_graph(p)
    bundled = resources.files("drwgeom") / "data" / p.name
    if bundled.is_file():
        with resources.as_file(bundled) as f:
            return load_graph(f)
    raise FileNotFoundError(f"no such graph file: {path}")


def _horizon(text):
    if text is None or text == "auto":
        return None
    L = int(text)
    if L < 1:
        raise ValueError("horizon L must be >= 1")
    return L


def _emit(text, path=None):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_analyze(args):
    graph = _resolve_graph(args.graph)
    theta = parse_theta(args.theta, graph.p)
    kernel = build_kernel(graph, theta, order=1)
    classes = graph.classes if args.cls is None else (args.cls,)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["class", "node", "mu", "var"] + [f"pmf_{t}" for t in range(1, args.head + 1)] + ["tail_mass"])
    for y in classes:
        dec = decompose_for_class(kernel, graph, y)
        law = hitting_law(dec)
        for q in dec.transient:
            mom = hitting_moments(law, int(q))
            pmf, tail = pmf_sequence(law, int(q), args.head)
            w.writerow([y, int(q) + 1, repr(mom.mean), repr(mom.variance)]
                       + [repr(float(v)) for v in pmf] + [repr(tail)])
    _emit(buf.getvalue(), args.output)
    return 0


def cmd_sensitivity(args):
    graph = _resolve_graph(args.graph)
    theta = parse_theta(args.theta, graph.p)
    rep = zeta(graph, theta, L=_horizon(args.L), rank_tol=args.rank_tol, trials=args.trials,
               rng=args.seed, fisher_tol=None if args.no_fisher_series else 1e-12)
    if args.mc > 0:
        kernel = build_kernel(graph, theta, order=0)
        mc = {}
        for k, y in enumerate(rep.classes):
            for q in rep.nodes:
                est, acc, _ = mc_drw_betweenness(kernel, graph.labels, y, q, rep.horizon, args.mc,
                                                 seed=[args.seed, k, q])
                mc.setdefault(q + 1, {})[str(y)] = {"estimate": est, "acceptance": acc}
        rep.chart_info["mc_betweenness"] = mc
    if args.format == "json":
        _emit(rep.to_json() + "\n", args.output)
    else:
        _emit(rep.to_csv(), args.output)
    if args.json_report:
        Path(args.json_report).write_text(rep.to_json() + "\n")
    for f in rep.flags:
        print(f"note: {f}", file=sys.stderr)
    return 0


def cmd_reproduce(args):
    topologies = TOPOLOGIES if args.topology == "all" else (args.topology,)
    kw = dict(n=args.n, p=args.p, realizations=args.realizations, L=_horizon(args.L),
              rng_seed=args.seed, p_in=args.p_in, p_out=args.p_out, rank_tol=args.rank_tol,
              workers=args.workers, theta_range=tuple(args.theta_range))
    if args.blocks is not None:
        kw["sbm_blocks"] = tuple(int(b) for b in args.blocks.split(","))
    else:
        kw["sbm_blocks"] = (args.n // 2, args.n - args.n // 2)
    if args.theta is not None:
        kw["fixed_theta"] = tuple(parse_theta(args.theta, args.p))
    config = ExperimentConfig(topology=topologies[0], **kw)
    results = reproduce_table1(config, topologies)
    _emit(results_to_csv(results), args.csv)
    if not args.quiet:
        print(format_table(results), file=sys.stderr)
        for topo, res in results.items():
            hs = [r.horizon for r in res.realizations]
            print(f"{topo}: horizon L in [{min(hs)}, {max(hs)}], skipped {res.skipped}", file=sys.stderr)
            if topo == "sbm":
                elev = [e for e in res.boundary_elevation() if e is not None]
                if elev:
                    print(f"sbm: boundary > interior in {np.mean(elev):.1%} of {len(elev)} realizations",
                          file=sys.stderr)
    return 0


def cmd_check(args):
    from .checks import run_checks

    results = run_checks(fast=args.fast)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name} | {r.detail}")
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 1


def cmd_rewire(args):
    graph = _resolve_graph(args.graph)
    theta = parse_theta(args.theta, graph.p)
    rep = zeta(graph, theta, L=_horizon(args.L), rank_tol=args.rank_tol)
    rows = rewire_candidates(graph, rep, args.budget, add_weight=args.add_weight)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rank", "node", "neighbor", "A0", "zeta", "score", "kind"])
    kind = "add" if args.add_weight is not None else "reweight"
    for k, (s, q, j, a0) in enumerate(rows, 1):
        w.writerow([k, q + 1, j + 1, repr(float(a0)), repr(float(rep.zeta[q])), repr(float(s)), kind])
    _emit(buf.getvalue(), args.output)
    return 0


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser():
    ap = argparse.ArgumentParser(prog="drwgeom", description="Information geometry of discriminative random walks.")
    ap.add_argument("--json", action="store_true", help="also write errors as JSON to stderr")
    ap.add_argument("-v", "--verbose", action="store_true", help="log diagnostics to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    def graph_args(sp):
        sp.add_argument("graph", help="graph JSON or edge list (bundled names such as path4.json also work)")
        sp.add_argument("--theta", required=True, help="comma-separated parameters; one value is broadcast")
        sp.add_argument("-o", "--output", help="write output here instead of stdout")

    sp = sub.add_parser("analyze", help="hitting-time law per transient node")
    graph_args(sp)
    sp.add_argument("--class", dest="cls", type=int, help="absorbing class (default: every class)")
    sp.add_argument("--head", type=_positive_int, default=5, help="number of pmf terms to print")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("sensitivity", help="betweenness and zeta report")
    graph_args(sp)
    sp.add_argument("-L", default="auto", help="horizon: 'auto' or a positive integer")
    sp.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--json-report", help="additionally write the JSON report to this path")
    sp.add_argument("--trials", type=int, default=1000, help="random directions in the bound check")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--mc", type=int, default=0, metavar="N",
                    help="also estimate betweenness from N accepted simulated walks per node and class")
    sp.add_argument("--no-fisher-series", action="store_true",
                    help="skip the series Fisher comparison in the chart diagnostics")
    sp.set_defaults(func=cmd_sensitivity)

    sp = sub.add_parser("reproduce", help="synthetic sensitivity experiment")
    sp.add_argument("--topology", choices=TOPOLOGIES + ("all",), default="all")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--realizations", type=_positive_int, default=100)
    sp.add_argument("--n", type=int, default=10)
    sp.add_argument("--p", type=_positive_int, default=1)
    sp.add_argument("--theta", help="fixed theta for every realization (default: uniform draw)")
    sp.add_argument("--theta-range", type=float, nargs=2, default=(-1.0, 1.0), metavar=("LO", "HI"))
    sp.add_argument("-L", default="auto")
    sp.add_argument("--p-in", type=float, default=0.8)
    sp.add_argument("--p-out", type=float, default=0.2)
    sp.add_argument("--blocks", help="SBM block sizes, comma-separated (default: two halves)")
    sp.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL)
    sp.add_argument("--workers", type=int, help="worker processes (default: $DRWGEOM_THREADS or 1)")
    sp.add_argument("--csv", help="write the CSV here instead of stdout")
    sp.add_argument("-q", "--quiet", action="store_true", help="do not print the text table")
    sp.set_defaults(func=cmd_reproduce)

    sp = sub.add_parser("check", help="oracle cross-validation suite")
    sp.add_argument("--fast", action="store_true", help="smaller corpus and sample sizes")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("rewire", help="rank edges by zeta(q) * A0_qk")
    graph_args(sp)
    sp.add_argument("--budget", type=_positive_int, required=True)
    sp.add_argument("--add-weight", type=float, help="rank absent edges with this proposed base weight")
    sp.add_argument("-L", default="auto")
    sp.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL)
    sp.set_defaults(func=cmd_rewire)
    return ap


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (DRWGeomError, ValueError, OSError, KeyError) as exc:
        print(f"drwgeom: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        if args.json:
            print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
