"""Command-line entry point: ``presence-od {estimate,extrapolate,gravity,bench,synth}``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .bench import SOLVERS, BenchConfig, BenchResult, run_bench
from .geometry import load_zones
from .gravity import GravityParams, compare_flows, gravity_fit
from .ingestion import parse_duration, read_marginals_csv
from .pipeline import DEFAULT_NOISE, EstimateOptions, resolve_cost, run_estimate
from .polytope import InfeasibleMarginals, solve_lp
from .reports import read_matrix_csv, write_matrix_csv
from .synthetic import GENERATORS, LAYOUTS, ScenarioConfig, run_synthetic
from .transitions import (
    DurationHistogram,
    NonConvergence,
    check_stochastic,
    histogram_mix,
    row_normalize,
    stationary_distribution,
    step_matrices,
)

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_NONCONVERGENCE = 0, 1, 2, 3


def _int_list(text):
    return tuple(int(v) for v in text.split(",") if v.strip())


def _float_list(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _sizes(text):
    """``a:b`` means powers of two 2^a..2^b; otherwise a comma list of sizes."""
    if ":" in text:
        a, b = (int(v) for v in text.split(":"))
        return tuple(2**k for k in range(a, b + 1))
    return _int_list(text)


def _write_or_print(out_dir, name, matrix, ids):
    if out_dir is None:
        write_matrix_csv(sys.stdout, matrix, ids)
        return
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / name).open("w", newline="") as fh:
        write_matrix_csv(fh, matrix, ids)


def cmd_estimate(args):
    opts = EstimateOptions(
        bucket=args.bucket,
        total=args.total,
        cost=args.cost,
        noise=args.noise,
        randomizations=args.randomizations,
        seed=args.seed,
        steps=args.steps,
        hist=args.hist,
    )
    res = run_estimate(args.presence, args.zones, opts, out_dir=args.out)
    n_pairs = len(res.series) - 1
    print(
        f"zones={len(res.zone_ids)} snapshots={len(res.series)} gaps={len(res.series.gaps)} "
        f"pairs={n_pairs} solves={len(res.objectives)} rejects={len(res.rejects)}",
        file=sys.stderr,
    )
    if args.out is None:
        write_matrix_csv(sys.stdout, res.transition, res.zone_ids)


def cmd_extrapolate(args):
    with open(args.matrix, newline="") as fh:
        ids, x = read_matrix_csv(fh)
    try:
        p = check_stochastic(x)
    except ValueError:
        # not stochastic yet: treat as a flow
        p = row_normalize(x)
    steps = set(args.steps) | set(range(1, len(args.hist or ()) + 1))
    mats = step_matrices(p, steps or {1})
    for s in args.steps:
        _write_or_print(args.out, f"transition_{s}.csv", mats[s], ids)
    if args.hist is not None:
        h = DurationHistogram(args.hist)
        _write_or_print(args.out, "transition_hist.csv", histogram_mix([mats[s] for s in h.steps], h), ids)
    if args.stationary:
        f = stationary_distribution(p)
        lines = ["zone_id,probability"] + [f"{z},{v!r}" for z, v in zip(ids, f.tolist())]
        if args.out is None:
            print("\n".join(lines))
        else:
            (Path(args.out) / "stationary.csv").write_text("\n".join(lines) + "\n")


def cmd_gravity(args):
    with open(args.marginals, newline="") as fh:
        ids, m = read_marginals_csv(fh)
    zs = load_zones(args.zones)
    if ids != zs.ids:
        raise ValueError(f"{args.marginals}: zone ids do not match {args.zones}")
    c = resolve_cost(zs, args.cost)
    fit = gravity_fit(m.gamma, m.eta, c, GravityParams(alpha=args.alpha, max_iter=args.max_iter))
    lp, objective = solve_lp(m, c)
    report = compare_flows(fit.flow, lp).as_dict()
    report.update(iterations=fit.iterations, lp_objective=objective)
    _write_or_print(args.out, "gravity.csv", fit.flow, ids)
    if args.out is not None:
        _write_or_print(args.out, "lp.csv", lp.to_dense(), ids)
        (Path(args.out) / "comparison.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(json.dumps(report, sort_keys=True), file=sys.stderr)


def cmd_bench(args):
    sizes = {"closed_form": args.cf_sizes, "min_cost_flow": args.mcf_sizes}
    rows = []
    for solver in args.solvers:
        cfg = BenchConfig(sizes[solver], args.trials, args.seed, args.total, (solver,), args.max_general_n)
        res = run_bench(cfg, progress=lambda r: print(f"{r.solver} n={r.n} min={r.min:.3e}s", file=sys.stderr))
        rows += res.rows
        if len(res.rows) >= 2:
            print(f"{solver}: log-log slope {res.slope(solver):.3f}", file=sys.stderr)
    all_sizes = tuple(sorted({r.n for r in rows}))
    combined = BenchConfig(all_sizes, args.trials, args.seed, args.total, tuple(args.solvers), args.max_general_n)
    res = BenchResult(combined, rows)
    if args.out is None:
        sys.stdout.write(res.to_csv())
    else:
        res.write(args.out)


def cmd_synth(args):
    cfg = ScenarioConfig(args.zones, args.generator, args.layout, args.total, args.seed)
    res = run_synthetic(cfg, out_dir=args.out)
    print(json.dumps(res.summary(), indent=2, sort_keys=True))


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors; exit status 2 is reserved for infeasible marginals
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="presence-od", description="Origin-destination flows from presence counts.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, cost=True):
        p.add_argument("--out", help="output directory (default: print to stdout)")
        if cost:
            p.add_argument("--cost", default="adjacency", help="adjacency|centroid|nearest or a cost-matrix CSV")

    def dynamics(p):
        p.add_argument("--steps", type=_int_list, default=(), help="i-step matrices to emit, e.g. 3,4,5")
        p.add_argument("--hist", type=_float_list, default=None, help="duration histogram weights h1,...,hH")

    p = sub.add_parser("estimate", help="estimate transition matrices from presence counts")
    p.add_argument("presence", help="presence CSV (zone_id,interval_end,count)")
    p.add_argument("zones", help="zone polygons (text or GeoJSON)")
    p.add_argument("--bucket", type=parse_duration, default=parse_duration("15m"))
    p.add_argument("--total", type=int, default=1_000_000)
    p.add_argument("--noise", type=float, default=DEFAULT_NOISE)
    p.add_argument("--randomizations", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    common(p)
    dynamics(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("extrapolate", help="multi-step and histogram-mixed matrices from a 1-step matrix or flow")
    p.add_argument("matrix", help="matrix CSV")
    p.add_argument("--stationary", action="store_true", help="also emit the stationary distribution")
    common(p, cost=False)
    dynamics(p)
    p.set_defaults(func=cmd_extrapolate)

    p = sub.add_parser("gravity", help="fit the gravity model and compare with the LP estimate")
    p.add_argument("marginals", help="marginals CSV (zone_id,gamma,eta)")
    p.add_argument("zones", help="zone polygons (text or GeoJSON)")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--max-iter", type=int, default=1000)
    common(p)
    p.set_defaults(func=cmd_gravity)

    p = sub.add_parser("bench", help="runtime scaling benchmark")
    p.add_argument("--cf-sizes", type=_sizes, default=_sizes("10:20"), help="closed-form sizes, a:b = 2^a..2^b")
    p.add_argument("--mcf-sizes", type=_sizes, default=_sizes("5:10"), help="general-solver sizes")
    p.add_argument("--solvers", type=lambda s: tuple(s.split(",")), default=SOLVERS)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--total", type=int, default=1_000_000)
    p.add_argument("--max-general-n", type=int, default=2048)
    common(p, cost=False)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("synth", help="synthetic ground-truth scenario")
    p.add_argument("--zones", type=int, default=25)
    p.add_argument("--generator", choices=GENERATORS, default="sender_receiver")
    p.add_argument("--layout", choices=LAYOUTS, default="separated")
    p.add_argument("--total", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    common(p, cost=False)
    p.set_defaults(func=cmd_synth)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except InfeasibleMarginals as exc:
        print(f"error: infeasible marginals: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NonConvergence as exc:
        print(f"error: no convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
