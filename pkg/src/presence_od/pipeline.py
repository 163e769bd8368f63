"""End-to-end estimation: presence records in, transition matrices out."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import timedelta
from pathlib import Path

import numpy as np

from .geometry import ZoneSet, build_cost, load_zones, perturb_costs
from .ingestion import (
    SnapshotSeries,
    aggregate,
    sum_flows,
    normalize_pair,
    pair_stream,
    parse_presence,
    write_snapshots_csv,
)
from .polytope import check_cost_matrix, solve_lp
from .reports import read_matrix_csv, write_matrix_csv
from .transitions import DurationHistogram, histogram_mix, row_normalize, step_matrices

DEFAULT_NOISE = 1e-4


@dataclass(frozen=True)
class EstimateOptions:
    bucket: timedelta = timedelta(minutes=15)
    total: int = 1_000_000
    cost: str = "adjacency"
    noise: float = DEFAULT_NOISE
    randomizations: int = 4
    seed: int = 0
    steps: tuple[int, ...] = ()
    hist: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.total < 1:
            raise ValueError("total must be positive")
        if self.noise < 0:
            raise ValueError("noise must be nonnegative")
        if self.randomizations < 1:
            raise ValueError("randomizations must be at least 1")
        if any(s < 1 for s in self.steps):
            raise ValueError("step counts must be positive")


@dataclass(eq=False)
class EstimateResult:
    zone_ids: list[str]
    series: SnapshotSeries
    mean_flow: np.ndarray
    flow_sum: np.ndarray
    objectives: list[float]
    flow_totals: list[int]
    transition: np.ndarray
    step_transitions: dict[int, np.ndarray] = field(default_factory=dict)
    hist_transition: np.ndarray | None = None
    rejects: list = field(default_factory=list)


def resolve_cost(zs: ZoneSet, cost: str) -> np.ndarray:
    """A cost kind name, or a path to a matrix CSV whose ids match ``zs``."""
    path = Path(cost)
    if path.suffix.lower() == ".csv":
        with path.open(newline="") as fh:
            ids, c = read_matrix_csv(fh)
        if ids != zs.ids:
            raise ValueError(f"{path}: cost matrix zone ids do not match the zone file")
        return check_cost_matrix(c)
    return build_cost(zs, cost)


def estimate_series(series: SnapshotSeries, c, opts: EstimateOptions) -> tuple:
    """Solve every consecutive pair under each noise draw; return flows and objectives."""
    c = check_cost_matrix(c)
    draws = []
    for r in range(opts.randomizations):
        draws.append(perturb_costs(c, opts.noise, opts.seed + r) if opts.noise > 0 else c)
    flows, objectives = [], []
    for e1, e2 in pair_stream(series):
        m = normalize_pair(e1, e2, opts.total)
        for cr in draws:
            flow, obj = solve_lp(m, cr)
            flows.append(flow)
            objectives.append(obj)
    return flows, objectives


def run_estimate_series(series: SnapshotSeries, zs: ZoneSet, c, opts: EstimateOptions) -> EstimateResult:
    flows, objectives = estimate_series(series, c, opts)
    flow_sum = sum_flows(flows)
    mean = flow_sum / len(flows)
    s1 = row_normalize(mean)
    mats = step_matrices(s1, set(opts.steps) | set(range(1, len(opts.hist or ()) + 1)))
    hist = None
    if opts.hist is not None:
        h = DurationHistogram(opts.hist)
        hist = histogram_mix([mats[s] for s in h.steps], h)
    return EstimateResult(
        zone_ids=zs.ids,
        series=series,
        mean_flow=mean,
        flow_sum=flow_sum,
        objectives=objectives,
        flow_totals=[f.total() for f in flows],
        transition=s1,
        step_transitions={s: mats[s] for s in opts.steps},
        hist_transition=hist,
    )


def run_estimate(presence_file, zones_file, opts: EstimateOptions = EstimateOptions(), out_dir=None) -> EstimateResult:
    """Parse, aggregate, normalize, solve, average and row-normalize.

    With ``out_dir`` set, every matrix is also written there as CSV.
    """
    try:
        zs = load_zones(zones_file)
    except ValueError as exc:
        raise ValueError(f"{zones_file}: {exc}") from exc
    c = resolve_cost(zs, opts.cost)
    try:
        with open(presence_file, newline="") as fh:
            parsed = parse_presence(fh, zs)
    except ValueError as exc:
        raise ValueError(f"{presence_file}: {exc}") from exc
    series = aggregate(parsed.records, zs, opts.bucket)
    res = run_estimate_series(series, zs, c, opts)
    res.rejects = parsed.rejects
    if out_dir is not None:
        write_estimate(res, out_dir)
    return res


def write_estimate(res: EstimateResult, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def put(name, matrix):
        with (out / name).open("w", newline="") as fh:
            write_matrix_csv(fh, matrix, res.zone_ids)

    with (out / "snapshots.csv").open("w", newline="") as fh:
        write_snapshots_csv(fh, res.series, res.zone_ids)
    put("flow_sum.csv", res.flow_sum)
    put("flow_mean.csv", res.mean_flow)
    put("transition_1.csv", res.transition)
    for s, mat in sorted(res.step_transitions.items()):
        put(f"transition_{s}.csv", mat)
    if res.hist_transition is not None:
        put("transition_hist.csv", res.hist_transition)
    with (out / "solves.csv").open("w", newline="") as fh:
        fh.write("solve,objective,total\n")
        for i, (obj, tot) in enumerate(zip(res.objectives, res.flow_totals)):
            fh.write(f"{i},{obj!r},{tot}\n")
    if res.rejects:
        with (out / "rejects.csv").open("w", newline="") as fh:
            fh.write("line,zone_id,reason\n")
            for r in res.rejects:
                fh.write(f"{r.lineno},{r.zone_id},{r.reason}\n")

