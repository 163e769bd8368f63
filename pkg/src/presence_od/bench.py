"""Runtime scaling benchmark for the closed-form and general solvers."""

from __future__ import annotations

import csv
import io
import time
import timeit
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .polytope import Marginals, min_cost_flow_solve, trace_max_value
from .reports import loglog_svg

SOLVERS = ("closed_form", "min_cost_flow")
AUTORANGE_S = 0.2


def round_to_total(weights, total: int) -> np.ndarray:
    """Largest-remainder rounding of nonnegative real weights to an integer total.

    Ties in the fractional part go to the lower index.
    """
    w = np.asarray(weights, dtype=float)
    scaled = w / w.sum() * total
    base = np.floor(scaled).astype(np.int64)
    frac = scaled - base
    short = int(total) - int(base.sum())
    if short > 0:
        base[np.argsort(-frac, kind="stable")[:short]] += 1
    elif short < 0:
        # float overshoot: take back from the smallest fractional parts that can spare it
        order = [i for i in np.argsort(frac, kind="stable") if base[i] > 0]
        base[order[:-short]] -= 1
    return base


def sample_simplex_marginals(n: int, total_mass: int, seed) -> Marginals:
    """Two independent uniform points of the simplex, scaled to ``total_mass``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if total_mass < 0:
        raise ValueError("total_mass must be nonnegative")
    rng = np.random.default_rng(seed)
    g = rng.exponential(size=n)
    e = rng.exponential(size=n)
    return Marginals(round_to_total(g, total_mass), round_to_total(e, total_mass))


@dataclass(frozen=True)
class BenchConfig:
    sizes: tuple[int, ...]
    trials: int = 5
    seed: int = 0
    total_mass: int = 1_000_000
    solvers: tuple[str, ...] = SOLVERS
    # the general solver is skipped above this n
    max_general_n: int = 2048

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        if not sizes or min(sizes) < 1:
            raise ValueError("sizes must be positive")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ValueError("sizes must be strictly increasing")
        if self.trials < 3:
            raise ValueError("need at least 3 trials for mean and standard deviation")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        if self.total_mass < 1:
            raise ValueError("total_mass must be positive")
        bad = set(self.solvers) - set(SOLVERS)
        if bad or not self.solvers:
            raise ValueError(f"unknown solvers {sorted(bad)}; choose from {SOLVERS}")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "solvers", tuple(self.solvers))


@dataclass(frozen=True)
class BenchRow:
    solver: str
    n: int
    trials: int
    mean: float
    std: float
    min: float
    checks_ok: bool


@dataclass(eq=False)
class BenchResult:
    config: BenchConfig
    rows: list[BenchRow] = field(default_factory=list)

    def series(self, solver: str) -> tuple[list[int], list[float]]:
        rows = [r for r in self.rows if r.solver == solver]
        return [r.n for r in rows], [r.min for r in rows]

    def slope(self, solver: str, lo=None, hi=None) -> float:
        """Least-squares slope of log(min time) against log(n)."""
        ns, ts = self.series(solver)
        pts = [(n, t) for n, t in zip(ns, ts) if (lo is None or n >= lo) and (hi is None or n <= hi)]
        if len(pts) < 2:
            raise ValueError(f"need at least 2 sizes for {solver}")
        x = np.log2([p[0] for p in pts])
        y = np.log2([p[1] for p in pts])
        return float(np.polyfit(x, y, 1)[0])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["solver", "n", "trials", "mean_s", "std_s", "min_s", "checks_ok"])
        for r in self.rows:
            w.writerow([r.solver, r.n, r.trials, f"{r.mean:.6e}", f"{r.std:.6e}", f"{r.min:.6e}", int(r.checks_ok)])
        return buf.getvalue()

    def to_svg(self) -> str:
        data = {s: self.series(s) for s in self.config.solvers if self.series(s)[0]}
        return loglog_svg(data, "n (zones)", "min wall time per solve [s]", "runtime vs dimension")

    def write(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "bench.csv").write_text(self.to_csv())
        (out / "bench.svg").write_text(self.to_svg())


def _time(fn):
    """Seconds per call and the call's result.

    Calls faster than ``AUTORANGE_S`` are repeated via ``timeit`` until the
    total clears timer noise.
    """
    t0 = time.perf_counter()
    out = fn()
    dt = time.perf_counter() - t0
    if dt < AUTORANGE_S:
        number, total = timeit.Timer(fn).autorange()
        dt = total / number
    return dt, out


def _trial_seed(cfg: BenchConfig, solver: str, n: int, trial: int):
    return np.random.SeedSequence([cfg.seed, SOLVERS.index(solver), n, trial])


def _closed_form_trial(cfg, n, trial):
    m = sample_simplex_marginals(n, cfg.total_mass, _trial_seed(cfg, "closed_form", n, trial))
    dt, z = _time(lambda: trace_max_value(m))
    ok = 2 * z == 2 * m.k - int(np.abs(m.eta - m.gamma).sum())
    return dt, ok


def _general_trial(cfg, n, trial):
    ss = _trial_seed(cfg, "min_cost_flow", n, trial)
    m = sample_simplex_marginals(n, cfg.total_mass, ss)
    c = np.random.default_rng(ss.spawn(1)[0]).integers(0, 10, size=(n, n)).astype(float)
    dt, (flow, _) = _time(lambda: min_cost_flow_solve(m, c))
    ok = np.array_equal(flow.row_sums(), m.gamma) and np.array_equal(flow.col_sums(), m.eta)
    return dt, ok


def run_bench(cfg: BenchConfig, out_dir=None, progress=None) -> BenchResult:
    """Time each solver at each size on fresh simplex-sampled marginals.

    The closed form is timed on ``trace_max_value`` (the two-level 0/1 cost
    case); the general solver on random integer costs in [0, 9]. One warm-up
    trial per (solver, n) is run and discarded.
    """
    res = BenchResult(cfg)
    for solver in cfg.solvers:
        trial_fn = _closed_form_trial if solver == "closed_form" else _general_trial
        for n in cfg.sizes:
            if solver == "min_cost_flow" and n > cfg.max_general_n:
                continue
            # warm-up on its own seed, result discarded
            trial_fn(cfg, n, cfg.trials)
            times, ok = [], True
            for t in range(cfg.trials):
                dt, good = trial_fn(cfg, n, t)
                times.append(dt)
                ok &= bool(good)
            ts = np.array(times)
            row = BenchRow(solver, n, cfg.trials, float(ts.mean()), float(ts.std(ddof=1)), float(ts.min()), ok)
            res.rows.append(row)
            if progress:
                progress(row)
    if out_dir is not None:
        res.write(out_dir)
    return res
