"""Exact solvers over the transportation polytope.

A flow ``X`` between ``n`` zones is feasible for marginals ``(gamma, eta)``
when ``X >= 0``, its row sums equal ``gamma`` (users leaving each zone) and
its column sums equal ``eta`` (users arriving). The polytope is nonempty iff
``sum(gamma) == sum(eta)``, and its vertices are integral for integral
marginals, so every solver here works in integers.

Two-level costs (one value on the diagonal, a larger one elsewhere) reduce
cost minimization to trace maximization, which has the closed form
``sum_i min(gamma_i, eta_i)`` and an O(n) witness. Every other cost goes to
the exact min-cost flow solver in :mod:`presence_od.mincost`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .flow import FlowMatrix
from .mincost import transport_ssp

TWO_LEVEL_ATOL = 1e-12


class InfeasibleMarginals(ValueError):
    """Row and column totals differ, so the transportation polytope is empty."""

    def __init__(self, gamma_total, eta_total, message=None):
        self.gamma_total = int(gamma_total)
        self.eta_total = int(eta_total)
        super().__init__(
            message
            or f"marginal totals differ: sum(gamma)={self.gamma_total} != sum(eta)={self.eta_total}"
        )


def _as_int_vector(v, name):
    a = np.asarray(v)
    if a.ndim != 1:
        raise ValueError(f"{name} must be a 1-d vector")
    if a.size and not np.issubdtype(a.dtype, np.integer):
        if not np.all(np.isfinite(a)) or np.any(a != np.round(a)):
            raise ValueError(f"{name} must be integral")
    a = a.astype(np.int64)
    if a.size and a.min() < 0:
        raise ValueError(f"{name} has a negative entry at index {int(np.argmin(a))}")
    return a


@dataclass(frozen=True, eq=False)
class Marginals:
    """Validated, equal-total integer marginals of an (n, n) transportation polytope."""

    gamma: np.ndarray
    eta: np.ndarray
    k: int | None = None

    def __post_init__(self):
        gamma = _as_int_vector(self.gamma, "gamma")
        eta = _as_int_vector(self.eta, "eta")
        if gamma.size == 0:
            raise ValueError("marginals need at least one zone")
        if gamma.shape != eta.shape:
            raise ValueError(f"length mismatch: gamma has {gamma.size}, eta has {eta.size}")
        sg, se = int(gamma.sum()), int(eta.sum())
        if sg != se:
            raise InfeasibleMarginals(sg, se)
        if self.k is not None and int(self.k) != sg:
            raise ValueError(f"k={self.k} does not match the marginal total {sg}")
        gamma.flags.writeable = False
        eta.flags.writeable = False
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "k", sg)

    @property
    def n(self) -> int:
        return int(self.gamma.size)

    def __eq__(self, other):
        if not isinstance(other, Marginals):
            return NotImplemented
        return np.array_equal(self.gamma, other.gamma) and np.array_equal(self.eta, other.eta)

    __hash__ = None


def check_feasible(gamma, eta) -> Marginals:
    """Validate a pair of presence vectors as transportation-polytope marginals.

    Raises ``ValueError`` on a length mismatch or negative entry, and
    :class:`InfeasibleMarginals` (carrying both totals) when the sums differ.
    """
    g = _as_int_vector(gamma, "gamma")
    e = _as_int_vector(eta, "eta")
    if g.shape != e.shape:
        raise ValueError(f"length mismatch: gamma has {g.size}, eta has {e.size}")
    return Marginals(g, e, int(g.sum()))


@dataclass(frozen=True)
class TwoLevelCost:
    diag_cost: float
    off_cost: float

    def __post_init__(self):
        if not self.diag_cost < self.off_cost:
            raise ValueError("two-level cost needs diag_cost < off_cost")


@dataclass(frozen=True)
class SinkSourceConfig:
    """Virtual zone absorbing/emitting users when presence totals change.

    ``u`` is the virtual zone's population at the first time step. There are
    deliberately no defaults.
    """

    u: int
    vanish_cost: np.ndarray
    spawn_cost: np.ndarray

    def __post_init__(self):
        if int(self.u) != self.u or self.u < 0:
            raise ValueError("u must be a nonnegative integer")


@dataclass(frozen=True, eq=False)
class TraceMaxWitness:
    permutation: np.ndarray
    split: int
    residual_gamma: np.ndarray
    residual_eta: np.ndarray
    flow: FlowMatrix


def check_cost_matrix(c, n=None) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError(f"cost matrix must be square, got shape {c.shape}")
    if n is not None and c.shape[0] != n:
        raise ValueError(f"cost matrix is {c.shape[0]}x{c.shape[0]}, marginals have n={n}")
    if not np.all(np.isfinite(c)):
        raise ValueError("cost matrix has non-finite entries")
    if c.size and c.min() < 0:
        raise ValueError("cost matrix has negative entries")
    return c


def trace_max_value(m: Marginals) -> int:
    """Maximum trace over the integral polytope: ``sum_i min(gamma_i, eta_i)``."""
    return int(np.minimum(m.gamma, m.eta).sum())


def northwest_corner_fill(row_marginals, col_marginals) -> FlowMatrix:
    """Integral point of the (p, q) transportation polytope by the northwest-corner rule.

    At most ``p + q - 1`` entries are nonzero.
    """
    r = _as_int_vector(row_marginals, "row_marginals").copy()
    c = _as_int_vector(col_marginals, "col_marginals").copy()
    if r.size == 0 or c.size == 0:
        raise ValueError("marginals must be nonempty")
    if r.sum() != c.sum():
        raise InfeasibleMarginals(r.sum(), c.sum())
    return _nw_corner(r, c)


def _nw_corner(r, c) -> FlowMatrix:
    p, q = r.size, c.size
    rows, cols, vals = [], [], []
    i = j = 0
    while i < p and j < q:
        amount = min(r[i], c[j])
        if amount > 0:
            rows.append(i)
            cols.append(j)
            vals.append(amount)
            r[i] -= amount
            c[j] -= amount
        if r[i] == 0:
            i += 1
        else:
            j += 1
    return FlowMatrix(p, q, rows, cols, vals)


def trace_max_witness(m: Marginals) -> TraceMaxWitness:
    """Construct an integral maximum-trace flow for ``m``.

    Zones with ``eta_i <= gamma_i`` (net senders, ties included) are ordered
    first; the diagonal holds ``min(gamma_i, eta_i)``; the only off-diagonal
    mass sits in the sender x receiver block, filled by the northwest-corner
    rule from the leftover marginals.
    """
    gamma, eta = m.gamma, m.eta
    n = m.n
    diag = np.minimum(gamma, eta)
    idx = np.arange(n)
    if np.array_equal(gamma, eta):
        flow = FlowMatrix(n, n, idx, idx, diag)
        empty = np.zeros(0, dtype=np.int64)
        return TraceMaxWitness(idx, n, gamma - diag, empty, flow)

    senders = np.flatnonzero(eta <= gamma)
    receivers = np.flatnonzero(eta > gamma)
    perm = np.concatenate([senders, receivers])
    split = int(senders.size)
    res_gamma = gamma[senders] - eta[senders]
    res_eta = eta[receivers] - gamma[receivers]
    block = _nw_corner(res_gamma.copy(), res_eta.copy())
    rows = np.concatenate([idx, senders[block.rows]])
    cols = np.concatenate([idx, receivers[block.cols]])
    vals = np.concatenate([diag, block.values])
    flow = FlowMatrix(n, n, rows, cols, vals)
    return TraceMaxWitness(perm, split, res_gamma, res_eta, flow)


def detect_two_level(c, atol: float = TWO_LEVEL_ATOL) -> TwoLevelCost | None:
    """Return the (diagonal, off-diagonal) levels if ``c`` has exactly that shape."""
    c = np.asarray(c, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] < 2:
        return None
    d = np.diagonal(c)
    off = c[~np.eye(c.shape[0], dtype=bool)]
    d0, o0 = float(d[0]), float(off[0])
    if np.max(np.abs(d - d0)) > atol or np.max(np.abs(off - o0)) > atol:
        return None
    if not d0 < o0 - atol:
        return None
    return TwoLevelCost(d0, o0)


def min_cost_flow_solve(m: Marginals, c) -> tuple[FlowMatrix, float]:
    """Exact integral minimizer of ``sum(c * X)`` and its objective."""
    c = check_cost_matrix(c, m.n)
    x = transport_ssp(m.gamma, m.eta, c)
    flow = FlowMatrix.from_dense(x)
    return flow, flow.cost(c)


def solve_lp(m: Marginals, c) -> tuple[FlowMatrix, float]:
    """Minimize total movement cost over the transportation polytope.

    Two-level costs take the closed-form trace-maximization path; anything
    else is handed to :func:`min_cost_flow_solve`.
    """
    c = check_cost_matrix(c, m.n)
    levels = detect_two_level(c)
    if levels is None:
        return min_cost_flow_solve(m, c)
    w = trace_max_witness(m)
    z = trace_max_value(m)
    objective = levels.off_cost * m.k - (levels.off_cost - levels.diag_cost) * z
    return w.flow, float(objective)


def augment_sink_source(e1, e2, c, cfg: SinkSourceConfig) -> tuple[Marginals, np.ndarray]:
    """Balance unequal totals with a virtual (n+1)-th zone.

    The virtual zone holds ``u`` users at the first step and ``u + delta``
    at the second, ``delta = sum(e1) - sum(e2)``. Its row is the spawn cost,
    its column the vanish cost, its own cell 0.
    """
    e1 = _as_int_vector(e1, "e1")
    e2 = _as_int_vector(e2, "e2")
    if e1.shape != e2.shape:
        raise ValueError(f"length mismatch: e1 has {e1.size}, e2 has {e2.size}")
    n = e1.size
    c = check_cost_matrix(c, n)
    vanish = np.asarray(cfg.vanish_cost, dtype=float)
    spawn = np.asarray(cfg.spawn_cost, dtype=float)
    if vanish.shape != (n,) or spawn.shape != (n,):
        raise ValueError("vanish_cost and spawn_cost must have one entry per zone")
    delta = int(e1.sum()) - int(e2.sum())
    u = int(cfg.u)
    if u + delta < 0:
        raise ValueError(f"u={u} too small: virtual zone would end at {u + delta}; need u >= {-delta}")
    gamma = np.append(e1, u)
    eta = np.append(e2, u + delta)
    big = np.zeros((n + 1, n + 1))
    big[:n, :n] = c
    big[:n, n] = vanish
    big[n, :n] = spawn
    return check_feasible(gamma, eta), check_cost_matrix(big)
