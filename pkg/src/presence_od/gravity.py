"""Doubly constrained gravity model fitted by iterative proportional fitting."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .flow import FlowMatrix
from .transitions import NonConvergence


@dataclass(frozen=True)
class GravityParams:
    alpha: float = 1.0
    cost_floor: float = 0.1
    tol: float = 1e-9
    max_iter: int = 1000

    def __post_init__(self):
        if not (self.alpha > 0 and self.cost_floor > 0 and self.tol > 0):
            raise ValueError("alpha, cost_floor and tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass(eq=False)
class GravityFit:
    flow: np.ndarray
    a: np.ndarray
    b: np.ndarray
    iterations: int
    residuals: list[float] = field(default_factory=list)


def gravity_fit(e1, e2, c, params: GravityParams = GravityParams()) -> GravityFit:
    """Fit ``x_ij = a_i * b_j * e1_i * e2_j / max(c_ij, floor)**alpha`` to both marginals.

    ``a`` and ``b`` start at one and are rescaled alternately (rows, then
    columns) until every row and column sum is within ``params.tol`` of its
    target. ``residuals`` holds the L1 marginal error after each sweep.
    """
    e1 = np.asarray(e1, dtype=float)
    e2 = np.asarray(e2, dtype=float)
    c = np.asarray(c, dtype=float)
    n = e1.size
    if e1.shape != (n,) or e2.shape != (n,) or c.shape != (n, n):
        raise ValueError("dimension mismatch between marginals and cost matrix")
    if np.any(e1 < 0) or np.any(e2 < 0):
        raise ValueError("marginals must be nonnegative")
    s1, s2 = e1.sum(), e2.sum()
    if abs(s1 - s2) > 1e-6 * max(s1, s2, 1.0):
        raise ValueError(f"marginal totals differ: {s1} vs {s2}")

    deter = np.maximum(c, params.cost_floor) ** (-params.alpha)
    a = np.ones(n)
    b = np.ones(n)
    if s1 == 0:
        return GravityFit(np.zeros((n, n)), a, b, 0, [0.0])

    residuals = []
    for it in range(1, params.max_iter + 1):
        row_pull = deter @ (b * e2)
        if np.any((row_pull <= 0) & (e1 > 0)):
            bad = int(np.flatnonzero((row_pull <= 0) & (e1 > 0))[0])
            raise ValueError(f"zone {bad} has production but no reachable attraction")
        a = np.divide(1.0, row_pull, out=np.ones(n), where=row_pull > 0)
        col_pull = deter.T @ (a * e1)
        b = np.divide(1.0, col_pull, out=np.ones(n), where=col_pull > 0)
        flow = (a * e1)[:, None] * deter * (b * e2)[None, :]
        row_err = np.abs(flow.sum(axis=1) - e1)
        col_err = np.abs(flow.sum(axis=0) - e2)
        residuals.append(float(row_err.sum() + col_err.sum()))
        if row_err.max() < params.tol and col_err.max() < params.tol:
            return GravityFit(flow, a, b, it, residuals)
    raise NonConvergence(
        f"IPF did not reach tol={params.tol} in {params.max_iter} sweeps (L1 residual {residuals[-1]:.3g})",
        params.max_iter,
        residuals[-1],
    )


@dataclass(eq=False)
class FlowComparison:
    l1: float
    cosine: float
    cosine_defined: bool
    row_residual: np.ndarray
    col_residual: np.ndarray

    def as_dict(self) -> dict:
        return {
            "l1": self.l1,
            "cosine": self.cosine,
            "cosine_defined": self.cosine_defined,
            "max_row_residual": float(np.abs(self.row_residual).max(initial=0.0)),
            "max_col_residual": float(np.abs(self.col_residual).max(initial=0.0)),
        }


def compare_flows(flow_a, flow_b) -> FlowComparison:
    """Elementwise L1, cosine similarity and marginal residuals (a minus b).

    If either matrix is all zero the cosine is reported as 0 with
    ``cosine_defined=False``.
    """
    a = flow_a.to_dense().astype(float) if isinstance(flow_a, FlowMatrix) else np.asarray(flow_a, dtype=float)
    b = flow_b.to_dense().astype(float) if isinstance(flow_b, FlowMatrix) else np.asarray(flow_b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    l1 = float(np.abs(a - b).sum())
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        cos, ok = 0.0, False
    else:
        cos, ok = float(np.dot(a.ravel(), b.ravel()) / (na * nb)), True
    return FlowComparison(l1, cos, ok, a.sum(axis=1) - b.sum(axis=1), a.sum(axis=0) - b.sum(axis=0))


def gravity_vs_lp_report(flow_gravity, flow_lp) -> FlowComparison:
    return compare_flows(flow_gravity, flow_lp)
