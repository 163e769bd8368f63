"""Row-stochastic transition matrices built from estimated flows.

Stochastic matrices are dense float arrays; flows may be passed either as
:class:`~presence_od.flow.FlowMatrix` or as any nonnegative 2-d array (for
instance an average of several flows).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .flow import FlowMatrix

ROW_SUM_ATOL = 1e-9


class NonConvergence(RuntimeError):
    """An iterative procedure stopped without meeting its tolerance."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


def check_stochastic(p, atol: float = ROW_SUM_ATOL) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] < 1:
        raise ValueError(f"stochastic matrix must be square and nonempty, got shape {p.shape}")
    if np.any(p < -atol) or np.any(p > 1 + atol):
        raise ValueError("stochastic matrix entries must lie in [0, 1]")
    dev = np.max(np.abs(p.sum(axis=1) - 1.0))
    if dev > atol:
        raise ValueError(f"rows do not sum to 1 (max deviation {dev:.3g})")
    return p


def _dense(x) -> np.ndarray:
    if isinstance(x, FlowMatrix):
        return x.to_dense().astype(float)
    return np.asarray(x, dtype=float)


def row_normalize(x) -> np.ndarray:
    """Divide each row by its sum; an all-zero row becomes the identity row."""
    x = _dense(x)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError(f"flow must be square, got shape {x.shape}")
    if np.any(x < 0):
        raise ValueError("flow has negative entries")
    sums = x.sum(axis=1)
    empty = sums == 0
    p = np.divide(x, sums[:, None], out=np.zeros_like(x), where=~empty[:, None])
    p[empty, np.flatnonzero(empty)] = 1.0
    return p


def propagate(p, e) -> np.ndarray:
    """Presence one step later: ``p.T @ e``."""
    p = np.asarray(p, dtype=float)
    e = np.asarray(e, dtype=float)
    if e.shape != (p.shape[0],):
        raise ValueError(f"vector of length {e.shape} does not match matrix of size {p.shape[0]}")
    return p.T @ e


def k_step_power(p, k: int) -> np.ndarray:
    if k < 1:
        raise ValueError("k must be at least 1")
    p = check_stochastic(p)
    # binary exponentiation
    return np.linalg.matrix_power(p, int(k))


def chained_product(ps, steps: int) -> np.ndarray:
    """Operator for ``steps`` transitions, step ``j`` using ``ps[j % len(ps)]``.

    The result ``S`` satisfies ``S.T @ e == ps[steps-1].T @ ... @ ps[0].T @ e``.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    ps = [np.asarray(q, dtype=float) for q in ps]
    if not ps:
        raise ValueError("need at least one matrix")
    n = ps[0].shape
    if any(q.shape != n for q in ps):
        raise ValueError("all matrices must have the same dimension")
    out = ps[0].copy()
    for j in range(1, steps):
        out = out @ ps[j % len(ps)]
    return out


def duration_interpolate(s_k, s_k1, t_k: float, t_k1: float, duration: float) -> np.ndarray:
    """Blend the k-step and (k+1)-step matrices for a trip of length ``duration``.

    Weight on ``s_k`` is ``(t_k1 - duration) / (t_k1 - t_k)``, so the result
    equals ``s_k`` at ``duration == t_k`` and ``s_k1`` at ``t_k1``.
    """
    s_k = np.asarray(s_k, dtype=float)
    s_k1 = np.asarray(s_k1, dtype=float)
    if s_k.shape != s_k1.shape:
        raise ValueError("matrix dimensions differ")
    if not t_k < t_k1:
        raise ValueError("need t_k < t_k1")
    if not t_k <= duration <= t_k1:
        raise ValueError(f"duration {duration} outside [{t_k}, {t_k1}]")
    w = (t_k1 - duration) / (t_k1 - t_k)
    return w * s_k + (1.0 - w) * s_k1


@dataclass(frozen=True, eq=False)
class DurationHistogram:
    """Trip-duration probabilities per bin.

    ``steps[i]`` is the number of sampling intervals bin ``i`` is mapped to;
    by default bin ``i`` uses the ``(i + 1)``-step matrix.
    """

    weights: np.ndarray
    bin_width: float = 1.0
    steps: tuple[int, ...] | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("histogram needs at least one bin")
        if np.any(w < 0):
            raise ValueError("histogram weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"histogram weights sum to {w.sum()}, not 1")
        if not self.bin_width > 0:
            raise ValueError("bin_width must be positive")
        steps = tuple(range(1, w.size + 1)) if self.steps is None else tuple(int(s) for s in self.steps)
        if len(steps) != w.size or min(steps) < 1:
            raise ValueError("steps must give one positive step count per bin")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "steps", steps)


def histogram_mix(ss, h: DurationHistogram) -> np.ndarray:
    """Convex combination ``sum_i h_i * ss[i]``."""
    ss = [np.asarray(s, dtype=float) for s in ss]
    if len(ss) != h.weights.size:
        raise ValueError(f"{len(ss)} matrices for {h.weights.size} histogram bins")
    out = np.zeros_like(ss[0])
    for w, s in zip(h.weights, ss):
        if s.shape != out.shape:
            raise ValueError("matrix dimensions differ")
        out += w * s
    return out


def step_matrices(p, steps) -> dict[int, np.ndarray]:
    """Powers ``p**s`` for each requested step count, reusing lower powers."""
    p = check_stochastic(p)
    out = {}
    cur, at = p.copy(), 1
    for s in sorted(set(int(s) for s in steps)):
        if s < 1:
            raise ValueError("step counts must be positive")
        if s - at > 0:
            cur = cur @ np.linalg.matrix_power(p, s - at)
            at = s
        out[s] = cur.copy()
    return out


def histogram_transition(p, h: DurationHistogram) -> np.ndarray:
    """Mix the powers of a one-step matrix according to a duration histogram."""
    mats = step_matrices(p, h.steps)
    return histogram_mix([mats[s] for s in h.steps], h)


def _periodic_closed_class(p) -> bool:
    """True if some closed communicating class of the chain has period > 1."""
    adj = csr_matrix(p > 0)
    n_comp, labels = connected_components(adj, directed=True, connection="strong")
    rows, cols = adj.nonzero()
    leaves = np.ones(n_comp, dtype=bool)
    cross = labels[rows] != labels[cols]
    leaves[labels[rows[cross]]] = False
    for comp in np.flatnonzero(leaves):
        members = np.flatnonzero(labels == comp)
        root = int(members[0])
        order, _ = breadth_first_order(adj, root, directed=True, return_predecessors=True)
        level = np.full(p.shape[0], -1)
        level[root] = 0
        for v in order:
            for w in adj.indices[adj.indptr[v] : adj.indptr[v + 1]]:
                if level[w] < 0:
                    level[w] = level[v] + 1
        inside = (labels[rows] == comp) & (labels[cols] == comp)
        period = int(np.gcd.reduce(np.abs(level[rows[inside]] + 1 - level[cols[inside]])))
        if period > 1:
            return True
    return False


def stationary_distribution(p, tol: float = 1e-10, max_iter: int = 100_000) -> np.ndarray:
    """Power iteration on ``p.T`` from the uniform vector.

    Stops when successive iterates differ by less than ``tol`` in L1 and
    returns the last iterate ``f`` (then ``|p.T f - f|_1 < tol`` as well).
    Chains with a periodic closed class are rejected up front, since the
    iteration is not guaranteed to settle for them.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    p = check_stochastic(p)
    if _periodic_closed_class(p):
        raise NonConvergence("chain has a periodic closed class; power iteration does not settle", 0)
    n = p.shape[0]
    f = np.full(n, 1.0 / n)
    pt = p.T
    diff = np.inf
    for it in range(1, max_iter + 1):
        g = pt @ f
        g /= g.sum()
        diff = np.abs(g - f).sum()
        f = g
        if diff < tol:
            return f
    raise NonConvergence(f"no convergence after {max_iter} iterations (last change {diff:.3g})", max_iter, diff)
