"""Exact min-cost transportation by successive shortest augmenting paths.

The network is the complete bipartite graph rows -> cols with unbounded arc
capacities, plus a backward arc col -> row wherever flow is positive.
Dijkstra runs on reduced costs (node potentials keep them nonnegative) from
every row that still has supply and stops at the first column with unmet
demand; the path is then augmented by its bottleneck. Integral marginals give
integral augmentations, so the result is an integral vertex.

The inner loops are plain Python over lists: Dijkstra typically settles only
a few rows per augmentation, and per-call numpy overhead would dominate.

Ties are resolved towards the lowest index: the heap orders by (distance,
columns before rows, index) and a relaxation needs a strict improvement.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

_COL = 0
_ROW = 1


def transport_ssp(supply, demand, cost) -> np.ndarray:
    """Return an optimal integral flow (dense int64 array) for the transport problem.

    ``supply`` (length p) and ``demand`` (length q) are nonnegative integers
    with equal sums; ``cost`` is a finite real (p, q) matrix.
    """
    supply = np.asarray(supply, dtype=np.int64)
    demand = np.asarray(demand, dtype=np.int64)
    cost_arr = np.asarray(cost, dtype=float)
    if cost_arr.ndim != 2:
        raise ValueError("cost must be a 2-d matrix")
    p, q = cost_arr.shape
    if supply.shape != (p,) or demand.shape != (q,):
        raise ValueError("cost matrix shape does not match marginals")
    if supply.sum() != demand.sum():
        raise ValueError("supply and demand totals differ")
    if not np.all(np.isfinite(cost_arr)):
        raise ValueError("cost matrix has non-finite entries")

    excess = supply.tolist()
    deficit = demand.tolist()
    left = sum(excess)
    cost = cost_arr.tolist()
    x: dict[tuple[int, int], int] = {}
    # rows carrying flow into each column, i.e. heads of backward arcs
    back_of: list[set[int]] = [set() for _ in range(q)]

    # reduced cost of row i -> col j is cost[i][j] + pot_r[i] - pot_c[j] >= 0
    pot_r = [0.0] * p
    pot_c = cost_arr.min(axis=0).tolist()
    inf = math.inf

    while left:
        dist_r = [inf] * p
        dist_c = [inf] * q
        done_r = [False] * p
        done_c = [False] * q
        pred_r = [-1] * p
        pred_c = [-1] * q
        heap = [(0.0, _ROW, i) for i in range(p) if excess[i] > 0]
        for _, _, i in heap:
            dist_r[i] = 0.0
        heapq.heapify(heap)

        target = -1
        while heap:
            d, kind, v = heapq.heappop(heap)
            if kind == _COL:
                if done_c[v] or d != dist_c[v]:
                    continue
                done_c[v] = True
                if deficit[v] > 0:
                    target = v
                    break
                pc = pot_c[v]
                for i in sorted(back_of[v]):
                    if done_r[i]:
                        continue
                    red = pc - cost[i][v] - pot_r[i]
                    nd = d + red if red > 0.0 else d
                    if nd < dist_r[i]:
                        dist_r[i] = nd
                        pred_r[i] = v
                        heapq.heappush(heap, (nd, _ROW, i))
            else:
                if done_r[v] or d != dist_r[v]:
                    continue
                done_r[v] = True
                row = cost[v]
                pr = pot_r[v]
                for j in range(q):
                    if done_c[j]:
                        continue
                    red = row[j] + pr - pot_c[j]
                    nd = d + red if red > 0.0 else d
                    if nd < dist_c[j]:
                        dist_c[j] = nd
                        pred_c[j] = v
                        heapq.heappush(heap, (nd, _COL, j))

        if target < 0:
            raise RuntimeError("no augmenting path; marginals are inconsistent")

        bound = dist_c[target]
        for i in range(p):
            di = dist_r[i]
            pot_r[i] += di if di < bound else bound
        for j in range(q):
            dj = dist_c[j]
            pot_c[j] += dj if dj < bound else bound

        fwd = []
        bwd = []
        j = target
        while True:
            i = pred_c[j]
            fwd.append((i, j))
            jb = pred_r[i]
            if jb < 0:
                start = i
                break
            bwd.append((i, jb))
            j = jb

        delta = min(excess[start], deficit[target])
        for arc in bwd:
            delta = min(delta, x[arc])
        for arc in fwd:
            x[arc] = x.get(arc, 0) + delta
            back_of[arc[1]].add(arc[0])
        for arc in bwd:
            x[arc] -= delta
            if x[arc] == 0:
                del x[arc]
                back_of[arc[1]].discard(arc[0])
        excess[start] -= delta
        deficit[target] -= delta
        left -= delta

    out = np.zeros((p, q), dtype=np.int64)
    for (i, j), v in x.items():
        out[i, j] = v
    return out
