"""Sparse integral flow matrices."""

from __future__ import annotations

import numpy as np


class FlowMatrix:
    """Sparse nonnegative integer matrix of zone-to-zone trip counts.

    Entries are stored as coordinate arrays sorted by (row, col). Zeros are
    never stored and duplicate coordinates are summed on construction.
    """

    __slots__ = ("n_rows", "n_cols", "rows", "cols", "values")

    def __init__(self, n_rows, n_cols, rows=(), cols=(), values=()):
        if n_rows < 1 or n_cols < 1:
            raise ValueError("flow matrix dimensions must be positive")
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        values = np.asarray(values, dtype=np.int64).ravel()
        if not (rows.shape == cols.shape == values.shape):
            raise ValueError("rows, cols and values must have equal length")
        if values.size:
            if values.min() < 0:
                raise ValueError("flow entries must be nonnegative")
            if rows.min() < 0 or rows.max() >= n_rows or cols.min() < 0 or cols.max() >= n_cols:
                raise IndexError("flow entry outside matrix bounds")
            key = rows * n_cols + cols
            uniq, inv = np.unique(key, return_inverse=True)
            summed = np.zeros(uniq.size, dtype=np.int64)
            np.add.at(summed, inv, values)
            keep = summed > 0
            uniq, summed = uniq[keep], summed[keep]
            rows, cols, values = uniq // n_cols, uniq % n_cols, summed
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self.rows = rows
        self.cols = cols
        self.values = values

    @classmethod
    def from_dense(cls, x) -> "FlowMatrix":
        x = np.asarray(x)
        if x.ndim != 2:
            raise ValueError("expected a 2-d array")
        if np.any(x != np.round(x)):
            raise ValueError("flow entries must be integral")
        r, c = np.nonzero(x)
        return cls(x.shape[0], x.shape[1], r, c, x[r, c].astype(np.int64))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self) -> int:
        return int(self.values.size)

    @property
    def entries(self) -> dict[tuple[int, int], int]:
        return {(int(i), int(j)): int(v) for i, j, v in zip(self.rows, self.cols, self.values)}

    def total(self) -> int:
        return int(self.values.sum())

    def row_sums(self) -> np.ndarray:
        return np.bincount(self.rows, weights=self.values, minlength=self.n_rows).astype(np.int64)

    def col_sums(self) -> np.ndarray:
        return np.bincount(self.cols, weights=self.values, minlength=self.n_cols).astype(np.int64)

    def trace(self) -> int:
        return int(self.values[self.rows == self.cols].sum())

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=np.int64)
        out[self.rows, self.cols] = self.values
        return out

    def cost(self, c) -> float:
        """Total cost sum(c_ij * x_ij), summed in storage order."""
        c = np.asarray(c, dtype=float)
        return float(np.dot(c[self.rows, self.cols], self.values.astype(float)))

    def __getitem__(self, idx) -> int:
        i, j = idx
        hit = np.nonzero((self.rows == i) & (self.cols == j))[0]
        return int(self.values[hit[0]]) if hit.size else 0

    def __eq__(self, other) -> bool:
        if not isinstance(other, FlowMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"FlowMatrix(shape={self.shape}, nnz={self.nnz}, total={self.total()})"
