"""Exact minimum-cost rectangular assignment (Hungarian method, shortest augmenting paths)."""

from __future__ import annotations

import numpy as np


def hungarian(cost) -> tuple[np.ndarray, float]:
    """Assign every row of ``cost`` (rows <= cols) to a distinct column.

    Returns ``(col_of_row, total_cost)``. O(rows^2 * cols) with row/column
    potentials, so it stays exact for any finite real costs.
    """
    c = np.asarray(cost, dtype=float)
    if c.ndim != 2:
        raise ValueError("cost must be a 2-D matrix")
    n, m = c.shape
    if n == 0:
        return np.zeros(0, dtype=int), 0.0
    if n > m:
        raise ValueError(f"need rows <= cols, got {n}x{m}")
    if not np.all(np.isfinite(c)):
        raise ValueError("cost must be finite")

    inf = float("inf")
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    p = np.zeros(m + 1, dtype=int)  # p[j]: row (1-based) matched to column j, 0 = free
    way = np.zeros(m + 1, dtype=int)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(m + 1, inf)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used[1:]
            cur = c[i0 - 1] - u[i0] - v[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            cand = np.where(free, minv[1:], inf)
            j1 = int(np.argmin(cand)) + 1
            delta = cand[j1 - 1]
            used_idx = np.nonzero(used)[0]
            u[p[used_idx]] += delta
            v[used_idx] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1

    col_of_row = np.empty(n, dtype=int)
    for j in range(1, m + 1):
        if p[j]:
            col_of_row[p[j] - 1] = j - 1
    total = float(c[np.arange(n), col_of_row].sum())
    return col_of_row, total
