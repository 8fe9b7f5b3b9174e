"""Numba inner loops for the stochastic gradient fit.

The pass computes, for each requested row, the frozen-coefficient gradient
and that row's objective contribution against all rows, reading positions
as they stand at the start of the batch. Writes are per-row, so the loop is
race-free and bit-reproducible for any thread count.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange


@njit(cache=True, parallel=True, fastmath=True)
def batch_pass(P, yn, batch_rows, grads, obj):
    n, m = P.shape
    inv_m = 1.0 / m
    mean_row = np.zeros(m)
    for i in range(n):
        for a in range(m):
            mean_row[a] += P[i, a]
    for a in range(m):
        mean_row[a] /= n
    sqn = np.empty(n)
    proj = np.empty(n)
    for i in prange(n):
        sq = 0.0
        pr = 0.0
        for a in range(m):
            v = P[i, a]
            sq += v * v
            pr += mean_row[a] * v
        sqn[i] = sq
        proj[i] = pr * inv_m

    for idx in prange(batch_rows.shape[0]):
        i = batch_rows[idx]
        yi = yn[i]
        sq_i = sqn[i]
        pr_i = proj[i]
        for a in range(m):
            grads[idx, a] = 0.0
        acc = 0.0
        for j in range(n):
            if j == i:
                continue
            raw = 0.0
            for a in range(m):
                raw += P[i, a] * P[j, a]
            dot = raw * inv_m
            q = sq_i + sqn[j] + 2.0 * raw
            if q < 0.0:
                q = 0.0
            w = 1.0 + np.sqrt(q) * inv_m
            b = abs(pr_i + proj[j])
            ygap = abs(yi - yn[j])
            r = dot + ygap
            acc += w * r * r + b * dot * dot
            c = 2.0 * (w * r + b * dot) * inv_m
            for a in range(m):
                grads[idx, a] += c * P[j, a]
        obj[idx] = acc
