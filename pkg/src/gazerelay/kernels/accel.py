"""Numba-compiled twins of the reference kernels.

Same operations in the same order as ``reference`` (no fastmath), so
results are bit-identical; only the loops are compiled.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from . import reference

_axis_step = njit(cache=True)(reference._axis_step)


@njit(cache=True)
def one_euro_trace(ts_ms, xs, ys, mincutoff, beta, dcutoff):
    n = ts_ms.shape[0]
    out_x = np.empty(n, dtype=np.float64)
    out_y = np.empty(n, dtype=np.float64)
    if n == 0:
        return out_x, out_y
    prev_x = xs[0]
    prev_y = ys[0]
    prev_dx = 0.0
    prev_dy = 0.0
    prev_t = ts_ms[0]
    out_x[0] = prev_x
    out_y[0] = prev_y
    for i in range(1, n):
        te = (ts_ms[i] - prev_t) / 1000.0
        prev_x, prev_dx = _axis_step(prev_x, prev_dx, xs[i], te, mincutoff, beta, dcutoff)
        prev_y, prev_dy = _axis_step(prev_y, prev_dy, ys[i], te, mincutoff, beta, dcutoff)
        out_x[i] = prev_x
        out_y[i] = prev_y
        prev_t = ts_ms[i]
    return out_x, out_y


@njit(cache=True)
def classify_trace(xs, ys, cx1, cy1, cx2, cy2):
    n = xs.shape[0]
    m = cx1.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        hit = -1
        for j in range(m):
            if cx1[j] <= xs[i] <= cx2[j] and cy1[j] <= ys[i] <= cy2[j]:
                hit = j
                break
        out[i] = hit
    return out


@njit(cache=True)
def dwell_trace(cands, ts_ms, dwell_ms, initial):
    n = cands.shape[0]
    out = np.empty(n, dtype=np.int64)
    reported = initial
    pending = 0
    pending_since = 0.0
    pending_active = False
    for i in range(n):
        c = cands[i]
        t = ts_ms[i]
        if not pending_active or c != pending:
            pending = c
            pending_since = t
            pending_active = True
        if pending != reported and t - pending_since >= dwell_ms:
            reported = pending
        out[i] = reported
    return out
