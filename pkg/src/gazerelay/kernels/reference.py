"""Pure numpy/python reference implementations of the hot trace kernels.

These are the semantics of record: the numba twins in ``accel`` must
produce bit-identical output (same operations, same order, float64).
"""

from __future__ import annotations

import math

import numpy as np


def _axis_step(
    prev_x: float,
    prev_dx: float,
    x: float,
    te: float,
    mincutoff: float,
    beta: float,
    dcutoff: float,
) -> tuple[float, float]:
    """One adaptive low-pass update along a single axis.

    ``te`` is the elapsed time in seconds. The derivative is measured
    against the previous *smoothed* value, then smoothed itself at the
    derivative cutoff; the position cutoff rises with derivative speed.
    The exponential updates use the incremental form
    ``prev + a * (x - prev)`` so a constant stream is a bit-exact fixed
    point.
    """
    tau_d = 1.0 / (2.0 * math.pi * dcutoff)
    a_d = 1.0 / (1.0 + tau_d / te)
    dx = (x - prev_x) / te
    dxh = prev_dx + a_d * (dx - prev_dx)
    fc = mincutoff + beta * abs(dxh)
    tau = 1.0 / (2.0 * math.pi * fc)
    a = 1.0 / (1.0 + tau / te)
    xh = prev_x + a * (x - prev_x)
    return xh, dxh


def one_euro_trace(ts_ms, xs, ys, mincutoff, beta, dcutoff):
    """Smooth a whole (t, x, y) trace; first sample passes through.

    Returns the smoothed ``(xs, ys)`` arrays. Timestamps must be
    strictly increasing (the streaming API enforces this; here it is a
    precondition).
    """
    n = ts_ms.shape[0]
    out_x = np.empty(n, dtype=np.float64)
    out_y = np.empty(n, dtype=np.float64)
    if n == 0:
        return out_x, out_y
    prev_x = float(xs[0])
    prev_y = float(ys[0])
    prev_dx = 0.0
    prev_dy = 0.0
    prev_t = float(ts_ms[0])
    out_x[0] = prev_x
    out_y[0] = prev_y
    for i in range(1, n):
        te = (float(ts_ms[i]) - prev_t) / 1000.0
        prev_x, prev_dx = _axis_step(
            prev_x, prev_dx, float(xs[i]), te, mincutoff, beta, dcutoff
        )
        prev_y, prev_dy = _axis_step(
            prev_y, prev_dy, float(ys[i]), te, mincutoff, beta, dcutoff
        )
        out_x[i] = prev_x
        out_y[i] = prev_y
        prev_t = float(ts_ms[i])
    return out_x, out_y


def classify_trace(xs, ys, cx1, cy1, cx2, cy2):
    """Hit-test points against central rects; first containing rect wins.

    Rects are given as parallel coordinate arrays (x1, y1, x2, y2),
    bounds inclusive. Returns an int64 array of rect indices, -1 where
    no rect contains the point.
    """
    n = xs.shape[0]
    # (n, m) containment mask; argmax picks the first hit per row
    inside = (
        (xs[:, None] >= cx1[None, :])
        & (xs[:, None] <= cx2[None, :])
        & (ys[:, None] >= cy1[None, :])
        & (ys[:, None] <= cy2[None, :])
    )
    idx = np.argmax(inside, axis=1).astype(np.int64)
    idx[~inside.any(axis=1)] = -1
    if n == 0:
        return np.empty(0, dtype=np.int64)
    return idx


def dwell_trace(cands, ts_ms, dwell_ms, initial):
    """Debounce a per-tick candidate stream with a stability window.

    ``cands`` holds tile indices (-1 = none). The reported value only
    switches once the raw candidate has held steady for ``dwell_ms``.
    """
    n = cands.shape[0]
    out = np.empty(n, dtype=np.int64)
    reported = int(initial)
    pending = 0
    pending_since = 0.0
    pending_active = False
    for i in range(n):
        c = int(cands[i])
        t = float(ts_ms[i])
        if not pending_active or c != pending:
            pending = c
            pending_since = t
            pending_active = True
        if pending != reported and t - pending_since >= dwell_ms:
            reported = pending
        out[i] = reported
    return out
