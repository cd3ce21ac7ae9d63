"""Adaptive smoothing of raw gaze streams.

The smoother is a speed-adaptive low-pass filter: position updates use an
exponential smoothing factor whose cutoff frequency rises with the
(smoothed) signal speed, so slow fixation jitter gets heavily damped
while fast saccades pass through with little lag. Per axis, with
``te = (t - prev_t) / 1000``:

    dx   = (x - prev_x_hat) / te
    dxh  = dxh_prev + a(dcutoff, te) * (dx - dxh_prev)
    fc   = mincutoff + beta * |dxh|
    xh   = xh_prev + a(fc, te) * (x - xh_prev)

where ``a(fc, te) = 1 / (1 + tau/te)`` and ``tau = 1 / (2*pi*fc)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .kernels.reference import _axis_step
from .types import ConfigError, GazeSample, OrderingError


@dataclass(frozen=True)
class FilterParams:
    """Smoother tuning.

    ``mincutoff`` trades jitter against responsiveness at rest, ``beta``
    trades lag against overshoot during motion. The defaults are the
    values tuned for gaze streams sampled every 16 ms.
    """

    mincutoff: float = 0.3
    beta: float = 0.3
    dcutoff: float = 1.0

    def __post_init__(self) -> None:
        if self.mincutoff <= 0 or self.dcutoff <= 0:
            raise ConfigError("mincutoff and dcutoff must be > 0")
        if self.beta < 0:
            raise ConfigError("beta must be >= 0")


@dataclass(frozen=True)
class FilterState:
    """Recurrence state for one client stream; start from ``FilterState()``."""

    initialized: bool = False
    prev_x: float = 0.0
    prev_y: float = 0.0
    prev_dx: float = 0.0
    prev_dy: float = 0.0
    prev_t: float = 0.0


def filter_step(
    state: FilterState, params: FilterParams, sample: GazeSample
) -> tuple[FilterState, GazeSample]:
    """Advance the smoother by one sample.

    Returns the updated state and the smoothed sample (same timestamp).
    The first sample passes through unchanged with the derivative seeded
    to zero. Raises ``OrderingError`` on a non-monotonic timestamp and
    leaves the state untouched.
    """
    if not state.initialized:
        new = FilterState(
            initialized=True,
            prev_x=sample.x,
            prev_y=sample.y,
            prev_dx=0.0,
            prev_dy=0.0,
            prev_t=sample.t,
        )
        return new, sample
    if sample.t <= state.prev_t:
        raise OrderingError(
            f"sample at t={sample.t} is not after previous t={state.prev_t}"
        )
    te = (sample.t - state.prev_t) / 1000.0
    xh, dxh = _axis_step(
        state.prev_x, state.prev_dx, sample.x, te,
        params.mincutoff, params.beta, params.dcutoff,
    )
    yh, dyh = _axis_step(
        state.prev_y, state.prev_dy, sample.y, te,
        params.mincutoff, params.beta, params.dcutoff,
    )
    new = FilterState(
        initialized=True, prev_x=xh, prev_y=yh, prev_dx=dxh, prev_dy=dyh,
        prev_t=sample.t,
    )
    return new, replace(sample, x=xh, y=yh)


def smooth_trace(
    ts_ms: np.ndarray,
    xs: np.ndarray,
    ys: np.ndarray,
    params: FilterParams | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Smooth a whole trace at once via the kernel backend.

    Equivalent to folding ``filter_step`` over the stream (bit-exact);
    used on the batch paths where per-sample calls would dominate.
    """
    params = params or FilterParams()
    ts_ms = np.ascontiguousarray(ts_ms, dtype=np.float64)
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    ys = np.ascontiguousarray(ys, dtype=np.float64)
    if not (ts_ms.shape == xs.shape == ys.shape):
        raise ValueError("trace arrays must have equal length")
    if ts_ms.size > 1 and not np.all(np.diff(ts_ms) > 0):
        raise OrderingError("trace timestamps must be strictly increasing")
    return kernels.one_euro_trace(
        ts_ms, xs, ys, params.mincutoff, params.beta, params.dcutoff
    )


def ramp_lag_ms(
    params: FilterParams | None = None,
    tick_ms: float = 16.0,
    speed_px_s: float = 100.0,
    warmup_ms: float = 1000.0,
    duration_ms: float = 3000.0,
) -> float:
    """Worst-case displacement lag on a constant-velocity ramp, expressed
    as the time (ms) the smoothed position trails the true position."""
    params = params or FilterParams()
    n = int(duration_ms // tick_ms) + 1
    ts = np.arange(n, dtype=np.float64) * tick_ms
    xs = speed_px_s * ts / 1000.0
    ys = np.zeros(n, dtype=np.float64)
    xh, _ = smooth_trace(ts, xs, ys, params)
    mask = ts >= warmup_ms
    lag_px = float(np.max(xs[mask] - xh[mask]))
    return lag_px / speed_px_s * 1000.0
