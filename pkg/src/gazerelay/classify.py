"""Gaze-target classification, dwell debouncing, calibration scoring, mic state."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .types import (
    ClientId,
    ConfigError,
    GazeSample,
    InsufficientDataError,
    TileLayout,
)

DEFAULT_DWELL_MS = 100.0

# Calibration pass mark; reports are percentages in [0, 100].
CALIBRATION_PASS_PCT = 80.0

# Default acceptance radius, defined at a 1920 px wide screen and scaled
# proportionally for other widths.
CALIBRATION_RADIUS_PX = 60.0
CALIBRATION_REF_SCREEN_W = 1920.0


def classify_target(
    sample: GazeSample, layout: TileLayout, viewer: ClientId
) -> ClientId | None:
    """Owner of the tile whose central area contains the point, if any.

    The central area is the concentric half-width x half-height
    sub-rectangle of each tile; points elsewhere (tile margins, gutters,
    off-grid) classify as None. A hit on the viewer's own tile is
    normalized to None so self-gaze never produces an edge.
    """
    for tile in layout.tiles:
        if tile.contains_central(sample.x, sample.y):
            return None if tile.owner == viewer else tile.owner
    return None


def classify_trace(
    xs: np.ndarray, ys: np.ndarray, layout: TileLayout, viewer: ClientId
) -> np.ndarray:
    """Batch twin of ``classify_target`` over point arrays.

    Returns int64 indices into ``layout.tiles`` with -1 for none;
    viewer-owned hits are already normalized to -1.
    """
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    ys = np.ascontiguousarray(ys, dtype=np.float64)
    rects = np.array([t.central_rect() for t in layout.tiles], dtype=np.float64)
    if rects.size == 0:
        return np.full(xs.shape[0], -1, dtype=np.int64)
    idx = kernels.classify_trace(
        xs, ys,
        np.ascontiguousarray(rects[:, 0]), np.ascontiguousarray(rects[:, 1]),
        np.ascontiguousarray(rects[:, 2]), np.ascontiguousarray(rects[:, 3]),
    )
    for j, tile in enumerate(layout.tiles):
        if tile.owner == viewer:
            idx[idx == j] = -1
    return idx


@dataclass(frozen=True)
class DwellState:
    """Debounce state: what is reported, and what is pending since when."""

    reported: ClientId | None = None
    pending: ClientId | None = None
    pending_since: float | None = None


def classify_with_hysteresis(
    state: DwellState,
    candidate: ClientId | None,
    t: float,
    dwell_ms: float = DEFAULT_DWELL_MS,
) -> tuple[DwellState, ClientId | None]:
    """Report a target change only after the raw candidate held for ``dwell_ms``.

    Raw classifications arrive every tick and flicker at tile borders;
    without this the downstream pose animation thrashes.
    """
    pending = state.pending
    since = state.pending_since
    if since is None or candidate != pending:
        pending = candidate
        since = t
    reported = state.reported
    if pending != reported and t - since >= dwell_ms:
        reported = pending
    return DwellState(reported=reported, pending=pending, pending_since=since), reported


def dwell_trace(
    candidates: np.ndarray,
    ts_ms: np.ndarray,
    dwell_ms: float = DEFAULT_DWELL_MS,
    initial: int = -1,
) -> np.ndarray:
    """Batch twin of ``classify_with_hysteresis`` over index arrays."""
    candidates = np.ascontiguousarray(candidates, dtype=np.int64)
    ts_ms = np.ascontiguousarray(ts_ms, dtype=np.float64)
    return kernels.dwell_trace(candidates, ts_ms, float(dwell_ms), int(initial))


@dataclass(frozen=True)
class CalibrationReport:
    accuracy: float
    samples_used: int
    passed: bool


def calibration_radius(screen_w: float) -> float:
    """Acceptance radius scaled to the given screen width."""
    return CALIBRATION_RADIUS_PX * screen_w / CALIBRATION_REF_SCREEN_W


def score_calibration(
    predictions: list[GazeSample], target: tuple[float, float], radius: float
) -> CalibrationReport:
    """Fraction of predicted points within ``radius`` of the target, as a percentage.

    ``passed`` is true at 80% or better, the gate for proceeding past
    calibration.
    """
    if not predictions:
        raise InsufficientDataError("calibration needs at least one prediction")
    tx, ty = target
    inside = sum(
        1 for p in predictions if math.hypot(p.x - tx, p.y - ty) <= radius
    )
    accuracy = 100.0 * inside / len(predictions)
    return CalibrationReport(
        accuracy=accuracy,
        samples_used=len(predictions),
        passed=accuracy >= CALIBRATION_PASS_PCT,
    )


DEFAULT_MIC_ON = 0.25
DEFAULT_MIC_OFF = 0.15


def audio_to_mic_state(
    level: float,
    prev: bool,
    on_threshold: float = DEFAULT_MIC_ON,
    off_threshold: float = DEFAULT_MIC_OFF,
) -> bool:
    """Two-threshold hysteresis mapping an audio level to the mic icon.

    Turns on at ``on_threshold`` and only back off at ``off_threshold``,
    so a speaker's icon does not flicker across a single boundary.
    """
    if not (0.0 <= off_threshold < on_threshold <= 1.0):
        raise ConfigError("need 0 <= off_threshold < on_threshold <= 1")
    if level >= on_threshold:
        return True
    if level <= off_threshold:
        return False
    return prev
