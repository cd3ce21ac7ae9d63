"""Per-viewer visualization directives: arrows, glows, poses, mic icons.

Everything here is deterministic in (event sequence, tick clock): a
``ViewEngine`` fed the same membership/edge/audio snapshots at the same
tick times produces bit-identical frames, which is what makes recorded
sessions replayable and host-mode observation equal to offline replay.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

from .classify import audio_to_mic_state
from .layout import DEFAULT_LAYOUT, LayoutConfig, compute_tile_layout
from .types import ClientId, ConfigError, TileLayout, TileRect

log = logging.getLogger(__name__)


class LayoutMode(enum.Enum):
    BASELINE = "baseline"
    DIRECTIONAL = "directional"
    PERSPECTIVE = "perspective"


_MODE_ALIASES = {
    "b": LayoutMode.BASELINE,
    "baseline": LayoutMode.BASELINE,
    "dir": LayoutMode.DIRECTIONAL,
    "directional": LayoutMode.DIRECTIONAL,
    "perp": LayoutMode.PERSPECTIVE,
    "perspective": LayoutMode.PERSPECTIVE,
}


def parse_mode(name: str) -> LayoutMode:
    try:
        return _MODE_ALIASES[name.strip().lower()]
    except KeyError:
        raise ConfigError(f"unknown layout mode {name!r}") from None


@dataclass(frozen=True)
class RenderConfig:
    """Animation envelope and 3D-pose tuning."""

    fade_in_ms: float = 300.0
    fade_out_ms: float = 300.0
    max_yaw_deg: float = 30.0
    shake_amp_px: float = 4.0
    shake_hz: float = 2.0
    pose_tau_ms: float = 150.0
    mic_on_threshold: float = 0.25
    mic_off_threshold: float = 0.15

    def __post_init__(self) -> None:
        if self.fade_in_ms <= 0 or self.fade_out_ms <= 0:
            raise ConfigError("fade durations must be positive")
        if self.max_yaw_deg < 0 or self.shake_amp_px < 0 or self.pose_tau_ms <= 0:
            raise ConfigError("bad pose config")


DEFAULT_RENDER = RenderConfig()


def opacity_envelope(
    age_ms: float,
    since_end_ms: float | None,
    fade_in_ms: float,
    fade_out_ms: float,
) -> float:
    """Linear fade-in while an edge is active, linear fade-out after it ends.

    For an ended edge, ``age_ms`` is the edge's age at the moment it
    ended; the fade-out ramps down from the opacity it had reached, so
    the curve is continuous at the transition.
    """
    if fade_in_ms <= 0 or fade_out_ms <= 0:
        raise ConfigError("fade durations must be positive")
    base = min(1.0, max(0.0, age_ms / fade_in_ms))
    if since_end_ms is None:
        return base
    return max(0.0, base * (1.0 - since_end_ms / fade_out_ms))


def yaw_toward(
    source_center: tuple[float, float],
    target_center: tuple[float, float],
    max_yaw_deg: float,
    screen_w: float,
) -> float:
    """Yaw (degrees) for a tile turning toward a target tile.

    Purely horizontal: sign follows the direction to the target and the
    magnitude scales with the horizontal separation relative to the
    screen width, clamped at ``max_yaw_deg``.
    """
    dx = target_center[0] - source_center[0]
    if dx == 0.0:
        return 0.0
    mag = min(max_yaw_deg, max_yaw_deg * abs(dx) / screen_w)
    return math.copysign(mag, dx)


def nearest_border_points(
    a: TileRect, b: TileRect
) -> tuple[tuple[float, float], tuple[float, float]]:
    """Closest pair of border points between two disjoint tiles.

    Where the tiles overlap along an axis the shared interval's midpoint
    is used, which picks the visually centered pair among the
    equidistant candidates.
    """
    if a.x + a.w <= b.x:
        ax, bx = a.x + a.w, b.x
    elif b.x + b.w <= a.x:
        ax, bx = a.x, b.x + b.w
    else:
        m = (max(a.x, b.x) + min(a.x + a.w, b.x + b.w)) / 2.0
        ax = bx = m
    if a.y + a.h <= b.y:
        ay, by = a.y + a.h, b.y
    elif b.y + b.h <= a.y:
        ay, by = a.y, b.y + b.h
    else:
        m = (max(a.y, b.y) + min(a.y + a.h, b.y + b.h)) / 2.0
        ay = by = m
    return (ax, ay), (bx, by)


@dataclass(frozen=True)
class Arrow:
    source: ClientId
    target: ClientId
    opacity: float
    x1: float
    y1: float
    x2: float
    y2: float


@dataclass(frozen=True)
class Glow:
    owner: ClientId
    intensity: float


@dataclass(frozen=True)
class Pose:
    owner: ClientId
    yaw_deg: float
    shake_px: float


@dataclass(frozen=True)
class MicIcon:
    owner: ClientId
    on: bool


@dataclass(frozen=True)
class RenderFrame:
    viewer: ClientId
    t: float
    mode: str
    arrows: tuple[Arrow, ...]
    glows: tuple[Glow, ...]
    poses: tuple[Pose, ...]
    mic_icons: tuple[MicIcon, ...]
    tiles: TileLayout


def frame_to_dict(frame: RenderFrame) -> dict:
    """JSON-ready dict with a stable field order (replays compare bytes)."""
    return {
        "viewer": frame.viewer,
        "t": frame.t,
        "mode": frame.mode,
        "arrows": [
            {
                "source": a.source, "target": a.target, "opacity": a.opacity,
                "x1": a.x1, "y1": a.y1, "x2": a.x2, "y2": a.y2,
            }
            for a in frame.arrows
        ],
        "glows": [{"owner": g.owner, "intensity": g.intensity} for g in frame.glows],
        "poses": [
            {"owner": p.owner, "yaw_deg": p.yaw_deg, "shake_px": p.shake_px}
            for p in frame.poses
        ],
        "mic_icons": [{"owner": m.owner, "on": m.on} for m in frame.mic_icons],
        "tiles": {
            "viewer": frame.tiles.viewer,
            "spacing": frame.tiles.spacing,
            "screen_w": frame.tiles.screen_w,
            "screen_h": frame.tiles.screen_h,
            "tiles": [
                {"owner": t.owner, "x": t.x, "y": t.y, "w": t.w, "h": t.h}
                for t in frame.tiles.tiles
            ],
        },
    }


@dataclass
class _ActiveEdge:
    target: ClientId
    started_ms: float


@dataclass
class _FadingEdge:
    source: ClientId
    target: ClientId
    ended_ms: float
    age_at_end_ms: float


class EdgeTracker:
    """Ages the relayed edge set so envelopes can fade in and out.

    Fed the full edge map once per tick; an edge's age starts at the
    tick it first appears, and a replaced or dropped edge moves to the
    fading list until its fade-out completes.
    """

    def __init__(self, config: RenderConfig) -> None:
        self._config = config
        self._active: dict[ClientId, _ActiveEdge] = {}
        self._fading: list[_FadingEdge] = []

    def update(self, edges: dict[ClientId, ClientId], now_ms: float) -> None:
        for source, entry in list(self._active.items()):
            new_target = edges.get(source)
            if new_target != entry.target:
                self._fading.append(
                    _FadingEdge(
                        source=source,
                        target=entry.target,
                        ended_ms=now_ms,
                        age_at_end_ms=now_ms - entry.started_ms,
                    )
                )
                del self._active[source]
        for source, target in edges.items():
            if source not in self._active:
                self._active[source] = _ActiveEdge(target=target, started_ms=now_ms)
        self._fading = [
            f for f in self._fading
            if now_ms - f.ended_ms < self._config.fade_out_ms
        ]

    def active(self, now_ms: float):
        """Yields (source, target, age_ms) for live edges."""
        for source, entry in self._active.items():
            yield source, entry.target, now_ms - entry.started_ms

    def fading(self, now_ms: float):
        """Yields (source, target, age_at_end_ms, since_end_ms) for ended edges."""
        for f in self._fading:
            yield f.source, f.target, f.age_at_end_ms, now_ms - f.ended_ms

    def drop_member(self, member: ClientId) -> None:
        self._active.pop(member, None)
        for source, entry in list(self._active.items()):
            if entry.target == member:
                del self._active[source]
        self._fading = [
            f for f in self._fading if f.source != member and f.target != member
        ]


class ViewEngine:
    """Turns session state snapshots into one viewer's render frames.

    ``advance`` must be called once per tick in order; ``render`` is
    read-only and may be called any number of times after an advance.
    """

    def __init__(
        self,
        viewer: ClientId,
        mode: LayoutMode,
        screen_w: float,
        screen_h: float,
        layout_config: LayoutConfig = DEFAULT_LAYOUT,
        render_config: RenderConfig = DEFAULT_RENDER,
    ) -> None:
        self.viewer = viewer
        self.mode = mode
        self.screen_w = screen_w
        self.screen_h = screen_h
        self.layout_config = layout_config
        self.config = render_config
        self.layout: TileLayout | None = None
        self._members: tuple[ClientId, ...] = ()
        self._edges: dict[ClientId, ClientId] = {}
        self._tracker = EdgeTracker(render_config)
        self._poses: dict[ClientId, float] = {}
        self._mic: dict[ClientId, bool] = {}
        self._last_t: float | None = None
        self.anomalies = 0

    @property
    def ready(self) -> bool:
        """True once the engine has a layout to render against."""
        return self.layout is not None

    def advance(
        self,
        now_ms: float,
        members: list[ClientId],
        edges: dict[ClientId, ClientId],
        audio: dict[ClientId, float],
    ) -> None:
        members_t = tuple(members)
        if members_t != self._members:
            departed = set(self._members) - set(members_t)
            for m in departed:
                self._tracker.drop_member(m)
                self._poses.pop(m, None)
                self._mic.pop(m, None)
            self._members = members_t
            # a lone member has no meaningful layout; frames resume at >= 2
            self.layout = (
                compute_tile_layout(
                    list(members_t), self.viewer, self.screen_w, self.screen_h,
                    self.layout_config,
                )
                if len(members_t) >= 2
                else None
            )
        self._edges = dict(edges)
        self._tracker.update(self._edges, now_ms)
        for owner, level in audio.items():
            if owner in self._members:
                self._mic[owner] = audio_to_mic_state(
                    level, self._mic.get(owner, False),
                    self.config.mic_on_threshold, self.config.mic_off_threshold,
                )
        dt = 0.0 if self._last_t is None else now_ms - self._last_t
        self._advance_poses(now_ms, dt)
        self._last_t = now_ms

    def _goal_yaw(self, owner: ClientId) -> float:
        target = self._edges.get(owner)
        if target is None or target == self.viewer:
            return 0.0
        assert self.layout is not None
        src = self.layout.tile_of(owner)
        dst = self.layout.tile_of(target)
        if src is None or dst is None:
            self.anomalies += 1
            log.warning("edge %s->%s references a member without a tile", owner, target)
            return 0.0
        return yaw_toward(src.center, dst.center, self.config.max_yaw_deg, self.screen_w)

    def _advance_poses(self, now_ms: float, dt_ms: float) -> None:
        # poses only drive perspective rendering; other modes report bad
        # edges at render time, so skipping here keeps one count per tick
        if self.layout is None or self.mode is not LayoutMode.PERSPECTIVE:
            return
        # exponential approach: frame-rate independent, never overshoots
        k = 1.0 - math.exp(-dt_ms / self.config.pose_tau_ms) if dt_ms > 0 else 0.0
        for tile in self.layout.tiles:
            goal = self._goal_yaw(tile.owner)
            yaw = self._poses.get(tile.owner, 0.0)
            yaw = yaw + k * (goal - yaw)
            yaw = max(-self.config.max_yaw_deg, min(self.config.max_yaw_deg, yaw))
            self._poses[tile.owner] = yaw

    def _shake(self, now_ms: float) -> float:
        return self.config.shake_amp_px * math.sin(
            2.0 * math.pi * self.config.shake_hz * now_ms / 1000.0
        )

    def render(self, now_ms: float) -> RenderFrame:
        if self.layout is None:
            raise RuntimeError("render before first advance")
        arrows: list[Arrow] = []
        glows: list[Glow] = []
        poses: list[Pose] = []
        if self.mode is LayoutMode.DIRECTIONAL:
            for source, target, age in self._tracker.active(now_ms):
                self._emit_directional(
                    arrows, glows, source, target,
                    opacity_envelope(age, None, self.config.fade_in_ms,
                                     self.config.fade_out_ms),
                )
            for source, target, age_end, since in self._tracker.fading(now_ms):
                self._emit_directional(
                    arrows, glows, source, target,
                    opacity_envelope(age_end, since, self.config.fade_in_ms,
                                     self.config.fade_out_ms),
                )
        elif self.mode is LayoutMode.PERSPECTIVE:
            shake_now = self._shake(now_ms)
            for tile in self.layout.tiles:
                gazing_at_viewer = self._edges.get(tile.owner) == self.viewer
                poses.append(
                    Pose(
                        owner=tile.owner,
                        yaw_deg=self._poses.get(tile.owner, 0.0),
                        shake_px=shake_now if gazing_at_viewer else 0.0,
                    )
                )
        mic_icons = tuple(
            MicIcon(owner=t.owner, on=self._mic.get(t.owner, False))
            for t in self.layout.tiles
        )
        return RenderFrame(
            viewer=self.viewer,
            t=now_ms,
            mode=self.mode.value,
            arrows=tuple(arrows),
            glows=tuple(glows),
            poses=tuple(poses),
            mic_icons=mic_icons,
            tiles=self.layout,
        )

    def _emit_directional(
        self,
        arrows: list[Arrow],
        glows: list[Glow],
        source: ClientId,
        target: ClientId,
        opacity: float,
    ) -> None:
        assert self.layout is not None
        if target == self.viewer:
            # gaze at the viewer shows as an outer glow on the source tile
            if self.layout.tile_of(source) is not None:
                glows.append(Glow(owner=source, intensity=opacity))
            else:
                self.anomalies += 1
                log.warning("glow edge from unknown member %s skipped", source)
            return
        src = self.layout.tile_of(source)
        dst = self.layout.tile_of(target)
        if src is None or dst is None:
            self.anomalies += 1
            log.warning("edge %s->%s references a member without a tile", source, target)
            return
        (x1, y1), (x2, y2) = nearest_border_points(src, dst)
        arrows.append(
            Arrow(source=source, target=target, opacity=opacity,
                  x1=x1, y1=y1, x2=x2, y2=y2)
        )
