"""Transport-free session core: membership, state ingestion, tick fan-out.

The core is a deterministic state machine; the WebSocket layer and the
simulation harness both drive it through the same methods. Every
mutation happens on a single logical owner (the caller's event loop),
and all outbound traffic is returned as an outbox of
``(recipient, message-dict)`` pairs for the transport to deliver.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from . import protocol
from .frames import (
    DEFAULT_RENDER,
    LayoutMode,
    RenderConfig,
    ViewEngine,
    frame_to_dict,
)
from .layout import DEFAULT_LAYOUT, LayoutConfig
from .types import ClientId

log = logging.getLogger(__name__)

Outbox = list[tuple[ClientId, dict]]


@dataclass(frozen=True)
class ServerConfig:
    tick_ms: int = protocol.TICK_MS_DEFAULT
    capacity: int = 12
    miss_threshold: int = 3
    screen_w: float = 1920.0
    screen_h: float = 1080.0
    mode: LayoutMode = LayoutMode.DIRECTIONAL
    layout: LayoutConfig = DEFAULT_LAYOUT
    render: RenderConfig = DEFAULT_RENDER

    def engine_fingerprint(self) -> dict:
        """Everything replay needs to reproduce frames bit-exactly."""
        return {
            "tick_ms": self.tick_ms,
            "mode": self.mode.value,
            "screen_w": self.screen_w,
            "screen_h": self.screen_h,
            "layout": {
                "aspect": self.layout.aspect,
                "spacing_frac": self.layout.spacing_frac,
                "min_tile_w": self.layout.min_tile_w,
                "min_tile_h": self.layout.min_tile_h,
                "include_self": self.layout.include_self,
                "class_fills": list(self.layout.class_fills),
                "grow_ms": self.layout.grow_ms,
                "shrink_idle_ms": self.layout.shrink_idle_ms,
            },
            "render": {
                "fade_in_ms": self.render.fade_in_ms,
                "fade_out_ms": self.render.fade_out_ms,
                "max_yaw_deg": self.render.max_yaw_deg,
                "shake_amp_px": self.render.shake_amp_px,
                "shake_hz": self.render.shake_hz,
                "pose_tau_ms": self.render.pose_tau_ms,
                "mic_on_threshold": self.render.mic_on_threshold,
                "mic_off_threshold": self.render.mic_off_threshold,
            },
        }

    @staticmethod
    def from_engine_fingerprint(d: dict) -> "ServerConfig":
        return ServerConfig(
            tick_ms=d["tick_ms"],
            mode=LayoutMode(d["mode"]),
            screen_w=d["screen_w"],
            screen_h=d["screen_h"],
            layout=LayoutConfig(
                aspect=d["layout"]["aspect"],
                spacing_frac=d["layout"]["spacing_frac"],
                min_tile_w=d["layout"]["min_tile_w"],
                min_tile_h=d["layout"]["min_tile_h"],
                include_self=d["layout"]["include_self"],
                class_fills=tuple(d["layout"]["class_fills"]),
                grow_ms=d["layout"]["grow_ms"],
                shrink_idle_ms=d["layout"]["shrink_idle_ms"],
            ),
            render=RenderConfig(**d["render"]),
        )


@dataclass
class Member:
    client_id: ClientId
    role: str
    last_gaze_seq: int = -1
    last_audio_seq: int = -1
    misses: int = 0


@dataclass
class JoinResult:
    client_id: ClientId | None
    role: str | None
    outbox: Outbox = field(default_factory=list)
    accepted: bool = True
    refusal: dict | None = None  # error to send on the raw connection, then close


def make_engine(viewer: ClientId, config: ServerConfig) -> ViewEngine:
    return ViewEngine(
        viewer=viewer,
        mode=config.mode,
        screen_w=config.screen_w,
        screen_h=config.screen_h,
        layout_config=config.layout,
        render_config=config.render,
    )


class SessionCore:
    """One session's authoritative state and fan-out logic."""

    def __init__(self, config: ServerConfig, recorder=None) -> None:
        self.config = config
        self.recorder = recorder
        self.members: dict[ClientId, Member] = {}
        self.edges: dict[ClientId, ClientId] = {}
        self.audio: dict[ClientId, float] = {}
        self.host: ClientId | None = None
        self.observed: ClientId | None = None
        self.tick: int = 0
        self.anomalies: int = 0
        self.stale_dropped: int = 0
        self._next_ordinal = 1
        # one continuously-advanced engine per participant, created at
        # join, so host-mode snapshots match an offline replay bit-exactly
        self._engines: dict[ClientId, ViewEngine] = {}

    # -- membership -----------------------------------------------------

    def participants(self) -> list[ClientId]:
        """Members with tiles, in join order (the host never has one)."""
        return [m.client_id for m in self.members.values() if m.role == "participant"]

    def join(self, requested_role: str = "participant", at_ms: float | None = None) -> JoinResult:
        if len(self.members) >= self.config.capacity:
            return JoinResult(
                client_id=None, role=None, accepted=False,
                refusal=protocol.make_error("capacity", "session is full"),
            )
        client_id = f"u{self._next_ordinal}"
        self._next_ordinal += 1
        role = requested_role
        outbox: Outbox = []
        if requested_role == "host" and self.host is not None:
            role = "participant"
            outbox.append(
                (client_id, protocol.make_error(
                    "host-taken", "a host is already present; joined as participant"))
            )
        member = Member(client_id=client_id, role=role)
        self.members[client_id] = member
        if role == "host":
            self.host = client_id
        else:
            self._engines[client_id] = make_engine(client_id, self.config)
        self._record("join", {"id": client_id, "role": role}, at_ms)
        outbox.append(
            (client_id, protocol.make_welcome(
                client_id, list(self.members), self.config.tick_ms))
        )
        for other in self.members:
            if other != client_id:
                outbox.append((other, protocol.make_peer_joined(client_id)))
        return JoinResult(client_id=client_id, role=role, outbox=outbox)

    def leave(self, client_id: ClientId, at_ms: float | None = None) -> Outbox:
        if client_id not in self.members:
            return []
        del self.members[client_id]
        self._engines.pop(client_id, None)
        self.edges.pop(client_id, None)
        for source in [s for s, t in self.edges.items() if t == client_id]:
            del self.edges[source]
        self.audio.pop(client_id, None)
        if self.host == client_id:
            self.host = None
            self.observed = None
        if self.observed == client_id:
            self.observed = None
        self._record("leave", {"id": client_id}, at_ms)
        return [(other, protocol.make_peer_left(client_id)) for other in self.members]

    # -- signaling relay --------------------------------------------------

    def signal(self, sender: ClientId, msg: dict) -> Outbox:
        """Deliver an opaque signaling payload; contents are never parsed."""
        if msg.get("from") != sender:
            self.anomalies += 1
            return [(sender, protocol.make_error("bad-sender", "from must match connection"))]
        to = msg["to"]
        if to not in self.members:
            return [(sender, protocol.make_error(
                "unknown-recipient", f"no member {to!r}"))]
        return [(to, msg)]

    # -- state ingestion --------------------------------------------------

    def ingest_gaze(self, sender: ClientId, msg: dict, at_ms: float | None = None) -> None:
        member = self.members.get(sender)
        if member is None or msg["source"] != sender or member.role == "host":
            self.anomalies += 1
            return
        if msg["seq"] <= member.last_gaze_seq:
            self.stale_dropped += 1
            return
        member.last_gaze_seq = msg["seq"]
        target = msg["target"]
        if target == sender:
            target = None  # self-gaze is never an edge
        if target is not None and target not in self.members:
            self.anomalies += 1
            return
        if target is None:
            removed = self.edges.pop(sender, None) is not None
            if removed:
                self._record("gaze", {"source": sender, "target": None}, at_ms)
        else:
            if self.edges.get(sender) != target:
                self._record("gaze", {"source": sender, "target": target}, at_ms)
            self.edges[sender] = target

    def ingest_audio(self, sender: ClientId, msg: dict, at_ms: float | None = None) -> None:
        member = self.members.get(sender)
        if member is None or msg["source"] != sender or member.role == "host":
            self.anomalies += 1
            return
        if msg["seq"] <= member.last_audio_seq:
            self.stale_dropped += 1
            return
        member.last_audio_seq = msg["seq"]
        self.audio[sender] = msg["level"]
        self._record("audio", {"id": sender, "level": msg["level"]}, at_ms)

    # -- observation ------------------------------------------------------

    def observe(self, requester: ClientId, msg: dict) -> Outbox:
        if requester != self.host:
            return [(requester, protocol.make_error(
                "not-host", "observe requires the host role"))]
        target = msg["target"]
        if target is None:
            self.observed = None
            return []
        if target not in self.members or self.members[target].role != "participant":
            return [(requester, protocol.make_error(
                "unknown-target", f"no participant {target!r}"))]
        self.observed = target
        return []

    # -- the tick ---------------------------------------------------------

    def now_ms(self) -> float:
        """Logical session clock: the time of the upcoming tick."""
        return float(self.tick * self.config.tick_ms)

    def run_tick(self) -> Outbox:
        """Advance engines, emit one coalesced state broadcast plus any
        observe snapshot, and bump the tick counter."""
        now = self.now_ms()
        self._record("tick", {"tick": self.tick}, now)
        participants = self.participants()
        for engine in self._engines.values():
            engine.advance(now, participants, self.edges, self.audio)
        join_order = {cid: i for i, cid in enumerate(self.members)}
        edge_list = sorted(self.edges.items(), key=lambda kv: join_order[kv[0]])
        audio_list = sorted(self.audio.items(), key=lambda kv: join_order[kv[0]])
        state = protocol.make_state(self.tick, edge_list, audio_list)
        outbox: Outbox = [(cid, state) for cid in self.members]
        if self.observed is not None and self.host is not None:
            engine = self._engines.get(self.observed)
            if engine is not None and engine.ready:
                outbox.append(
                    (self.host, protocol.make_snapshot(
                        self.observed, self.tick,
                        frame_to_dict(engine.render(now))))
                )
        self.tick += 1
        return outbox

    # -- liveness ---------------------------------------------------------

    def mark_delivered(self, client_id: ClientId) -> None:
        member = self.members.get(client_id)
        if member is not None:
            member.misses = 0

    def mark_undeliverable(self, client_id: ClientId, at_ms: float | None = None) -> Outbox:
        """Count a failed tick delivery; evict after the miss threshold."""
        member = self.members.get(client_id)
        if member is None:
            return []
        member.misses += 1
        if member.misses >= self.config.miss_threshold:
            log.info("evicting %s after %d undeliverable ticks", client_id, member.misses)
            return self.leave(client_id, at_ms)
        return []

    def _record(self, kind: str, payload: dict, at_ms: float | None) -> None:
        if self.recorder is not None:
            t = self.now_ms() if at_ms is None else at_ms
            self.recorder.append(t, kind, payload)
