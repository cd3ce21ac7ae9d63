"""Wire protocol: one JSON message per WebSocket text frame."""

from __future__ import annotations

import json
from typing import Any

from .types import ClientId

TICK_MS_DEFAULT = 16


class ProtocolError(ValueError):
    """Malformed or out-of-schema message."""


def encode(msg: dict) -> str:
    return json.dumps(msg, separators=(",", ":"))


def decode(text: str | bytes) -> dict:
    try:
        msg = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProtocolError(f"not valid JSON: {e}") from None
    if not isinstance(msg, dict) or "kind" not in msg:
        raise ProtocolError("message must be an object with a 'kind'")
    validate(msg)
    return msg


def make_join(session: str, role: str = "participant") -> dict:
    return {"kind": "join", "session": session, "role": role}


def make_welcome(client_id: ClientId, members: list[ClientId], tick_ms: int) -> dict:
    return {"kind": "welcome", "id": client_id, "members": members, "tick_ms": tick_ms}


def make_peer_joined(client_id: ClientId) -> dict:
    return {"kind": "peer-joined", "id": client_id}


def make_peer_left(client_id: ClientId) -> dict:
    return {"kind": "peer-left", "id": client_id}


def make_signal(from_id: ClientId, to_id: ClientId, payload: str) -> dict:
    return {"kind": "signal", "from": from_id, "to": to_id, "payload": payload}


def make_gaze(seq: int, source: ClientId, target: ClientId | None, t: float) -> dict:
    return {"kind": "gaze", "seq": seq, "source": source, "target": target, "t": t}


def make_audio(seq: int, source: ClientId, level: float) -> dict:
    return {"kind": "audio", "seq": seq, "source": source, "level": level}


def make_state(
    tick: int,
    edges: list[tuple[ClientId, ClientId | None]],
    audio: list[tuple[ClientId, float]],
) -> dict:
    return {
        "kind": "state",
        "tick": tick,
        "edges": [{"source": s, "target": t} for s, t in edges],
        "audio": [{"id": i, "level": lv} for i, lv in audio],
    }


def make_observe(target: ClientId | None) -> dict:
    return {"kind": "observe", "target": target}


def make_snapshot(viewer: ClientId, tick: int, frame: dict) -> dict:
    return {"kind": "snapshot", "viewer": viewer, "tick": tick, "frame": frame}


def make_error(code: str, message: str) -> dict:
    return {"kind": "error", "code": code, "message": message}


def _require(msg: dict, fields: dict[str, type | tuple[type, ...]]) -> None:
    for name, types in fields.items():
        if name not in msg:
            raise ProtocolError(f"{msg.get('kind')} message missing field {name!r}")
        if not isinstance(msg[name], types):
            raise ProtocolError(f"{msg.get('kind')} field {name!r} has wrong type")


_OPTIONAL_STR = (str, type(None))

_VALIDATORS: dict[str, dict[str, Any]] = {
    "join": {"session": str, "role": str},
    "welcome": {"id": str, "members": list, "tick_ms": int},
    "peer-joined": {"id": str},
    "peer-left": {"id": str},
    "signal": {"from": str, "to": str, "payload": str},
    "gaze": {"seq": int, "source": str, "target": _OPTIONAL_STR, "t": (int, float)},
    "audio": {"seq": int, "source": str, "level": (int, float)},
    "state": {"tick": int, "edges": list, "audio": list},
    "observe": {"target": _OPTIONAL_STR},
    "snapshot": {"viewer": str, "tick": int, "frame": dict},
    "error": {"code": str, "message": str},
}


def validate(msg: dict) -> None:
    kind = msg["kind"]
    fields = _VALIDATORS.get(kind)
    if fields is None:
        raise ProtocolError(f"unknown message kind {kind!r}")
    _require(msg, fields)
    if kind == "join" and msg["role"] not in ("participant", "host"):
        raise ProtocolError(f"unknown role {msg['role']!r}")
    if kind == "audio" and not 0.0 <= msg["level"] <= 1.0:
        raise ProtocolError("audio level must be within [0, 1]")
