"""Append-only NDJSON event log and deterministic frame replay.

One JSON object per line. The first line is a header carrying the
schema version and the engine configuration (plus its hash) so a
replay can verify it is reproducing frames under the same settings
that produced the log. Every following line is one event record:

    {"t": <ms since session epoch>, "kind": "...", "payload": {...}}

Record kinds mirror the wire protocol: join, leave, gaze, audio, tick.
"""

from __future__ import annotations

import hashlib
import json
import os
from collections.abc import Iterable, Iterator
from dataclasses import dataclass

from .frames import LayoutMode, RenderFrame, ViewEngine
from .session import ServerConfig, make_engine
from .types import ClientId

SCHEMA = "gazerelay-log/1"

EVENT_KINDS = ("join", "leave", "gaze", "audio", "tick")


class LogError(ValueError):
    """Structurally broken log file."""

    def __init__(self, line_no: int, reason: str) -> None:
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


@dataclass(frozen=True)
class EventRecord:
    wall_t: float
    kind: str
    payload: dict

    def to_line(self) -> str:
        return json.dumps(
            {"t": self.wall_t, "kind": self.kind, "payload": self.payload},
            separators=(",", ":"),
        )


def config_hash(fingerprint: dict) -> str:
    canonical = json.dumps(fingerprint, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


class EventLogWriter:
    """Single-writer, append-only log. Rejects timestamp regressions."""

    def __init__(self, path: str, config: ServerConfig, fsync: bool = False) -> None:
        self.path = path
        self.fsync = fsync
        self._last_t = float("-inf")
        fingerprint = config.engine_fingerprint()
        header = {
            "schema": SCHEMA,
            "config": fingerprint,
            "config_hash": config_hash(fingerprint),
        }
        self._fh = open(path, "w", encoding="utf-8")
        self._fh.write(json.dumps(header, separators=(",", ":")) + "\n")

    def append(self, wall_t: float, kind: str, payload: dict) -> None:
        if wall_t < self._last_t:
            raise ValueError(
                f"timestamp regression: {wall_t} after {self._last_t}")
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        self._last_t = wall_t
        self._fh.write(EventRecord(wall_t, kind, payload).to_line() + "\n")
        if self.fsync:
            self._fh.flush()
            os.fsync(self._fh.fileno())

    def close(self) -> None:
        self._fh.flush()
        self._fh.close()

    def __enter__(self) -> "EventLogWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_log(path: str) -> tuple[dict, list[EventRecord]]:
    """Parse a whole log. Raises LogError with the 1-based line number
    of the first corrupt, out-of-order, or truncated record."""
    with open(path, encoding="utf-8") as fh:
        raw = fh.read()
    lines = raw.split("\n")
    if lines and lines[-1] == "":
        lines.pop()  # trailing newline
    elif lines:
        raise LogError(len(lines), "truncated record (no trailing newline)")
    if not lines:
        raise LogError(1, "empty file, missing header")
    header = _parse_json_line(lines[0], 1)
    if header.get("schema") != SCHEMA:
        raise LogError(1, f"unsupported schema {header.get('schema')!r}")
    if "config" not in header or "config_hash" not in header:
        raise LogError(1, "header missing config")
    if config_hash(header["config"]) != header["config_hash"]:
        raise LogError(1, "config hash mismatch")
    records: list[EventRecord] = []
    last_t = float("-inf")
    for i, line in enumerate(lines[1:], start=2):
        obj = _parse_json_line(line, i)
        try:
            rec = EventRecord(wall_t=float(obj["t"]), kind=obj["kind"],
                              payload=obj["payload"])
        except (KeyError, TypeError, ValueError):
            raise LogError(i, "record missing t/kind/payload") from None
        if rec.kind not in EVENT_KINDS:
            raise LogError(i, f"unknown event kind {rec.kind!r}")
        if rec.wall_t < last_t:
            raise LogError(i, "timestamp regression")
        last_t = rec.wall_t
        records.append(rec)
    return header, records


def _parse_json_line(line: str, line_no: int) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError:
        raise LogError(line_no, "not valid JSON") from None
    if not isinstance(obj, dict):
        raise LogError(line_no, "record is not an object")
    return obj


@dataclass(frozen=True)
class ReplayFrame:
    tick: int
    frame: RenderFrame


def replay(
    header: dict,
    records: Iterable[EventRecord],
    viewer: ClientId,
    mode: LayoutMode | None = None,
) -> Iterator[ReplayFrame]:
    """Re-derive the render frames `viewer` would have seen live.

    The engine is created at the viewer's join record and advanced on
    every subsequent tick record, exactly mirroring the per-member
    engines the session core runs, so output is bit-identical to the
    live frames given an identical config.
    """
    config = ServerConfig.from_engine_fingerprint(header["config"])
    if mode is not None and mode != config.mode:
        config = ServerConfig.from_engine_fingerprint(
            {**header["config"], "mode": mode.value})
    engine: ViewEngine | None = None
    members: dict[ClientId, str] = {}  # id -> role, join order
    edges: dict[ClientId, ClientId] = {}
    audio: dict[ClientId, float] = {}
    for rec in records:
        p = rec.payload
        if rec.kind == "join":
            members[p["id"]] = p["role"]
            if p["id"] == viewer:
                engine = make_engine(viewer, config)
        elif rec.kind == "leave":
            members.pop(p["id"], None)
            edges.pop(p["id"], None)
            for source in [s for s, t in edges.items() if t == p["id"]]:
                del edges[source]
            audio.pop(p["id"], None)
            if p["id"] == viewer:
                engine = None
        elif rec.kind == "gaze":
            if p["target"] is None:
                edges.pop(p["source"], None)
            else:
                edges[p["source"]] = p["target"]
        elif rec.kind == "audio":
            audio[p["id"]] = p["level"]
        elif rec.kind == "tick":
            if engine is None:
                continue
            now = rec.wall_t
            participants = [m for m, role in members.items() if role == "participant"]
            engine.advance(now, participants, edges, audio)
            if engine.ready:
                yield ReplayFrame(tick=p["tick"], frame=engine.render(now))


def replay_file(
    path: str, viewer: ClientId, mode: LayoutMode | None = None
) -> list[ReplayFrame]:
    header, records = read_log(path)
    return list(replay(header, records, viewer, mode))
