"""Post-hoc conversation metrics over recorded event logs.

Both metrics integrate edge intervals in continuous time (no tick
quantization): an edge holds from the record that set it until the
record that replaced or removed it, the source or target leaving, or
the end of the log.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .recording import EventRecord
from .types import ClientId, InsufficientDataError

# a member with no edge counts toward this pseudo-target
_IDLE = None


@dataclass(frozen=True)
class AttentionMatrix:
    members: list[ClientId]
    matrix: np.ndarray  # (n, n), cell (i, j) = fraction of time i targeted j
    idle: np.ndarray  # (n,), fraction of time i targeted no one (or was absent)
    duration_ms: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("source," + ",".join(self.members) + ",idle\n")
        for i, member in enumerate(self.members):
            row = ",".join(f"{v:.9f}" for v in self.matrix[i])
            buf.write(f"{member},{row},{self.idle[i]:.9f}\n")
        return buf.getvalue()


@dataclass(frozen=True)
class MutualGazeEpisode:
    a: ClientId
    b: ClientId
    start_ms: float
    end_ms: float


def _session_end(records: list[EventRecord], end_ms: float | None) -> float:
    if end_ms is not None:
        return end_ms
    return records[-1].wall_t if records else 0.0


def _participants(records: list[EventRecord]) -> list[ClientId]:
    out: list[ClientId] = []
    for rec in records:
        if rec.kind == "join" and rec.payload["role"] == "participant":
            out.append(rec.payload["id"])
    return out


def attention_matrix(
    records: list[EventRecord], end_ms: float | None = None
) -> AttentionMatrix:
    """Fraction of session time each member spent targeting each other.

    The denominator is the whole session duration; time before joining,
    after leaving, or with no edge all land in the idle column, which is
    integrated explicitly rather than derived as a remainder.
    """
    end = _session_end(records, end_ms)
    if end <= 0.0:
        raise InsufficientDataError("log covers no duration")
    members = _participants(records)
    index = {m: i for i, m in enumerate(members)}
    n = len(members)
    targeted = np.zeros((n, n))
    idle = np.zeros(n)
    # per-source current target and the time it was entered; None source
    # entries mean absent (counts as idle, integrated at join/close time)
    current: dict[ClientId, tuple[ClientId | None, float]] = {}
    joined_at: dict[ClientId, float] = {}

    def settle(source: ClientId, until: float) -> None:
        target, since = current[source]
        dt = until - since
        i = index[source]
        if target is not None and target in index:
            targeted[i, index[target]] += dt
        else:
            idle[i] += dt

    for rec in records:
        p = rec.payload
        if rec.kind == "join" and p["role"] == "participant":
            joined_at[p["id"]] = rec.wall_t
            idle[index[p["id"]]] += rec.wall_t  # absent-before-join
            current[p["id"]] = (_IDLE, rec.wall_t)
        elif rec.kind == "leave":
            who = p["id"]
            if who in current:
                settle(who, rec.wall_t)
                del current[who]
                idle[index[who]] += end - rec.wall_t  # absent-after-leave
            # anyone looking at the departed goes idle
            for source, (target, _) in list(current.items()):
                if target == who:
                    settle(source, rec.wall_t)
                    current[source] = (_IDLE, rec.wall_t)
        elif rec.kind == "gaze":
            source = p["source"]
            if source in current:
                settle(source, rec.wall_t)
                current[source] = (p["target"], rec.wall_t)
    for source in current:
        settle(source, end)
    return AttentionMatrix(
        members=members,
        matrix=targeted / end,
        idle=idle / end,
        duration_ms=end,
    )


def mutual_gaze_episodes(
    records: list[EventRecord], end_ms: float | None = None
) -> list[MutualGazeEpisode]:
    """Maximal intervals where a→b and b→a hold simultaneously.

    Pairs are reported with `a` the earlier joiner; zero-length overlaps
    are dropped. Output is ordered by start time, then pair.
    """
    end = _session_end(records, end_ms)
    members = _participants(records)
    order = {m: i for i, m in enumerate(members)}
    edges: dict[ClientId, ClientId] = {}
    open_eps: dict[tuple[ClientId, ClientId], float] = {}
    episodes: list[MutualGazeEpisode] = []

    def pair_of(x: ClientId, y: ClientId) -> tuple[ClientId, ClientId]:
        return (x, y) if order[x] < order[y] else (y, x)

    def close(pair: tuple[ClientId, ClientId], t: float) -> None:
        start = open_eps.pop(pair)
        if t > start:
            episodes.append(MutualGazeEpisode(pair[0], pair[1], start, t))

    def sync(t: float) -> None:
        mutual = {
            pair_of(s, tgt)
            for s, tgt in edges.items()
            if edges.get(tgt) == s and s != tgt
        }
        for pair in [p for p in open_eps if p not in mutual]:
            close(pair, t)
        for pair in mutual:
            open_eps.setdefault(pair, t)

    for rec in records:
        p = rec.payload
        if rec.kind == "gaze":
            if p["target"] is None:
                edges.pop(p["source"], None)
            else:
                edges[p["source"]] = p["target"]
            sync(rec.wall_t)
        elif rec.kind == "leave":
            who = p["id"]
            edges.pop(who, None)
            for source in [s for s, t in edges.items() if t == who]:
                del edges[source]
            sync(rec.wall_t)
    for pair in list(open_eps):
        close(pair, end)
    episodes.sort(key=lambda e: (e.start_ms, order[e.a], order[e.b]))
    return episodes


def episodes_to_csv(episodes: list[MutualGazeEpisode]) -> str:
    buf = io.StringIO()
    buf.write("a,b,start_ms,end_ms\n")
    for e in episodes:
        buf.write(f"{e.a},{e.b},{e.start_ms},{e.end_ms}\n")
    return buf.getvalue()
