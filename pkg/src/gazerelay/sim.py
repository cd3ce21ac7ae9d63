"""Deterministic discrete-event simulation of whole sessions.

Synthetic clients follow scripted ground-truth gaze targets with
Gaussian pointing noise, run the full client pipeline (smooth,
classify, debounce), and exchange messages with a real ``SessionCore``
through a simulated network (fixed latency + uniform jitter + Bernoulli
loss). Everything runs on a virtual clock, so results depend only on
the scenario (seed included) and never on host speed.

Scenario JSON:

    {
      "members": 5, "duration_ms": 60000, "tick_ms": 16,
      "noise_sigma": 73.6, "seed": 7,
      "net": {"latency_ms": 5.0, "jitter_ms": 3.0, "loss": 0.0},
      "scripts": [[[5000, 1], [4000, null], ...], ...]   // per member:
    }                                                    // (ms, target index)

``scripts`` may be omitted, in which case a seeded random schedule is
generated (segments of 4-8 s, alternating peers and looking-away).
"""

from __future__ import annotations

import heapq
import json
import math
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from . import protocol
from .classify import DEFAULT_DWELL_MS, classify_trace, dwell_trace
from .filtering import FilterParams, ramp_lag_ms, smooth_trace
from .layout import DEFAULT_LAYOUT, compute_tile_layout
from .recording import EventLogWriter
from .session import ServerConfig, SessionCore
from .types import ClientId, TileLayout

Segment = tuple[float, int | None]  # (length_ms, target member index or none)

# how far past a change we keep checking for client convergence
CONVERGENCE_HORIZON_TICKS = 100


@dataclass(frozen=True)
class NetProfile:
    latency_ms: float = 5.0
    jitter_ms: float = 3.0
    loss: float = 0.0

    def __post_init__(self) -> None:
        if self.latency_ms < 0 or self.jitter_ms < 0:
            raise ValueError("latency and jitter must be non-negative")
        if not 0.0 <= self.loss <= 1.0:
            raise ValueError("loss must be within [0, 1]")


@dataclass(frozen=True)
class Scenario:
    members: int
    duration_ms: float
    scripts: tuple[tuple[Segment, ...], ...]
    noise_sigma: float
    net: NetProfile = NetProfile()
    seed: int = 0
    tick_ms: int = protocol.TICK_MS_DEFAULT
    screen_w: float = 1920.0
    screen_h: float = 1080.0
    dwell_ms: float = DEFAULT_DWELL_MS

    def __post_init__(self) -> None:
        if self.members < 2:
            raise ValueError("need at least 2 members")
        if self.duration_ms <= 0 or self.tick_ms <= 0:
            raise ValueError("duration and tick must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if len(self.scripts) != self.members:
            raise ValueError("one script per member required")
        for i, script in enumerate(self.scripts):
            if not script:
                raise ValueError(f"member {i} script is empty")
            total = 0.0
            for length, target in script:
                if length <= 0:
                    raise ValueError("segment lengths must be positive")
                if target is not None and not (
                    0 <= target < self.members and target != i
                ):
                    raise ValueError(
                        f"member {i} script targets invalid index {target}")
                total += length
            if abs(total - self.duration_ms) > 1e-6:
                raise ValueError(
                    f"member {i} script spans {total} ms, not {self.duration_ms}")

    @property
    def n_ticks(self) -> int:
        return int(self.duration_ms // self.tick_ms)

    def to_dict(self) -> dict:
        return {
            "members": self.members,
            "duration_ms": self.duration_ms,
            "tick_ms": self.tick_ms,
            "noise_sigma": self.noise_sigma,
            "seed": self.seed,
            "screen_w": self.screen_w,
            "screen_h": self.screen_h,
            "dwell_ms": self.dwell_ms,
            "net": {
                "latency_ms": self.net.latency_ms,
                "jitter_ms": self.net.jitter_ms,
                "loss": self.net.loss,
            },
            "scripts": [
                [[length, target] for length, target in script]
                for script in self.scripts
            ],
        }


def scenario_from_dict(d: dict) -> Scenario:
    net = NetProfile(**d.get("net", {}))
    members = d["members"]
    duration = float(d["duration_ms"])
    seed = int(d.get("seed", 0))
    if "scripts" in d:
        scripts = tuple(
            tuple((float(length), target) for length, target in script)
            for script in d["scripts"]
        )
    else:
        scripts = random_scripts(
            members, duration, seed,
            tick_ms=float(d.get("tick_ms", protocol.TICK_MS_DEFAULT)))
    return Scenario(
        members=members,
        duration_ms=duration,
        scripts=scripts,
        noise_sigma=float(d["noise_sigma"]),
        net=net,
        seed=seed,
        tick_ms=int(d.get("tick_ms", protocol.TICK_MS_DEFAULT)),
        screen_w=float(d.get("screen_w", 1920.0)),
        screen_h=float(d.get("screen_h", 1080.0)),
        dwell_ms=float(d.get("dwell_ms", DEFAULT_DWELL_MS)),
    )


def load_scenario(path: str) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return scenario_from_dict(json.load(fh))


def random_scripts(
    members: int,
    duration_ms: float,
    seed: int,
    segment_range: tuple[float, float] = (4000.0, 8000.0),
    tick_ms: float = float(protocol.TICK_MS_DEFAULT),
) -> tuple[tuple[Segment, ...], ...]:
    """Glance-and-hold schedules: hold a peer (or no one) for a few
    seconds, then switch to a different target. Segment boundaries are
    tick-aligned so the dwell delay after a change stays inside the
    excluded transition window."""
    rng = np.random.default_rng([seed, 777])
    lo, hi = segment_range
    scripts = []
    for i in range(members):
        segments: list[Segment] = []
        t = 0.0
        prev: int | None = -2  # sentinel: anything is a change
        while t < duration_ms:
            length = round(float(rng.uniform(lo, hi)) / tick_ms) * tick_ms
            length = min(max(length, tick_ms), duration_ms - t)
            options: list[int | None] = [
                j for j in range(members) if j != i and j != prev
            ]
            if prev is not None:
                options.append(None)
            target = options[int(rng.integers(len(options)))]
            segments.append((length, target))
            prev = target
            t += length
        scripts.append(tuple(segments))
    return tuple(scripts)


def gutter_point(layout: TileLayout) -> tuple[float, float]:
    """A point in the gap between the first two tiles: inside the screen,
    outside every tile."""
    t0, t1 = layout.tiles[0], layout.tiles[1]
    return ((t0.x + t0.w + t1.x) / 2.0, t0.y + t0.h / 2.0)


def generate_trace(
    script: tuple[Segment, ...],
    layout: TileLayout,
    members: list[ClientId],
    noise_sigma: float,
    tick_ms: float,
    n_ticks: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per-tick raw gaze points for one member: the scripted target
    tile's center (gutter point for 'none') plus isotropic Gaussian
    noise. Returns (ts_ms, xs, ys, truth) with truth as member indices
    (-1 for none)."""
    ts = np.arange(n_ticks, dtype=np.float64) * tick_ms
    ends = np.cumsum(np.array([s[0] for s in script], dtype=np.float64))
    seg_of_tick = np.clip(
        np.searchsorted(ends, ts, side="right"), 0, len(script) - 1)
    targets = np.array(
        [-1 if s[1] is None else s[1] for s in script], dtype=np.int64)
    gx, gy = gutter_point(layout)
    anchor_x = np.array(
        [layout.tile_of(members[s[1]]).center[0] if s[1] is not None else gx
         for s in script])
    anchor_y = np.array(
        [layout.tile_of(members[s[1]]).center[1] if s[1] is not None else gy
         for s in script])
    xs = anchor_x[seg_of_tick] + rng.normal(0.0, noise_sigma, n_ticks)
    ys = anchor_y[seg_of_tick] + rng.normal(0.0, noise_sigma, n_ticks)
    return ts, xs, ys, targets[seg_of_tick]


def _change_times(script: tuple[Segment, ...]) -> list[float]:
    """Times where the scripted target changes; session start included."""
    changes = [0.0]
    t = 0.0
    for k in range(1, len(script)):
        t += script[k - 1][0]
        if script[k][1] != script[k - 1][1]:
            changes.append(t)
    return changes


@dataclass(frozen=True)
class SimReport:
    members: int
    ticks: int
    tick_ms: int
    noise_sigma: float
    seed: int
    accuracy: tuple[float, ...]
    mean_accuracy: float
    scored_ticks: tuple[int, ...]
    convergence_samples: int
    convergence_mean_ticks: float | None
    convergence_max_ticks: int | None
    unconverged_changes: int
    converged: bool
    filter_lag_ms: float
    gaze_sent: int
    gaze_dropped: int
    state_sent: int
    state_dropped: int
    stale_dropped: int
    anomalies: int

    def to_dict(self) -> dict:
        return {
            "members": self.members,
            "ticks": self.ticks,
            "tick_ms": self.tick_ms,
            "noise_sigma": self.noise_sigma,
            "seed": self.seed,
            "accuracy": list(self.accuracy),
            "mean_accuracy": self.mean_accuracy,
            "scored_ticks": list(self.scored_ticks),
            "convergence": {
                "samples": self.convergence_samples,
                "mean_ticks": self.convergence_mean_ticks,
                "max_ticks": self.convergence_max_ticks,
                "unconverged_changes": self.unconverged_changes,
                "converged": self.converged,
            },
            "filter_lag_ms": self.filter_lag_ms,
            "messages": {
                "gaze_sent": self.gaze_sent,
                "gaze_dropped": self.gaze_dropped,
                "state_sent": self.state_sent,
                "state_dropped": self.state_dropped,
                "stale_dropped": self.stale_dropped,
            },
            "anomalies": self.anomalies,
        }


@dataclass
class SimResult:
    report: SimReport
    snapshots: list[dict] = field(default_factory=list)
    record_path: str | None = None


def run_scenario(
    scenario: Scenario,
    record_path: str | None = None,
    observe: int | None = None,
    filter_params: FilterParams | None = None,
) -> SimResult:
    """Full pipeline + relay simulation.

    ``observe``: member index a host watches; their per-tick frame
    snapshots (as the host receives them) are returned in the result.
    """
    tick_ms = float(scenario.tick_ms)
    n = scenario.members
    n_ticks = scenario.n_ticks
    config = ServerConfig(tick_ms=scenario.tick_ms,
                          screen_w=scenario.screen_w,
                          screen_h=scenario.screen_h)

    # ---- client pipelines, network-independent, batch ----
    member_ids = [f"u{i + 1}" for i in range(n)]  # matches join order below
    layout = compute_tile_layout(
        member_ids, member_ids[0], scenario.screen_w, scenario.screen_h,
        DEFAULT_LAYOUT)
    reported: list[np.ndarray] = []
    accuracy: list[float] = []
    scored: list[int] = []
    for i in range(n):
        rng = np.random.default_rng([scenario.seed, i])
        ts, xs, ys, truth = generate_trace(
            scenario.scripts[i], layout, member_ids, scenario.noise_sigma,
            tick_ms, n_ticks, rng)
        xh, yh = smooth_trace(ts, xs, ys, filter_params)
        cand = classify_trace(xh, yh, layout, member_ids[i])
        rep = dwell_trace(cand, ts, scenario.dwell_ms)
        reported.append(rep)
        excluded = np.zeros(n_ticks, dtype=bool)
        for c in _change_times(scenario.scripts[i]):
            excluded |= (ts >= c) & (ts < c + scenario.dwell_ms)
        keep = ~excluded
        accuracy.append(float(np.mean((rep == truth)[keep])))
        scored.append(int(keep.sum()))

    publish_changes = sum(
        int(np.count_nonzero(rep[1:] != rep[:-1])) for rep in reported)

    # ---- relay under the simulated network ----
    recorder = (EventLogWriter(record_path, config)
                if record_path is not None else None)
    core = SessionCore(config, recorder=recorder)
    for _ in range(n):
        core.join("participant", at_ms=0.0)
    host_id: ClientId | None = None
    if observe is not None:
        host_id = core.join("host", at_ms=0.0).client_id
        core.observe(host_id, protocol.make_observe(member_ids[observe]))

    net = scenario.net
    rng_net = np.random.default_rng([scenario.seed, 10_000])
    up_loss = rng_net.random((n, n_ticks)) < net.loss
    up_jit = rng_net.random((n, n_ticks)) * net.jitter_ms
    down_loss = rng_net.random((n, n_ticks)) < net.loss
    down_jit = rng_net.random((n, n_ticks)) * net.jitter_ms

    # priorities: ingest arrivals before the tick broadcast at equal times
    ARRIVE, TICK, APPLY = 0, 1, 2
    events: list[tuple[float, int, int, tuple]] = []
    counter = 0

    def push(t: float, prio: int, payload: tuple) -> None:
        nonlocal counter
        heapq.heappush(events, (t, prio, counter, payload))
        counter += 1

    gaze_sent = gaze_dropped = 0
    for i in range(n):
        rep = reported[i]
        for k in range(n_ticks):
            gaze_sent += 1
            if up_loss[i, k]:
                gaze_dropped += 1
                continue
            target = None if rep[k] < 0 else member_ids[rep[k]]
            msg = protocol.make_gaze(
                seq=k, source=member_ids[i], target=target, t=k * tick_ms)
            push(k * tick_ms + net.latency_ms + up_jit[i, k], ARRIVE,
                 (member_ids[i], msg))
    for k in range(n_ticks):
        push(k * tick_ms, TICK, (k,))

    pid_index = {cid: i for i, cid in enumerate(member_ids)}
    server_maps: list[dict] = []
    apply_times: list[list[float]] = [[] for _ in range(n)]
    apply_maps: list[list[dict]] = [[] for _ in range(n)]
    last_applied_tick = [-1] * n
    state_sent = state_dropped = 0
    snapshots: list[dict] = []

    while events:
        t, prio, _, payload = heapq.heappop(events)
        if prio == ARRIVE:
            sender, msg = payload
            core.ingest_gaze(sender, msg, at_ms=t)
        elif prio == TICK:
            (k,) = payload
            outbox = core.run_tick()
            server_maps.append(dict(core.edges))
            for cid, msg in outbox:
                if msg["kind"] == "snapshot":
                    snapshots.append(msg)  # host observation channel
                    continue
                if msg["kind"] != "state" or cid == host_id:
                    continue
                i = pid_index[cid]
                state_sent += 1
                if down_loss[i, k]:
                    state_dropped += 1
                    continue
                push(t + net.latency_ms + down_jit[i, k], APPLY,
                     (i, msg["tick"],
                      {e["source"]: e["target"] for e in msg["edges"]}))
        else:
            i, tick_no, edge_map = payload
            if tick_no > last_applied_tick[i]:
                last_applied_tick[i] = tick_no
                apply_times[i].append(t)
                apply_maps[i].append(edge_map)

    if recorder is not None:
        recorder.close()

    conv = _convergence(server_maps, apply_times, apply_maps, tick_ms)
    measured, unconverged = conv
    converged = unconverged == 0 and not (
        publish_changes > 0 and not any(server_maps))
    report = SimReport(
        members=n,
        ticks=n_ticks,
        tick_ms=scenario.tick_ms,
        noise_sigma=scenario.noise_sigma,
        seed=scenario.seed,
        accuracy=tuple(accuracy),
        mean_accuracy=float(np.mean(accuracy)),
        scored_ticks=tuple(scored),
        convergence_samples=len(measured),
        convergence_mean_ticks=float(np.mean(measured)) if measured else None,
        convergence_max_ticks=max(measured) if measured else None,
        unconverged_changes=unconverged,
        converged=converged,
        filter_lag_ms=ramp_lag_ms(filter_params, tick_ms),
        gaze_sent=gaze_sent,
        gaze_dropped=gaze_dropped,
        state_sent=state_sent,
        state_dropped=state_dropped,
        stale_dropped=core.stale_dropped,
        anomalies=core.anomalies,
    )
    return SimResult(report=report, snapshots=snapshots,
                     record_path=record_path)


def _map_at(times: list[float], maps: list[dict], t: float) -> dict:
    idx = bisect_right(times, t) - 1
    return maps[idx] if idx >= 0 else {}


def _convergence(
    server_maps: list[dict],
    apply_times: list[list[float]],
    apply_maps: list[list[dict]],
    tick_ms: float,
) -> tuple[list[int], int]:
    """Per server-side edge-map change, the number of ticks until every
    client's map matches it. Returns (measured delays, count of changes
    that never converged within the horizon)."""
    n_clients = len(apply_times)
    changes = [
        T for T in range(len(server_maps))
        if server_maps[T] != (server_maps[T - 1] if T > 0 else {})
    ]
    measured: list[int] = []
    unconverged = 0
    for ci, T in enumerate(changes):
        next_change = changes[ci + 1] if ci + 1 < len(changes) else None
        limit = CONVERGENCE_HORIZON_TICKS
        preempted = False
        if next_change is not None and next_change - T < limit:
            limit = next_change - T
            preempted = True
        found = None
        for d in range(limit + 1):
            t_check = (T + d) * tick_ms
            if all(
                _map_at(apply_times[i], apply_maps[i], t_check) == server_maps[T]
                for i in range(n_clients)
            ):
                found = d
                break
        if found is not None:
            measured.append(found)
        elif not preempted:
            unconverged += 1
        # preempted-and-unconverged changes are skipped: quiescence never
        # lasted long enough to measure them
    return measured, unconverged
