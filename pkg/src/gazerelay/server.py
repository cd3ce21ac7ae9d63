"""WebSocket transport wrapping the session core.

One asyncio task per session drives the tick loop; each connection gets
a bounded send queue and a sender task so one slow client never stalls
the broadcast. All session-state mutation happens on the event loop, so
the core needs no locks.
"""

from __future__ import annotations

import asyncio
import logging

from websockets.asyncio.server import serve as ws_serve
from websockets.exceptions import ConnectionClosed

from . import protocol
from .recording import EventLogWriter
from .session import ServerConfig, SessionCore
from .types import ClientId

log = logging.getLogger(__name__)

SEND_QUEUE_LIMIT = 64


class _Session:
    def __init__(self, server: "SessionServer", session_id: str,
                 record_path: str | None) -> None:
        self.server = server
        self.session_id = session_id
        recorder = (EventLogWriter(record_path, server.config)
                    if record_path is not None else None)
        self.recorder = recorder
        self.core = SessionCore(server.config, recorder=recorder)
        self.queues: dict[ClientId, asyncio.Queue[str]] = {}
        self.senders: dict[ClientId, asyncio.Task] = {}
        self._closed = False
        self.tick_task = asyncio.create_task(self._tick_loop())

    def attach(self, client_id: ClientId, ws) -> None:
        queue: asyncio.Queue[str] = asyncio.Queue(maxsize=SEND_QUEUE_LIMIT)
        self.queues[client_id] = queue
        self.senders[client_id] = asyncio.create_task(
            self._sender(client_id, ws, queue))

    def detach(self, client_id: ClientId) -> None:
        self.queues.pop(client_id, None)
        task = self.senders.pop(client_id, None)
        if task is not None:
            task.cancel()

    def dispatch(self, outbox) -> None:
        encoded: dict[int, str] = {}  # a tick's state dict is shared
        for client_id, msg in outbox:
            queue = self.queues.get(client_id)
            if queue is None:
                continue
            text = encoded.get(id(msg))
            if text is None:
                text = encoded[id(msg)] = protocol.encode(msg)
            try:
                queue.put_nowait(text)
            except asyncio.QueueFull:
                # client is not draining; count the miss, maybe evict
                log.warning("send queue full for %s", client_id)
                self.dispatch(self.core.mark_undeliverable(client_id))

    async def _sender(self, client_id: ClientId, ws, queue) -> None:
        try:
            while True:
                await ws.send(await queue.get())
                self.core.mark_delivered(client_id)
        except (ConnectionClosed, asyncio.CancelledError):
            pass

    async def _tick_loop(self) -> None:
        period = self.core.config.tick_ms / 1000.0
        loop = asyncio.get_running_loop()
        next_t = loop.time()
        try:
            while True:
                self.dispatch(self.core.run_tick())
                next_t += period
                await asyncio.sleep(max(0.0, next_t - loop.time()))
        except asyncio.CancelledError:
            pass

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        self.tick_task.cancel()
        for client_id in list(self.senders):
            self.detach(client_id)
        if self.recorder is not None:
            self.recorder.close()


class SessionServer:
    """Accepts connections, routes messages to per-session cores."""

    def __init__(self, config: ServerConfig | None = None,
                 record_path: str | None = None) -> None:
        self.config = config or ServerConfig()
        self.record_path = record_path
        self.sessions: dict[str, _Session] = {}
        self._ws_server = None

    async def start(self, host: str = "127.0.0.1", port: int = 0) -> int:
        self._ws_server = await ws_serve(self.handle, host, port)
        actual = self._ws_server.sockets[0].getsockname()[1]
        log.info("listening on %s:%d", host, actual)
        return actual

    async def stop(self) -> None:
        # close the listener first so every handler runs its leave path
        # (and the recorder sees it) before sessions are torn down
        if self._ws_server is not None:
            self._ws_server.close()
            await self._ws_server.wait_closed()
        for session in list(self.sessions.values()):
            session.close()
        self.sessions.clear()

    async def run_forever(self, host: str, port: int) -> None:
        await self.start(host, port)
        try:
            await asyncio.Future()
        finally:
            await self.stop()

    def _session_for(self, session_id: str) -> _Session:
        session = self.sessions.get(session_id)
        if session is None:
            path = self.record_path
            if path is not None and any(
                s.recorder is not None for s in self.sessions.values()
            ):
                path = f"{path}.{session_id}"  # one file per session
            session = _Session(self, session_id, path)
            self.sessions[session_id] = session
        return session

    async def handle(self, ws) -> None:
        try:
            raw = await ws.recv()
        except ConnectionClosed:
            return
        try:
            msg = protocol.decode(raw)
            if msg["kind"] != "join":
                raise protocol.ProtocolError("first message must be a join")
        except protocol.ProtocolError as e:
            await ws.send(protocol.encode(protocol.make_error("bad-join", str(e))))
            await ws.close()
            return
        session = self._session_for(msg["session"])
        result = session.core.join(msg["role"])
        if not result.accepted:
            await ws.send(protocol.encode(result.refusal))
            await ws.close()
            return
        client_id = result.client_id
        assert client_id is not None
        session.attach(client_id, ws)
        session.dispatch(result.outbox)
        log.info("%s joined session %s as %s",
                 client_id, session.session_id, result.role)
        try:
            async for raw in ws:
                self._on_message(session, client_id, raw)
        except ConnectionClosed:
            pass
        finally:
            session.detach(client_id)
            session.dispatch(session.core.leave(client_id))
            log.info("%s left session %s", client_id, session.session_id)
            if (not session.core.members
                    and self.sessions.get(session.session_id) is session):
                session.close()
                del self.sessions[session.session_id]

    def _on_message(self, session: _Session, client_id: ClientId,
                    raw: str | bytes) -> None:
        core = session.core
        try:
            msg = protocol.decode(raw)
        except protocol.ProtocolError as e:
            session.dispatch(
                [(client_id, protocol.make_error("bad-message", str(e)))])
            return
        kind = msg["kind"]
        if kind == "gaze":
            core.ingest_gaze(client_id, msg)
        elif kind == "audio":
            core.ingest_audio(client_id, msg)
        elif kind == "signal":
            session.dispatch(core.signal(client_id, msg))
        elif kind == "observe":
            session.dispatch(core.observe(client_id, msg))
        else:
            session.dispatch(
                [(client_id,
                  protocol.make_error("unexpected-kind",
                                      f"cannot handle {kind!r} here"))])


async def record_session(url: str, session_id: str, out_path: str) -> int:
    """Join a running server as the host and write a tick-resolution log.

    State broadcasts are diffed into gaze/audio records, so the log
    replays to the same per-tick state the server held, timestamped on
    the tick clock. Joining requires the host role (hosts get no tile,
    so recording never perturbs the layouts being recorded); if another
    host is already present the command aborts. The header carries
    default engine settings with the server's actual tick rate: a
    server started with non-default geometry should record server-side
    instead (`serve --record`).
    """
    from websockets.asyncio.client import connect

    records = 0
    async with connect(url) as ws:
        await ws.send(protocol.encode(protocol.make_join(session_id, "host")))
        first = protocol.decode(await ws.recv())
        if first["kind"] == "error":
            raise RuntimeError(f"cannot record: {first['message']}")
        if first["kind"] != "welcome":
            raise RuntimeError(f"expected welcome, got {first['kind']!r}")
        config = ServerConfig(tick_ms=first["tick_ms"])
        me = first["id"]
        edges: dict[str, str | None] = {}
        audio: dict[str, float] = {}
        with EventLogWriter(out_path, config) as writer:
            for member in first["members"]:
                if member != me:
                    writer.append(0.0, "join",
                                  {"id": member, "role": "participant"})
                    records += 1
            last_t = 0.0
            async for raw in ws:
                msg = protocol.decode(raw)
                kind = msg["kind"]
                if kind == "peer-joined":
                    writer.append(last_t, "join",
                                  {"id": msg["id"], "role": "participant"})
                    records += 1
                elif kind == "peer-left":
                    writer.append(last_t, "leave", {"id": msg["id"]})
                    records += 1
                elif kind == "state":
                    t = float(msg["tick"] * config.tick_ms)
                    new_edges = {e["source"]: e["target"] for e in msg["edges"]}
                    for source in [s for s in edges if s not in new_edges]:
                        writer.append(t, "gaze", {"source": source, "target": None})
                        records += 1
                    for source, target in new_edges.items():
                        if edges.get(source) != target:
                            writer.append(t, "gaze",
                                          {"source": source, "target": target})
                            records += 1
                    edges = new_edges
                    for entry in msg["audio"]:
                        if audio.get(entry["id"]) != entry["level"]:
                            writer.append(t, "audio", entry)
                            records += 1
                            audio[entry["id"]] = entry["level"]
                    writer.append(t, "tick", {"tick": msg["tick"]})
                    records += 1
                    last_t = t
    return records
