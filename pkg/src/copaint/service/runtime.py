"""Single-consumer session runtime behind the HTTP/WS/UDP producers.

All writes funnel through ``enqueue``: producers hand payloads to the
engine thread, which assigns sequence numbers, applies the emission
cascade depth-first, and fans the applied events out to subscribers.
Readers only ever see immutable snapshots or copies.
"""

from __future__ import annotations

import asyncio
import queue
import threading
import time
from concurrent.futures import Future
from typing import Any, Optional

from ..canvas import export_ppm
from ..config import SessionConfig, config_from_dict, config_to_dict
from ..engine import Session, drive, log_header, new_session, snapshot
from ..events import Payload, SessionEvent, Tick, event_to_dict

SNAPSHOT_INTERVAL_MS = 500
CLIENT_BUFFER = 1000


def _deep_merge(base: dict, overrides: dict) -> dict:
    out = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


class ClientHandle:
    """One subscriber: a bounded queue bridged onto an asyncio loop.

    Overflow pushes a terminal error message and marks the handle
    dead; the sender coroutine closes the socket when it sees it.
    """

    def __init__(self, loop: asyncio.AbstractEventLoop, buffer: int = CLIENT_BUFFER):
        self.loop = loop
        self.queue: asyncio.Queue = asyncio.Queue(maxsize=buffer)
        self.dead = False

    def push(self, message: dict) -> None:
        self.loop.call_soon_threadsafe(self._offer, message)

    def push_local(self, message: dict) -> None:
        self._offer(message)

    def _offer(self, message: dict) -> None:
        if self.dead:
            return
        try:
            self.queue.put_nowait(message)
        except asyncio.QueueFull:
            self.dead = True
            try:
                self.queue.get_nowait()  # make room for the terminal error
            except asyncio.QueueEmpty:
                pass
            self.queue.put_nowait(
                {"type": "error", "detail": "slow consumer: event buffer overflow", "terminal": True}
            )


class SessionRuntime:
    """Owns the session and the one logical event consumer.

    ``threaded=True`` (live mode) runs a pump thread with a wall-clock
    tick; ``threaded=False`` applies events synchronously inside
    ``enqueue``, which keeps API tests deterministic.
    """

    def __init__(self, base_cfg: SessionConfig | None = None, threaded: bool = True):
        self.base_cfg = base_cfg or SessionConfig()
        self.threaded = threaded
        self._lock = threading.RLock()
        self.session: Optional[Session] = None
        self._t0 = 0.0
        self._inbox: "queue.Queue[tuple[Payload, Future, Optional[int]]]" = queue.Queue()
        self._clients: list[ClientHandle] = []
        self._clients_lock = threading.Lock()
        self._pump: Optional[threading.Thread] = None
        self._running = False
        self._last_broadcast_snapshot_ms = 0.0
        self._events_since_snapshot = 0
        self.udp_dropped = 0

    # -- lifecycle ---------------------------------------------------------

    def start_session(self, overrides: dict[str, Any] | None = None) -> SessionConfig:
        with self._lock:
            merged = _deep_merge(config_to_dict(self.base_cfg), overrides or {})
            cfg = config_from_dict(merged)
            restarted = self.session is not None
            self.session = new_session(cfg)
            self._t0 = time.monotonic()
        if restarted:
            self._drop_clients("session restarted")
        return cfg

    def reset_session(self) -> None:
        with self._lock:
            if self.session is None:
                raise RuntimeError("session not started")
            cfg = self.session.cfg
            self.session = new_session(cfg)
            self._t0 = time.monotonic()
        self._drop_clients("session reset")

    def _drop_clients(self, reason: str) -> None:
        # a fresh session restarts seq numbering; subscribers must
        # reconnect so they never observe a regression in-connection
        with self._clients_lock:
            clients, self._clients = list(self._clients), []
        for client in clients:
            client.push({"type": "error", "detail": reason, "terminal": True})

    @property
    def started(self) -> bool:
        return self.session is not None

    def start(self) -> None:
        if not self.threaded or self._running:
            return
        self._running = True
        self._pump = threading.Thread(target=self._pump_loop, name="copaint-engine", daemon=True)
        self._pump.start()

    def stop(self) -> None:
        self._running = False
        if self._pump is not None:
            self._pump.join(timeout=2.0)
            self._pump = None

    # -- producers ---------------------------------------------------------

    def now_ms(self) -> int:
        return int((time.monotonic() - self._t0) * 1000.0)

    def enqueue(self, payload: Payload, at_ms: int | None = None) -> int:
        """Hand one input to the engine; returns its sequence number."""
        if self.session is None:
            raise RuntimeError("session not started")
        if not self.threaded:
            with self._lock:
                applied = drive(self.session, payload, at_ms if at_ms is not None else self.now_ms())
            self._fanout(applied)
            return applied[0].seq
        fut: Future = Future()
        self._inbox.put((payload, fut, at_ms))
        return fut.result(timeout=5.0)

    # -- engine thread -----------------------------------------------------

    def _pump_loop(self) -> None:
        tick_s = self.base_cfg.robot.tick_ms / 1000.0
        next_tick = time.monotonic() + tick_s
        while self._running:
            timeout = max(0.0, next_tick - time.monotonic())
            try:
                payload, fut, at_ms = self._inbox.get(timeout=timeout)
            except queue.Empty:
                payload, fut, at_ms = None, None, None
            if payload is not None and self.session is not None:
                with self._lock:
                    applied = drive(
                        self.session, payload, at_ms if at_ms is not None else self.now_ms()
                    )
                if fut is not None:
                    fut.set_result(applied[0].seq)
                self._fanout(applied)
            elif fut is not None:
                fut.set_exception(RuntimeError("session not started"))
            if time.monotonic() >= next_tick:
                if self.session is not None:
                    with self._lock:
                        applied = drive(self.session, Tick(), self.now_ms())
                    self._fanout(applied)
                next_tick += tick_s

    # -- subscribers ---------------------------------------------------------

    def subscribe(self, handle: ClientHandle) -> None:
        with self._clients_lock:
            self._clients.append(handle)

    def unsubscribe(self, handle: ClientHandle) -> None:
        with self._clients_lock:
            if handle in self._clients:
                self._clients.remove(handle)

    def _fanout(self, applied: list[SessionEvent]) -> None:
        with self._clients_lock:
            clients = list(self._clients)
        if not clients:
            return
        messages = [{"type": "event", "data": event_to_dict(ev)} for ev in applied]
        self._events_since_snapshot += len(messages)
        wall_ms = time.monotonic() * 1000.0
        snap = None
        if (
            self._events_since_snapshot
            and wall_ms - self._last_broadcast_snapshot_ms >= SNAPSHOT_INTERVAL_MS
        ):
            snap = {"type": "snapshot", "data": self.snapshot()}
            self._last_broadcast_snapshot_ms = wall_ms
            self._events_since_snapshot = 0
        for client in clients:
            for msg in messages:
                client.push(msg)
            if snap is not None:
                client.push(snap)

    # -- readers -------------------------------------------------------------

    def snapshot(self) -> dict[str, Any]:
        with self._lock:
            if self.session is None:
                raise RuntimeError("session not started")
            return snapshot(self.session)

    def canvas_ppm(self) -> bytes:
        with self._lock:
            if self.session is None:
                raise RuntimeError("session not started")
            return export_ppm(self.session.canvas)

    def header(self) -> dict[str, Any]:
        with self._lock:
            if self.session is None:
                raise RuntimeError("session not started")
            return log_header(self.session.cfg)
