"""UDP sensor ingest: newline-separated ASCII sample lines per datagram."""

from __future__ import annotations

import logging
import socket
import threading

from ..biometric import parse_sensor_line
from ..errors import CopaintError
from ..events import SampleIn
from .runtime import SessionRuntime

logger = logging.getLogger(__name__)


class UdpIngest:
    """Background listener feeding parsed samples into the runtime.

    Malformed lines and samples arriving before a session exists are
    dropped and counted; UDP is lossy by nature so none of this is
    fatal.
    """

    def __init__(self, runtime: SessionRuntime, host: str = "0.0.0.0", port: int | None = None):
        self.runtime = runtime
        self.host = host
        self.port = port if port is not None else runtime.base_cfg.udp_port
        self.sock: socket.socket | None = None
        self.thread: threading.Thread | None = None
        self.running = False
        self.lines_ok = 0
        self.lines_dropped = 0

    def start(self) -> int:
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self.sock.bind((self.host, self.port))
        self.sock.settimeout(0.25)
        self.port = self.sock.getsockname()[1]
        self.running = True
        self.thread = threading.Thread(target=self._loop, name="copaint-udp", daemon=True)
        self.thread.start()
        logger.info("UDP sensor ingest listening on %s:%d", self.host, self.port)
        return self.port

    def stop(self) -> None:
        self.running = False
        if self.thread is not None:
            self.thread.join(timeout=2.0)
            self.thread = None
        if self.sock is not None:
            self.sock.close()
            self.sock = None

    def _loop(self) -> None:
        assert self.sock is not None
        while self.running:
            try:
                data, _addr = self.sock.recvfrom(65536)
            except socket.timeout:
                continue
            except OSError:
                break
            self.ingest_payload(data)

    def ingest_payload(self, data: bytes) -> int:
        """Parse one datagram payload; returns accepted line count."""
        accepted = 0
        for raw in data.splitlines():
            if not raw.strip():
                continue
            try:
                sample = parse_sensor_line(raw)
            except CopaintError as exc:
                self.lines_dropped += 1
                logger.debug("dropped sensor line %r: %s", raw, exc)
                continue
            if not self.runtime.started:
                self.lines_dropped += 1
                self.runtime.udp_dropped += 1
                continue
            try:
                self.runtime.enqueue(SampleIn(sample))
                accepted += 1
                self.lines_ok += 1
            except RuntimeError:
                self.lines_dropped += 1
        return accepted
