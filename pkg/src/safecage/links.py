"""Vehicle-to-centre transports.

InProcessLink wires a cage directly into a ControlCentre inside one process,
with optional scripted outage windows so scenarios can exercise command
timeouts deterministically. TcpVehicleLink is the live counterpart: it frames
messages over a socket to a listening centre and feeds inbound commands into
a queue the vehicle loop drains.
"""

from __future__ import annotations

import random
import socket
import threading
import time
from dataclasses import dataclass
from typing import Optional

from .protocol import FrameBuffer, WireMessage, encode_message


@dataclass(frozen=True)
class OutageWindow:
    """Half-open sim-time interval [start_ms, end_ms) during which each
    message is dropped with drop_probability."""

    start_ms: int
    end_ms: int
    drop_probability: float = 1.0

    def __post_init__(self):
        if self.end_ms <= self.start_ms:
            raise ValueError("outage window must have end_ms > start_ms")
        if not 0.0 <= self.drop_probability <= 1.0:
            raise ValueError("drop_probability must be within [0, 1]")

    def covers(self, now_ms: int) -> bool:
        return self.start_ms <= now_ms < self.end_ms


class InProcessLink:
    """Synchronous link for headless runs. Both directions share the outage
    schedule; drops are decided by a seeded RNG so runs replay identically."""

    def __init__(self, windows: tuple[OutageWindow, ...] = (), seed: int = 0):
        self.windows = tuple(windows)
        self._rng = random.Random(seed)
        self.dropped_up = 0
        self.dropped_down = 0
        self._up_sink = None  # centre.ingest
        self._down_sink = None  # cage.handle_ccc_message

    def bind(self, up_sink, down_sink) -> None:
        self._up_sink = up_sink
        self._down_sink = down_sink

    def _should_drop(self, now_ms: int) -> bool:
        for window in self.windows:
            if window.covers(now_ms):
                return self._rng.random() < window.drop_probability
        return False

    def to_centre(self, msg: WireMessage, now_ms: int) -> bool:
        if self._should_drop(now_ms):
            self.dropped_up += 1
            return False
        if self._up_sink is not None:
            self._up_sink(msg)
        return True

    def to_vehicle(self, msg: WireMessage, now_ms: int) -> bool:
        if self._should_drop(now_ms):
            self.dropped_down += 1
            return False
        if self._down_sink is not None:
            self._down_sink(msg)
        return True


class TcpVehicleLink:
    """Client side of the length-prefixed TCP protocol.

    Outbound messages go through a bounded queue flushed by a writer thread;
    when the queue is full the oldest message is discarded (telemetry is
    periodic, losing a stale snapshot is preferable to blocking the control
    loop). A reader thread parses inbound frames into `inbox`.
    """

    OUTBOX_LIMIT = 256

    def __init__(self, host: str, port: int, register: WireMessage, connect_timeout: float = 5.0):
        self._sock = socket.create_connection((host, port), timeout=connect_timeout)
        self._sock.settimeout(None)
        self.inbox: list[WireMessage] = []
        self._inbox_lock = threading.Lock()
        self._outbox: list[WireMessage] = []
        self._outbox_lock = threading.Lock()
        self._outbox_ready = threading.Event()
        self.dropped_outbound = 0
        self._closed = threading.Event()
        # the centre requires Register before anything else on a connection
        self._sock.sendall(encode_message(register))
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._writer = threading.Thread(target=self._write_loop, daemon=True)
        self._reader.start()
        self._writer.start()

    def send(self, msg: WireMessage) -> None:
        with self._outbox_lock:
            if len(self._outbox) >= self.OUTBOX_LIMIT:
                self._outbox.pop(0)
                self.dropped_outbound += 1
            self._outbox.append(msg)
        self._outbox_ready.set()

    def drain_inbox(self) -> list[WireMessage]:
        with self._inbox_lock:
            msgs, self.inbox = self.inbox, []
            return msgs

    def flush(self, timeout: float = 1.0) -> bool:
        """Best-effort wait for the writer to drain the outbox, so a final
        status message survives an immediate close."""
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            with self._outbox_lock:
                if not self._outbox:
                    time.sleep(0.02)  # let the in-flight batch hit the socket
                    return True
            time.sleep(0.01)
        return False

    def close(self) -> None:
        self._closed.set()
        self._outbox_ready.set()
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()

    @property
    def alive(self) -> bool:
        return not self._closed.is_set()

    def _write_loop(self) -> None:
        while not self._closed.is_set():
            self._outbox_ready.wait()
            if self._closed.is_set():
                return
            with self._outbox_lock:
                batch, self._outbox = self._outbox, []
                self._outbox_ready.clear()
            try:
                for msg in batch:
                    self._sock.sendall(encode_message(msg))
            except OSError:
                self._closed.set()
                return

    def _read_loop(self) -> None:
        buf = FrameBuffer()
        while not self._closed.is_set():
            try:
                chunk = self._sock.recv(65536)
            except OSError:
                break
            if not chunk:
                break
            for msg in buf.feed(chunk):
                with self._inbox_lock:
                    self.inbox.append(msg)
        self._closed.set()
