"""Fleet registry and command dispatch for the control centre.

The centre is transport-agnostic: TCP connections, the in-process link used
by the scenario runner, and the replay feeder all push messages through
ingest() and register a send callable per vehicle. Every message that passes
through lands in the event log with a dense global sequence number.

Commands are correlated to acks by (vehicle_id, command seq). A command that
is not acked within the timeout gets a synthesized timeout outcome, logged as
an internal entry, so the log always accounts for every command exactly once.
"""

from __future__ import annotations

import queue
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

from .eventlog import EventLog, EventLogEntry
from .protocol import COMMAND_KINDS, ProtocolError, WireMessage
from .states import CommandOutcome, VehicleStateSummary

CONNECTION_LOST_AFTER_MS = 3000
COMMAND_TIMEOUT_MS = 2000

CONNECTED = "connected"
LOST = "lost"


@dataclass
class VehicleRecord:
    vehicle_id: str
    last_seen: int
    registered_at: int
    last_seq: int = 0  # highest seq seen from the vehicle
    stale_dropped: int = 0
    last_summary: Optional[VehicleStateSummary] = None
    last_telemetry: Optional[dict] = None
    geometry: Optional[dict] = None

    def connection(self, now: int) -> str:
        return LOST if now - self.last_seen > CONNECTION_LOST_AFTER_MS else CONNECTED


@dataclass
class PendingCommand:
    vehicle_id: str
    seq: int
    deadline: int
    done: threading.Event = field(default_factory=threading.Event)
    outcome: Optional[CommandOutcome] = None


class ControlCentre:
    def __init__(
        self,
        log: EventLog,
        clock: Callable[[], int],
        command_timeout_ms: int = COMMAND_TIMEOUT_MS,
    ):
        self.log = log
        self.clock = clock
        self.command_timeout_ms = command_timeout_ms
        self._lock = threading.RLock()
        self._vehicles: dict[str, VehicleRecord] = {}
        self._senders: dict[str, Callable[[WireMessage], None]] = {}
        self._pending: dict[tuple[str, int], PendingCommand] = {}
        self._out_seq: dict[str, int] = {}
        self._internal_seq = 0
        self._subscribers: list[queue.Queue] = []

    # transports ------------------------------------------------------------

    def attach_sender(self, vehicle_id: str, send: Callable[[WireMessage], None]) -> None:
        with self._lock:
            self._senders[vehicle_id] = send

    def detach_sender(self, vehicle_id: str) -> None:
        with self._lock:
            self._senders.pop(vehicle_id, None)

    # inbound ---------------------------------------------------------------

    def ingest(self, msg: WireMessage) -> Optional[EventLogEntry]:
        """Process one message from a vehicle. Returns the log entry, or None
        if the message was dropped as stale."""
        with self._lock:
            now = self.clock()
            record = self._vehicles.get(msg.vehicle_id)
            if record is None:
                record = VehicleRecord(msg.vehicle_id, last_seen=now, registered_at=now)
                self._vehicles[msg.vehicle_id] = record

            if msg.type == "Register":
                # a restarted vehicle starts its seq over; reset the watermark
                record.last_seq = 0
                record.registered_at = now
                record.geometry = msg.payload.get("geometry")
            elif msg.seq <= record.last_seq:
                record.stale_dropped += 1
                return None
            record.last_seq = max(record.last_seq, msg.seq)
            record.last_seen = now

            if msg.type == "TelemetrySnapshot":
                record.last_telemetry = msg.payload
                summary = msg.payload.get("summary")
                if isinstance(summary, dict):
                    try:
                        record.last_summary = VehicleStateSummary.from_dict(summary)
                    except (KeyError, ValueError):
                        raise ProtocolError("telemetry summary malformed")
            elif msg.type == "Ack":
                self._resolve_ack(msg)

            entry = self.log.append("from_vehicle", msg)
            self._publish(entry)
            return entry

    def _resolve_ack(self, msg: WireMessage) -> None:
        ref = msg.payload.get("ref_seq")
        key = (msg.vehicle_id, ref)
        pending = self._pending.pop(key, None)
        if pending is None:
            return  # late ack after timeout; the log keeps it anyway
        pending.outcome = CommandOutcome.from_dict(msg.payload["outcome"])
        pending.done.set()

    # outbound --------------------------------------------------------------

    def dispatch_command(self, vehicle_id: str, payload: dict) -> PendingCommand:
        kind = payload.get("kind")
        if kind not in COMMAND_KINDS:
            raise ProtocolError(f"unknown command kind {kind!r}")
        with self._lock:
            if vehicle_id not in self._vehicles:
                raise KeyError(vehicle_id)
            now = self.clock()
            seq = self._out_seq.get(vehicle_id, 0) + 1
            self._out_seq[vehicle_id] = seq
            msg = WireMessage(
                type="Command", vehicle_id=vehicle_id, seq=seq, timestamp=now, payload=payload
            )
            pending = PendingCommand(vehicle_id, seq, deadline=now + self.command_timeout_ms)
            self._pending[(vehicle_id, seq)] = pending
            entry = self.log.append("to_vehicle", msg)
            self._publish(entry)
            sender = self._senders.get(vehicle_id)
        # send outside the lock: a transport may block or call back into us
        if sender is not None:
            sender(msg)
        return pending

    def poll_timeouts(self) -> list[PendingCommand]:
        """Expire overdue commands; returns the newly timed out ones."""
        with self._lock:
            now = self.clock()
            expired = [p for p in self._pending.values() if now >= p.deadline]
            for pending in expired:
                del self._pending[(pending.vehicle_id, pending.seq)]
                pending.outcome = CommandOutcome("timeout")
                self._internal_seq += 1
                msg = WireMessage(
                    type="Ack",
                    vehicle_id=pending.vehicle_id,
                    seq=self._internal_seq,
                    timestamp=now,
                    payload={"ref_seq": pending.seq, "outcome": {"status": "timeout"}},
                )
                entry = self.log.append("internal", msg)
                self._publish(entry)
                pending.done.set()
            return expired

    def wait_for_outcome(self, pending: PendingCommand, extra_wait_s: float = 0.5) -> CommandOutcome:
        """Block (wall clock) until the ack arrives or the timeout budget is
        spent, then force expiry. For live transports; the headless runner
        polls instead."""
        budget = self.command_timeout_ms / 1000.0 + extra_wait_s
        pending.done.wait(budget)
        if pending.outcome is None:
            self.poll_timeouts()
        if pending.outcome is None:
            # clock skew: deadline not reached yet, wait the remainder
            pending.done.wait(extra_wait_s)
            if pending.outcome is None:
                with self._lock:
                    self._pending.pop((pending.vehicle_id, pending.seq), None)
                pending.outcome = CommandOutcome("timeout")
                pending.done.set()
        return pending.outcome

    # queries ---------------------------------------------------------------

    def fleet_query(self) -> list[dict]:
        with self._lock:
            now = self.clock()
            out = []
            for vid in sorted(self._vehicles):
                record = self._vehicles[vid]
                out.append(
                    {
                        "vehicle_id": vid,
                        "connection": record.connection(now),
                        "last_seen": record.last_seen,
                        "stale_dropped": record.stale_dropped,
                        "summary": record.last_summary.to_dict() if record.last_summary else None,
                    }
                )
            return out

    def vehicle_detail(self, vehicle_id: str) -> Optional[dict]:
        with self._lock:
            record = self._vehicles.get(vehicle_id)
            if record is None:
                return None
            now = self.clock()
            return {
                "vehicle_id": vehicle_id,
                "connection": record.connection(now),
                "last_seen": record.last_seen,
                "stale_dropped": record.stale_dropped,
                "geometry": record.geometry,
                "telemetry": record.last_telemetry,
            }

    def known_vehicle(self, vehicle_id: str) -> bool:
        with self._lock:
            return vehicle_id in self._vehicles

    # streaming -------------------------------------------------------------

    def subscribe(self, maxsize: int = 1024) -> queue.Queue:
        q: queue.Queue = queue.Queue(maxsize=maxsize)
        with self._lock:
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    def republish(self, entry: EventLogEntry) -> None:
        """Hand an already-logged entry to live subscribers. Replay uses this
        for centre-originated entries that must not be re-ingested."""
        with self._lock:
            self._publish(entry)

    def _publish(self, entry: EventLogEntry) -> None:
        for q in self._subscribers:
            try:
                q.put_nowait(entry)
            except queue.Full:
                # a stalled client loses the oldest entry, not the stream
                try:
                    q.get_nowait()
                    q.put_nowait(entry)
                except (queue.Empty, queue.Full):
                    pass
