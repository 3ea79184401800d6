"""Append-only NDJSON event log and its replay.

Every message the control centre sends, receives or synthesizes lands here,
one JSON object per line:

    {"global_seq": n, "wall_time": ms, "direction": d, "message": {...}}

global_seq is dense (1, 2, 3, ...) across all vehicles, in processing order.
direction is from_vehicle, to_vehicle or internal (synthesized entries such
as command timeouts). Entries are flushed per append so a crash loses at most
the line being written.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator

from .protocol import WireMessage, canonical_json

DIRECTIONS = ("from_vehicle", "to_vehicle", "internal")


class LogCorruptError(ValueError):
    """A log line failed to parse or validate; carries the 1-based line number."""

    def __init__(self, line_no: int, detail: str):
        super().__init__(f"log line {line_no}: {detail}")
        self.line_no = line_no


@dataclass(frozen=True)
class EventLogEntry:
    global_seq: int
    wall_time: int
    direction: str
    message: WireMessage

    def to_dict(self) -> dict:
        return {
            "global_seq": self.global_seq,
            "wall_time": self.wall_time,
            "direction": self.direction,
            "message": self.message.to_dict(),
        }


class EventLog:
    """Writer half. Thread safe; one instance owns the file."""

    def __init__(self, path: str | Path, clock: Callable[[], int]):
        self._path = Path(path)
        self._clock = clock
        self._lock = threading.Lock()
        self._seq = 0
        self._path.parent.mkdir(parents=True, exist_ok=True)
        if self._path.exists() and self._path.stat().st_size:
            # resume numbering after the last intact entry
            for entry in read_log(self._path):
                self._seq = entry.global_seq
        self._fh = open(self._path, "ab")

    @property
    def path(self) -> Path:
        return self._path

    def append(self, direction: str, message: WireMessage) -> EventLogEntry:
        if direction not in DIRECTIONS:
            raise ValueError(f"unknown direction {direction!r}")
        with self._lock:
            self._seq += 1
            entry = EventLogEntry(self._seq, int(self._clock()), direction, message)
            self._fh.write(canonical_json(entry.to_dict()) + b"\n")
            self._fh.flush()
            return entry

    def close(self) -> None:
        with self._lock:
            if not self._fh.closed:
                self._fh.close()

    def __enter__(self) -> "EventLog":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_log(path: str | Path) -> Iterator[EventLogEntry]:
    """Parse and validate a log file; raises LogCorruptError on the first bad
    line, including gaps in global_seq."""
    expected_seq = None
    with open(path, "rb") as fh:
        for line_no, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                raise LogCorruptError(line_no, "blank line")
            try:
                data = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise LogCorruptError(line_no, f"invalid JSON ({exc.msg})") from exc
            try:
                entry = EventLogEntry(
                    global_seq=int(data["global_seq"]),
                    wall_time=int(data["wall_time"]),
                    direction=data["direction"],
                    message=WireMessage.from_dict(data["message"]),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise LogCorruptError(line_no, f"bad entry: {exc}") from exc
            if entry.direction not in DIRECTIONS:
                raise LogCorruptError(line_no, f"unknown direction {entry.direction!r}")
            if expected_seq is not None and entry.global_seq != expected_seq:
                raise LogCorruptError(
                    line_no,
                    f"global_seq {entry.global_seq}, expected {expected_seq} (dense ordering)",
                )
            expected_seq = entry.global_seq + 1
            yield entry


def replay(
    path: str | Path,
    sink: Callable[[EventLogEntry], None],
    speed_factor: float = 1.0,
    sleep: Callable[[float], None] | None = None,
) -> int:
    """Feed log entries to sink, pacing by recorded wall_time deltas divided
    by speed_factor. Returns the number of entries delivered."""
    if not (speed_factor > 0):
        raise ValueError(f"speed_factor must be > 0, got {speed_factor!r}")
    if sleep is None:
        import time

        sleep = time.sleep
    count = 0
    prev_time: int | None = None
    for entry in read_log(path):
        if prev_time is not None and entry.wall_time > prev_time:
            sleep((entry.wall_time - prev_time) / 1000.0 / speed_factor)
        prev_time = entry.wall_time
        sink(entry)
        count += 1
    return count


def ack_accounting(entries) -> tuple[list[int], list[int], list[int]]:
    """Per-vehicle command/ack bookkeeping flattened into three multisets:
    command seqs sent, ack ref_seqs received, timeout ref_seqs synthesized.

    Seqs are namespaced by vehicle id so multi-vehicle logs account cleanly.
    """
    commands: list = []
    acks: list = []
    timeouts: list = []
    for entry in entries:
        msg = entry.message
        if msg.type == "Command" and entry.direction == "to_vehicle":
            commands.append((msg.vehicle_id, msg.seq))
        elif msg.type == "Ack" and entry.direction == "from_vehicle":
            acks.append((msg.vehicle_id, msg.payload["ref_seq"]))
        elif msg.type == "Ack" and entry.direction == "internal":
            timeouts.append((msg.vehicle_id, msg.payload["ref_seq"]))
    return commands, acks, timeouts
