"""Wire protocol between vehicle and control centre.

Messages are UTF-8 JSON objects framed by a 4-byte big-endian length prefix.
Encoding is canonical (sorted keys, no whitespace) so that a message encodes
to exactly one byte sequence; the event log and the determinism guarantees
rely on that.

Envelope: {type, vehicle_id, seq, timestamp, payload}. seq increases strictly
per (vehicle_id, direction); timestamp is milliseconds on the sender's clock.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from typing import Iterator

MESSAGE_TYPES = ("Register", "TelemetrySnapshot", "Event", "Command", "Ack")
COMMAND_KINDS = ("SetDrivingMode", "SetCageMode", "DoorCommand", "AssignMission", "ManualControl")

# A frame larger than this is a corrupt stream, not a big message.
MAX_FRAME_BYTES = 4 * 1024 * 1024

_LENGTH = struct.Struct(">I")


class ProtocolError(ValueError):
    pass


@dataclass(frozen=True)
class WireMessage:
    type: str
    vehicle_id: str
    seq: int
    timestamp: int
    payload: dict

    def __post_init__(self) -> None:
        if self.type not in MESSAGE_TYPES:
            raise ProtocolError(f"unknown message type {self.type!r}")
        if not self.vehicle_id:
            raise ProtocolError("vehicle_id must be non-empty")
        if not isinstance(self.seq, int) or self.seq < 0:
            raise ProtocolError("seq must be a non-negative integer")
        if not isinstance(self.timestamp, int) or self.timestamp < 0:
            raise ProtocolError("timestamp must be a non-negative integer")
        if not isinstance(self.payload, dict):
            raise ProtocolError("payload must be an object")

    def to_dict(self) -> dict:
        return {
            "type": self.type,
            "vehicle_id": self.vehicle_id,
            "seq": self.seq,
            "timestamp": self.timestamp,
            "payload": self.payload,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "WireMessage":
        if not isinstance(data, dict):
            raise ProtocolError("message must be an object")
        expected = {"type", "vehicle_id", "seq", "timestamp", "payload"}
        got = set(data)
        if got != expected:
            missing = expected - got
            extra = got - expected
            parts = []
            if missing:
                parts.append(f"missing keys {sorted(missing)}")
            if extra:
                parts.append(f"unexpected keys {sorted(extra)}")
            raise ProtocolError("bad envelope: " + ", ".join(parts))
        if isinstance(data["seq"], bool) or not isinstance(data["seq"], int):
            raise ProtocolError("seq must be an integer")
        if isinstance(data["timestamp"], bool) or not isinstance(data["timestamp"], int):
            raise ProtocolError("timestamp must be an integer")
        if not isinstance(data["vehicle_id"], str):
            raise ProtocolError("vehicle_id must be a string")
        return cls(
            type=data["type"],
            vehicle_id=data["vehicle_id"],
            seq=data["seq"],
            timestamp=data["timestamp"],
            payload=data["payload"],
        )


def canonical_json(obj) -> bytes:
    """The one true byte encoding for anything that crosses the wire."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode(
        "utf-8"
    )


def encode_message(msg: WireMessage) -> bytes:
    """Canonical JSON body with the 4-byte length prefix."""
    body = canonical_json(msg.to_dict())
    if len(body) > MAX_FRAME_BYTES:
        raise ProtocolError(f"message of {len(body)} bytes exceeds frame limit")
    return _LENGTH.pack(len(body)) + body


def decode_body(body: bytes) -> WireMessage:
    try:
        data = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"undecodable message body: {exc}") from exc
    return WireMessage.from_dict(data)


class FrameBuffer:
    """Incremental decoder for a length-prefixed byte stream.

    Feed arbitrary chunks; complete messages come out in order. Tolerates
    frames split at any byte boundary.
    """

    def __init__(self) -> None:
        self._buf = bytearray()

    def feed(self, chunk: bytes) -> list[WireMessage]:
        self._buf.extend(chunk)
        out: list[WireMessage] = []
        while True:
            if len(self._buf) < _LENGTH.size:
                return out
            (length,) = _LENGTH.unpack_from(self._buf)
            if length > MAX_FRAME_BYTES:
                raise ProtocolError(f"frame of {length} bytes exceeds limit; stream corrupt")
            if len(self._buf) < _LENGTH.size + length:
                return out
            body = bytes(self._buf[_LENGTH.size : _LENGTH.size + length])
            del self._buf[: _LENGTH.size + length]
            out.append(decode_body(body))

    def pending_bytes(self) -> int:
        return len(self._buf)


def decode_stream(data: bytes) -> Iterator[WireMessage]:
    """Decode a complete byte string of concatenated frames."""
    buf = FrameBuffer()
    yield from buf.feed(data)
    if buf.pending_bytes():
        raise ProtocolError(f"{buf.pending_bytes()} trailing bytes after last frame")


def make_command_payload(kind: str, **fields) -> dict:
    if kind not in COMMAND_KINDS:
        raise ProtocolError(f"unknown command kind {kind!r}")
    payload = {"kind": kind}
    payload.update(fields)
    return payload
