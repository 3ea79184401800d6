"""Shared state vocabulary for the vehicle, the onboard cage and the control centre.

Every value here crosses the wire, so the serialized strings are part of the
protocol and must not change.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


class SensorValidity(str, enum.Enum):
    VALID = "valid"
    INVALID = "invalid"


class MissionState(str, enum.Enum):
    INACTIVE = "inactive"
    ACTIVE = "active"
    BLOCKED = "blocked"
    COMPLETED = "completed"


class DoorState(str, enum.Enum):
    OPEN = "open"
    CLOSED = "closed"
    NO_DATA = "no data"


class DrivingMode(str, enum.Enum):
    FULLY_AUTONOMOUS = "fully autonomous driving"
    LIMITED_AUTONOMOUS = "limited autonomous driving"
    REMOTE_MANUAL = "remote manual driving"
    IN_PLACE_MANUAL = "in-place manual driving"
    EMERGENCY_STOP = "emergency stop"


class CageMode(str, enum.Enum):
    ACTIVE = "active"
    PASSIVE = "passive"


class CageState(str, enum.Enum):
    FREE = "safe zone free"
    OCCUPIED = "safe zone occupied"


# Modes in which the vehicle moves under its own (or remote) control and the
# cage is expected to intervene. In-place manual means a nearby human has
# physical charge of the platform; emergency stop is already the fail-safe.
SUPERVISED_MODES = frozenset(
    {
        DrivingMode.FULLY_AUTONOMOUS,
        DrivingMode.LIMITED_AUTONOMOUS,
        DrivingMode.REMOTE_MANUAL,
    }
)


@dataclass(frozen=True)
class CommandOutcome:
    """Fate of one operator command: accepted, rejected(reason) or timeout."""

    status: str  # "accepted" | "rejected" | "timeout"
    reason: str | None = None

    def __post_init__(self) -> None:
        if self.status not in ("accepted", "rejected", "timeout"):
            raise ValueError(f"unknown outcome status {self.status!r}")
        if self.status == "rejected" and not self.reason:
            raise ValueError("rejected outcomes carry a reason")

    def to_dict(self) -> dict:
        if self.reason is None:
            return {"status": self.status}
        return {"status": self.status, "reason": self.reason}

    @classmethod
    def from_dict(cls, data: dict) -> "CommandOutcome":
        return cls(status=data["status"], reason=data.get("reason"))


ACCEPTED = CommandOutcome("accepted")


def rejected(reason: str) -> CommandOutcome:
    return CommandOutcome("rejected", reason)


@dataclass(frozen=True)
class VehiclePose:
    """Ground-truth kinematic state, world frame, angles in radians."""

    x: float
    y: float
    heading: float
    speed: float
    steering: float

    def __post_init__(self) -> None:
        if self.speed < 0:
            raise ValueError("speed must be >= 0")

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "y": self.y,
            "heading": self.heading,
            "speed": self.speed,
            "steering": self.steering,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "VehiclePose":
        return cls(
            x=float(data["x"]),
            y=float(data["y"]),
            heading=float(data["heading"]),
            speed=float(data["speed"]),
            steering=float(data["steering"]),
        )


@dataclass
class VehicleStateSummary:
    """One row of the vehicle state table, as reported every tick."""

    vehicle_id: str
    sensor_data: SensorValidity
    mission_state: MissionState
    door_state: DoorState
    driving_mode: DrivingMode
    cage_state: CageState
    timestamp: int  # milliseconds on the reporting clock
    seq: int

    def to_dict(self) -> dict:
        return {
            "vehicle_id": self.vehicle_id,
            "sensor_data": self.sensor_data.value,
            "mission_state": self.mission_state.value,
            "door_state": self.door_state.value,
            "driving_mode": self.driving_mode.value,
            "cage_state": self.cage_state.value,
            "timestamp": self.timestamp,
            "seq": self.seq,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "VehicleStateSummary":
        return cls(
            vehicle_id=data["vehicle_id"],
            sensor_data=SensorValidity(data["sensor_data"]),
            mission_state=MissionState(data["mission_state"]),
            door_state=DoorState(data["door_state"]),
            driving_mode=DrivingMode(data["driving_mode"]),
            cage_state=CageState(data["cage_state"]),
            timestamp=int(data["timestamp"]),
            seq=int(data["seq"]),
        )
