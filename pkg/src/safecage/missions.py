"""Delivery mission state and its per-tick progression.

A mission is an ordered list of named delivery stops. At each stop the
vehicle must be stationary inside the reach radius, then the hatch door is
opened, held open for the dwell time (the recipient collects the parcel),
and closed again before driving on. The mission is blocked while the vehicle
sits in emergency stop and resumes when the operator releases it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .states import DoorState, DrivingMode, MissionState

PHASE_DRIVING = "driving"
PHASE_DOOR_OPENING = "door_opening"
PHASE_DWELLING = "dwelling"
PHASE_DOOR_CLOSING = "door_closing"

# Below this the platform counts as stationary for door handling.
STOP_SPEED_EPS = 1e-3

DEFAULT_REACH_RADIUS_M = 0.5
DEFAULT_DWELL_S = 3.0

# Waypoint/dwell choreography only runs while the software is driving.
_PROGRESSING_MODES = (DrivingMode.FULLY_AUTONOMOUS, DrivingMode.LIMITED_AUTONOMOUS)


class MissionPayloadError(ValueError):
    pass


@dataclass(frozen=True)
class Waypoint:
    name: str
    x: float
    y: float

    def to_dict(self) -> dict:
        return {"name": self.name, "x": self.x, "y": self.y}


@dataclass
class Mission:
    mission_id: str
    waypoints: list[Waypoint]
    reach_radius: float = DEFAULT_REACH_RADIUS_M
    dwell_s: float = DEFAULT_DWELL_S
    state: MissionState = MissionState.INACTIVE
    target_index: int = 0
    phase: str = PHASE_DRIVING
    dwell_remaining_s: float = 0.0
    deliveries: list[str] = field(default_factory=list)

    def target(self) -> Waypoint | None:
        if self.state is MissionState.COMPLETED:
            return None
        return self.waypoints[self.target_index]

    def to_dict(self) -> dict:
        return {
            "mission_id": self.mission_id,
            "state": self.state.value,
            "target_index": self.target_index,
            "phase": self.phase,
            "waypoints": [w.to_dict() for w in self.waypoints],
            "deliveries": list(self.deliveries),
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "Mission":
        mission_id = payload.get("mission_id")
        if not isinstance(mission_id, str) or not mission_id:
            raise MissionPayloadError("mission_id must be a non-empty string")
        raw = payload.get("waypoints")
        if not isinstance(raw, list) or not raw:
            raise MissionPayloadError("waypoints must be a non-empty list")
        waypoints = []
        for i, wp in enumerate(raw):
            if not isinstance(wp, dict):
                raise MissionPayloadError(f"waypoints[{i}] must be an object")
            name = wp.get("name")
            if not isinstance(name, str) or not name:
                raise MissionPayloadError(f"waypoints[{i}].name must be a non-empty string")
            try:
                x, y = float(wp["x"]), float(wp["y"])
            except (KeyError, TypeError, ValueError) as exc:
                raise MissionPayloadError(f"waypoints[{i}] needs numeric x and y") from exc
            if not (math.isfinite(x) and math.isfinite(y)):
                raise MissionPayloadError(f"waypoints[{i}] coordinates must be finite")
            waypoints.append(Waypoint(name, x, y))
        reach = payload.get("reach_radius", DEFAULT_REACH_RADIUS_M)
        dwell = payload.get("dwell_s", DEFAULT_DWELL_S)
        for label, value in (("reach_radius", reach), ("dwell_s", dwell)):
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise MissionPayloadError(f"{label} must be a number")
            if not math.isfinite(value) or value <= 0:
                raise MissionPayloadError(f"{label} must be > 0")
        return cls(
            mission_id=mission_id,
            waypoints=waypoints,
            reach_radius=float(reach),
            dwell_s=float(dwell),
        )


def mission_update(
    mission: Mission,
    pose,
    driving_mode: DrivingMode,
    door_state: DoorState,
    dt: float,
) -> str | None:
    """Advance the mission one tick; returns a door request ("open"/"close")
    or None.

    The caller passes the driving mode decided *this* tick, so a fresh
    emergency stop blocks the mission in the same tick it latches.
    """
    if mission.state is MissionState.COMPLETED:
        return None

    if mission.state is MissionState.INACTIVE:
        mission.state = MissionState.ACTIVE

    if driving_mode is DrivingMode.EMERGENCY_STOP:
        mission.state = MissionState.BLOCKED
        return None
    if mission.state is MissionState.BLOCKED:
        mission.state = MissionState.ACTIVE

    if driving_mode not in _PROGRESSING_MODES:
        return None

    wp = mission.waypoints[mission.target_index]

    # phases fall through so a transition takes effect in the tick it happens
    if mission.phase == PHASE_DRIVING:
        arrived = (
            math.hypot(pose.x - wp.x, pose.y - wp.y) <= mission.reach_radius
            and pose.speed <= STOP_SPEED_EPS
        )
        if not arrived:
            return None
        mission.phase = PHASE_DOOR_OPENING

    if mission.phase == PHASE_DOOR_OPENING:
        if door_state is not DoorState.OPEN:
            return "open"
        mission.phase = PHASE_DWELLING
        mission.dwell_remaining_s = mission.dwell_s

    if mission.phase == PHASE_DWELLING:
        mission.dwell_remaining_s -= dt
        if mission.dwell_remaining_s > 0:
            return None
        mission.phase = PHASE_DOOR_CLOSING

    if door_state is not DoorState.CLOSED:
        return "close"
    mission.deliveries.append(wp.name)
    if mission.target_index + 1 >= len(mission.waypoints):
        mission.state = MissionState.COMPLETED
    else:
        mission.target_index += 1
        mission.phase = PHASE_DRIVING
    return None
