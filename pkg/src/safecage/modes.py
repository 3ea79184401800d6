"""Driving-mode transition rules.

One call of step() decides the next driving mode from the cage inputs and an
optional operator request. The rules, in priority order:

1. Fail-safe. With the cage active and the vehicle in a supervised mode, an
   occupied zone or an invalid camera forces emergency stop immediately; a
   pending request is rejected rather than raced against the stop.
2. In emergency stop with no request, stay put. The cage never leaves the
   fail-safe state on its own; recovery is always an operator decision.
3. Leaving emergency stop requires the requested mode's own zone to be free
   and the camera valid. Handover to a human (remote manual or in-place
   manual) is always granted: a person is taking responsibility.
4. Any other request is granted iff the requested mode's zone is free.
5. Otherwise nothing changes.

The returned speed cap is always the cap of the *new* mode, and the brake
demand is full exactly when the new mode is emergency stop.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping, Optional

from .states import (
    ACCEPTED,
    CageMode,
    CageState,
    CommandOutcome,
    DrivingMode,
    SensorValidity,
    SUPERVISED_MODES,
    rejected,
)

DEFAULT_SPEED_CAPS: Mapping[DrivingMode, float] = MappingProxyType(
    {
        DrivingMode.FULLY_AUTONOMOUS: 3.0,
        DrivingMode.LIMITED_AUTONOMOUS: 1.0,
        DrivingMode.REMOTE_MANUAL: 1.0,
        DrivingMode.IN_PLACE_MANUAL: 0.0,
        DrivingMode.EMERGENCY_STOP: 0.0,
    }
)

BRAKE_NONE = "none"
BRAKE_FULL = "full"

REASON_FAIL_SAFE = "fail-safe triggered"
REASON_ZONE_OCCUPIED = "requested zone occupied"
REASON_CAMERA_INVALID = "camera invalid"


class ModeConfigError(ValueError):
    pass


def check_speed_caps(caps: Mapping[DrivingMode, float]) -> None:
    for mode in DrivingMode:
        if mode not in caps:
            raise ModeConfigError(f"speed cap missing for {mode.value!r}")
        if caps[mode] < 0:
            raise ModeConfigError(f"speed cap for {mode.value!r} must be >= 0")
    if caps[DrivingMode.EMERGENCY_STOP] != 0.0:
        raise ModeConfigError("emergency stop cap must be 0")


@dataclass(frozen=True)
class ModeInputs:
    current_mode: DrivingMode
    cage_mode: CageMode
    cage_state_current: CageState
    camera_validity: SensorValidity
    requested_mode: Optional[DrivingMode] = None
    cage_state_requested: Optional[CageState] = None

    def __post_init__(self) -> None:
        if (self.requested_mode is None) != (self.cage_state_requested is None):
            raise ValueError(
                "requested_mode and cage_state_requested must be supplied together"
            )


@dataclass(frozen=True)
class ModeDecision:
    new_mode: DrivingMode
    speed_cap: float
    brake: str
    request_outcome: Optional[CommandOutcome]


def step(
    inputs: ModeInputs, caps: Mapping[DrivingMode, float] = DEFAULT_SPEED_CAPS
) -> ModeDecision:
    def decide(new_mode: DrivingMode, outcome: Optional[CommandOutcome]) -> ModeDecision:
        return ModeDecision(
            new_mode=new_mode,
            speed_cap=caps[new_mode],
            brake=BRAKE_FULL if new_mode is DrivingMode.EMERGENCY_STOP else BRAKE_NONE,
            request_outcome=outcome,
        )

    req = inputs.requested_mode
    hazard = (
        inputs.cage_state_current is CageState.OCCUPIED
        or inputs.camera_validity is SensorValidity.INVALID
    )

    if (
        inputs.cage_mode is CageMode.ACTIVE
        and inputs.current_mode in SUPERVISED_MODES
        and hazard
    ):
        outcome = rejected(REASON_FAIL_SAFE) if req is not None else None
        return decide(DrivingMode.EMERGENCY_STOP, outcome)

    if inputs.current_mode is DrivingMode.EMERGENCY_STOP:
        if req is None:
            return decide(DrivingMode.EMERGENCY_STOP, None)
        if req in (DrivingMode.REMOTE_MANUAL, DrivingMode.IN_PLACE_MANUAL):
            return decide(req, ACCEPTED)
        if inputs.cage_state_requested is CageState.OCCUPIED:
            return decide(DrivingMode.EMERGENCY_STOP, rejected(REASON_ZONE_OCCUPIED))
        if inputs.camera_validity is SensorValidity.INVALID:
            return decide(DrivingMode.EMERGENCY_STOP, rejected(REASON_CAMERA_INVALID))
        return decide(req, ACCEPTED)

    if req is not None:
        if inputs.cage_state_requested is CageState.OCCUPIED:
            return decide(inputs.current_mode, rejected(REASON_ZONE_OCCUPIED))
        return decide(req, ACCEPTED)

    return decide(inputs.current_mode, None)
