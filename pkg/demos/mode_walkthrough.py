"""Driving-mode supervision, told as one delivery gone sideways.

Replays the decision sequence the mode controller makes when an obstacle
blocks the route: autonomous driving, the safety zone fills, the controller
forces an emergency stop, and only an explicit operator command (granted
only while the zone is clear) releases the vehicle into limited autonomy.

Run: python demos/mode_walkthrough.py
"""

from __future__ import annotations

from safecage.modes import ModeInputs, step
from safecage.states import CageMode, CageState, DrivingMode, SensorValidity


def tick(label, mode, occupied=False, camera_ok=True, request=None, request_occupied=None):
    decision = step(
        ModeInputs(
            current_mode=mode,
            cage_mode=CageMode.ACTIVE,
            cage_state_current=CageState.OCCUPIED if occupied else CageState.FREE,
            camera_validity=SensorValidity.VALID if camera_ok else SensorValidity.INVALID,
            requested_mode=request,
            cage_state_requested=(
                None
                if request is None
                else CageState.OCCUPIED if request_occupied else CageState.FREE
            ),
        )
    )
    line = f"  {label:<42} -> {decision.new_mode.value}"
    line += f"  (cap {decision.speed_cap:.1f} m/s, brake {decision.brake})"
    if decision.request_outcome:
        out = decision.request_outcome
        line += f"  request {out.status}" + (f": {out.reason}" if out.reason else "")
    print(line)
    return decision.new_mode


def main() -> None:
    print("normal operation")
    mode = DrivingMode.FULLY_AUTONOMOUS
    mode = tick("zone free, cameras fine", mode)

    print("\nobstacle enters the safety zone")
    mode = tick("zone occupied", mode, occupied=True)
    mode = tick("still occupied next tick", mode, occupied=True)

    print("\noperator tries to release too early")
    mode = tick(
        "requests limited autonomy, zone still occupied",
        mode,
        occupied=True,
        request=DrivingMode.LIMITED_AUTONOMOUS,
        request_occupied=True,
    )

    print("\nobstacle cleared from the smaller zone, operator retries")
    mode = tick(
        "requests limited autonomy, zone free",
        mode,
        request=DrivingMode.LIMITED_AUTONOMOUS,
        request_occupied=False,
    )
    mode = tick("limited autonomy, zone free", mode)

    print("\npast the blockage, back to full autonomy")
    mode = tick(
        "requests full autonomy, zone free",
        mode,
        request=DrivingMode.FULLY_AUTONOMOUS,
        request_occupied=False,
    )

    print("\ncamera self-check failure is treated like an occupied zone")
    mode = tick("camera frames go invalid", mode, camera_ok=False)
    print(f"\nfinal mode: {mode.value}")


if __name__ == "__main__":
    main()
