"""Static world model and vehicle kinematics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from shapely.geometry import Polygon as ShapelyPolygon

from ..cage import ActuationCommand
from ..modes import BRAKE_FULL
from ..states import DoorState, VehiclePose

MAX_STEERING_RAD = 0.6
FULL_BRAKE_DECEL = 2.0  # matches the stopping-distance model of the safe zone
MAX_STEP_DT_S = 0.1


class WorldError(ValueError):
    pass


@dataclass(frozen=True)
class Obstacle:
    name: str
    polygon: tuple[tuple[float, float], ...]
    height: float

    def __post_init__(self):
        if len(self.polygon) < 3:
            raise WorldError(f"obstacle {self.name!r} needs at least 3 vertices")
        if not all(math.isfinite(c) for xy in self.polygon for c in xy):
            raise WorldError(f"obstacle {self.name!r} has non-finite vertices")
        if not ShapelyPolygon(self.polygon).is_valid:
            raise WorldError(f"obstacle {self.name!r} polygon is not simple")
        if not (math.isfinite(self.height) and self.height > 0):
            raise WorldError(f"obstacle {self.name!r} height must be > 0")


@dataclass
class WorldModel:
    obstacles: tuple[Obstacle, ...] = ()
    delivery_points: dict[str, tuple[float, float]] = field(default_factory=dict)
    route: tuple[str, ...] = ()
    bounds: tuple[float, float] | None = None

    def __post_init__(self):
        for name in self.route:
            if name not in self.delivery_points:
                raise WorldError(f"route waypoint {name!r} is not a delivery point")

    def route_waypoints(self) -> list[dict]:
        return [
            {"name": n, "x": self.delivery_points[n][0], "y": self.delivery_points[n][1]}
            for n in self.route
        ]


@dataclass(frozen=True)
class Controls:
    accel: float = 0.0  # m/s^2, applied after the brake check
    steering_rate: float = 0.0  # rad/s

    def __post_init__(self):
        if not (math.isfinite(self.accel) and math.isfinite(self.steering_rate)):
            raise WorldError("controls must be finite")


def step_vehicle(
    pose: VehiclePose,
    controls: Controls,
    caps: ActuationCommand,
    dt: float,
    wheelbase: float = 2.0,
) -> VehiclePose:
    """One Euler step of the kinematic bicycle.

    Position and heading advance with the state at the start of the step,
    then the actuators apply: steering integrates its rate (frozen under
    steering_hold), and speed either brakes hard to zero or follows the
    acceleration command, clamped to [0, speed_cap].
    """
    if not 0.0 < dt <= MAX_STEP_DT_S:
        raise WorldError(f"dt must be in (0, {MAX_STEP_DT_S}], got {dt}")

    x = pose.x + pose.speed * math.cos(pose.heading) * dt
    y = pose.y + pose.speed * math.sin(pose.heading) * dt
    heading = pose.heading + pose.speed * math.tan(pose.steering) / wheelbase * dt

    if caps.steering_hold:
        steering = pose.steering
    else:
        steering = pose.steering + controls.steering_rate * dt
    steering = max(-MAX_STEERING_RAD, min(MAX_STEERING_RAD, steering))

    if caps.brake == BRAKE_FULL:
        speed = max(0.0, pose.speed - FULL_BRAKE_DECEL * dt)
    else:
        speed = pose.speed + controls.accel * dt
        if speed > caps.speed_cap:
            # the cap blocks propulsion; shedding existing speed still goes
            # through the service brake, never an instant clamp
            speed = max(caps.speed_cap, pose.speed - FULL_BRAKE_DECEL * dt)
        speed = max(0.0, speed)

    return VehiclePose(x=x, y=y, heading=heading, speed=speed, steering=steering)


class DoorSim:
    """Cargo hatch that takes a fixed actuation time to swing either way."""

    ACTUATION_S = 0.2

    def __init__(self):
        self.state = DoorState.CLOSED
        self._moving_to: DoorState | None = None
        self._remaining_s = 0.0

    def command(self, action: str) -> None:
        target = DoorState.OPEN if action == "open" else DoorState.CLOSED
        if target is self.state and self._moving_to is None:
            return
        if target is not self._moving_to:
            self._moving_to = target
            self._remaining_s = self.ACTUATION_S

    def step(self, dt: float) -> DoorState:
        if self._moving_to is not None:
            self._remaining_s -= dt
            # epsilon guard: repeated float dt subtraction never lands on 0.0
            if self._remaining_s <= 1e-9:
                self.state = self._moving_to
                self._moving_to = None
        return self.state
