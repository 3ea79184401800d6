"""Safe-zone geometry.

The safe zone is the area the vehicle needs to come to a standstill from its
current speed along its current steering arc, plus configured margins. It is
built by sweeping the laterally inflated vehicle footprint along a constant
steering bicycle-model arc and taking the union of the swept rectangles.

Frames: everything here is in the vehicle frame, origin at the rear axle
midpoint, x forward, y left. Angles in radians, distances in metres.

Discretization contract: for a straight path the swept union is a closed-form
rectangle and is returned exactly. For a curved path poses are placed at
integer multiples of arc_step, with the sweep length rounded *up* to the next
multiple. Rounding up keeps the pose set of a shorter sweep a subset of the
pose set of any longer sweep at the same steering, so zones are nested in
speed by construction; the overshoot (under one arc_step of extra arc) only
ever grows the zone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from shapely.geometry import Polygon as _ShapelyPolygon
from shapely.geometry.polygon import orient as _orient
from shapely.ops import unary_union

# Below this magnitude the steering arc is flatter than anything the union
# construction can resolve and the path is treated as straight.
STRAIGHT_STEERING_RAD = 1e-3


class ZoneConfigError(ValueError):
    """A geometry or zone parameter violates its invariants."""


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ZoneConfigError(message)


@dataclass(frozen=True)
class VehicleGeometry:
    """Rigid-body outline of the platform, rear axle at the origin."""

    wheelbase: float = 2.0
    width: float = 1.2
    front_overhang: float = 0.5
    rear_overhang: float = 0.5

    def __post_init__(self) -> None:
        _require(math.isfinite(self.wheelbase) and self.wheelbase > 0, "wheelbase must be > 0")
        _require(math.isfinite(self.width) and self.width > 0, "width must be > 0")
        _require(
            math.isfinite(self.front_overhang) and self.front_overhang >= 0,
            "front_overhang must be >= 0",
        )
        _require(
            math.isfinite(self.rear_overhang) and self.rear_overhang >= 0,
            "rear_overhang must be >= 0",
        )

    @property
    def front_x(self) -> float:
        """Longitudinal position of the front bumper."""
        return self.wheelbase + self.front_overhang

    def footprint(self, inflate: float = 0.0) -> tuple[tuple[float, float], ...]:
        """Footprint corners, CCW, optionally inflated laterally on each side."""
        half_w = self.width / 2.0 + inflate
        return (
            (-self.rear_overhang, -half_w),
            (self.front_x, -half_w),
            (self.front_x, half_w),
            (-self.rear_overhang, half_w),
        )


@dataclass(frozen=True)
class ZoneParams:
    """Stopping model and margins for one driving mode."""

    decel_max: float
    react_time: float
    front_margin: float
    lat_margin: float
    speed_cap: float
    arc_step: float

    def __post_init__(self) -> None:
        _require(math.isfinite(self.decel_max) and self.decel_max > 0, "decel_max must be > 0")
        _require(math.isfinite(self.react_time) and self.react_time >= 0, "react_time must be >= 0")
        _require(
            math.isfinite(self.front_margin) and self.front_margin >= 0,
            "front_margin must be >= 0",
        )
        _require(math.isfinite(self.lat_margin) and self.lat_margin >= 0, "lat_margin must be >= 0")
        _require(math.isfinite(self.speed_cap) and self.speed_cap >= 0, "speed_cap must be >= 0")
        _require(math.isfinite(self.arc_step) and self.arc_step > 0, "arc_step must be > 0")


DEFAULT_GEOMETRY = VehicleGeometry()

# Full-speed operation: generous lateral margin, 3 m/s cap.
FAD_ZONE_PARAMS = ZoneParams(
    decel_max=2.0, react_time=0.2, front_margin=1.0, lat_margin=0.3, speed_cap=3.0, arc_step=0.25
)
# Degraded operation for narrow passages: slimmer margin, walking pace.
LAD_ZONE_PARAMS = ZoneParams(
    decel_max=2.0, react_time=0.2, front_margin=1.0, lat_margin=0.15, speed_cap=1.0, arc_step=0.25
)


@dataclass(frozen=True)
class ZonePolygon:
    """Simple CCW polygon in the vehicle frame, tagged with the mode whose
    parameters produced it."""

    vertices: tuple[tuple[float, float], ...]
    mode_label: str

    def __post_init__(self) -> None:
        _require(len(self.vertices) >= 3, "polygon needs at least 3 vertices")


def stopping_distance(speed: float, params: ZoneParams) -> float:
    """Distance covered during the reaction time plus the brake ramp.

    speed * react_time + speed^2 / (2 * decel_max), speed in m/s >= 0.
    """
    if not math.isfinite(speed) or speed < 0:
        raise ValueError(f"speed must be finite and >= 0, got {speed!r}")
    return speed * params.react_time + speed * speed / (2.0 * params.decel_max)


def _canonical(vertices: tuple[tuple[float, float], ...]) -> tuple[tuple[float, float], ...]:
    """Rotate the ring to start at the lexicographically smallest vertex so
    equal polygons serialize identically."""
    start = min(range(len(vertices)), key=lambda i: vertices[i])
    return vertices[start:] + vertices[:start]


def compute_safe_zone(
    speed: float,
    steering_angle: float,
    geom: VehicleGeometry = DEFAULT_GEOMETRY,
    params: ZoneParams = FAD_ZONE_PARAMS,
    mode_label: str = "fully autonomous driving",
) -> ZonePolygon:
    """Swept inflated footprint along the current steering arc.

    The sweep arc length is stopping_distance(speed) + front_margin, measured
    at the rear axle. Positive steering curves left (+y).
    """
    if not math.isfinite(speed) or speed < 0:
        raise ValueError(f"speed must be finite and >= 0, got {speed!r}")
    if not math.isfinite(steering_angle) or abs(steering_angle) >= math.pi / 2:
        raise ValueError(f"steering angle must satisfy |angle| < pi/2, got {steering_angle!r}")

    sweep = stopping_distance(speed, params) + params.front_margin
    half_w = geom.width / 2.0 + params.lat_margin
    x_rear = -geom.rear_overhang
    x_front = geom.front_x

    if abs(steering_angle) < STRAIGHT_STEERING_RAD:
        verts = (
            (x_rear, -half_w),
            (x_front + sweep, -half_w),
            (x_front + sweep, half_w),
            (x_rear, half_w),
        )
        return ZonePolygon(_canonical(verts), mode_label)

    if steering_angle < 0:
        left = compute_safe_zone(speed, -steering_angle, geom, params, mode_label)
        # Mirror about the x axis; reversing restores CCW orientation.
        mirrored = tuple((x, -y) for x, y in reversed(left.vertices))
        return ZonePolygon(_canonical(mirrored), mode_label)

    radius = geom.wheelbase / math.tan(steering_angle)
    n_steps = max(1, math.ceil(sweep / params.arc_step))
    corners = geom.footprint(inflate=params.lat_margin)

    boxes = []
    for k in range(n_steps + 1):
        theta = k * params.arc_step / radius
        ox = radius * math.sin(theta)
        oy = radius * (1.0 - math.cos(theta))
        c, s = math.cos(theta), math.sin(theta)
        boxes.append(
            _ShapelyPolygon(
                [(ox + cx * c - cy * s, oy + cx * s + cy * c) for cx, cy in corners]
            )
        )

    merged = unary_union(boxes)
    if merged.geom_type != "Polygon" or merged.interiors:
        # Consecutive boxes overlap by construction (arc_step is far shorter
        # than the footprint), so this indicates broken parameters.
        raise ZoneConfigError(
            f"swept union degenerated ({merged.geom_type}); check arc_step vs geometry"
        )
    ring = list(_orient(merged, sign=1.0).exterior.coords)[:-1]
    return ZonePolygon(_canonical(tuple((float(x), float(y)) for x, y in ring)), mode_label)


def contains(zone: ZonePolygon, point: tuple[float, float]) -> bool:
    """Winding-number membership test; boundary points count as inside.

    Counting boundary hits as occupied is the conservative direction for a
    safety monitor.
    """
    x, y = point
    verts = zone.vertices
    n = len(verts)
    winding = 0
    for i in range(n):
        ax, ay = verts[i]
        bx, by = verts[(i + 1) % n]
        ex, ey = bx - ax, by - ay
        cross = ex * (y - ay) - ey * (x - ax)
        if abs(cross) <= 1e-12 * max(1.0, abs(ex) + abs(ey)):
            dot = (x - ax) * ex + (y - ay) * ey
            if -1e-12 <= dot <= ex * ex + ey * ey + 1e-12:
                return True
        if ay <= y:
            if by > y and cross > 0:
                winding += 1
        elif by <= y and cross < 0:
            winding -= 1
    return winding != 0
