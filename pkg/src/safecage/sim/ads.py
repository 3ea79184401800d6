"""Waypoint-following driving stub.

Stands in for the vehicle's automated driving system: pure-pursuit steering
along the leg of the route leading to the mission's current waypoint, plus a
speed profile that cruises at the commanded cap, slows for sharp heading
errors, and comes to a full stop inside the waypoint's reach radius. It
honors only the actuation envelope (speed cap, brake, steering hold);
everything else is the safety layer's business.
"""

from __future__ import annotations

import math

from ..cage import ActuationCommand
from ..missions import Mission, MissionState, PHASE_DRIVING
from ..states import VehiclePose
from .world import Controls, FULL_BRAKE_DECEL, MAX_STEERING_RAD

LOOKAHEAD_M = 2.0
LOOKAHEAD_PER_MPS = 1.2  # stretch the carrot with speed to stay damped
STOP_BAND_M = 0.35  # inside this, brake straight to zero
APPROACH_DECEL = 0.8  # gentler than the emergency profile
ACCEL_LIMIT = 1.0
STEERING_SLEW_RAD_S = 1.5
LAT_ACCEL_LIMIT = 1.5  # caps v^2 tan(d)/L so fast corrections stay gentle


def _stop_controls(pose: VehiclePose, dt: float) -> Controls:
    accel = max(-FULL_BRAKE_DECEL, -pose.speed / dt)
    steering_rate = max(
        -STEERING_SLEW_RAD_S, min(STEERING_SLEW_RAD_S, -pose.steering / dt)
    )
    return Controls(accel=accel, steering_rate=steering_rate)


def _carrot(pose: VehiclePose, leg_start, target, lookahead: float) -> tuple[float, float]:
    """Aim point: the route leg point one lookahead ahead of the vehicle's
    projection onto the leg, clamped to the waypoint itself."""
    ax, ay = leg_start
    bx, by = target.x, target.y
    ex, ey = bx - ax, by - ay
    leg_len = math.hypot(ex, ey)
    if leg_len < 1e-9:
        return bx, by
    ux, uy = ex / leg_len, ey / leg_len
    along = (pose.x - ax) * ux + (pose.y - ay) * uy
    s = min(max(along, 0.0) + lookahead, leg_len)
    return ax + ux * s, ay + uy * s


def ads_step(
    mission: Mission | None,
    pose: VehiclePose,
    caps: ActuationCommand,
    dt: float,
    wheelbase: float = 2.0,
    leg_start: tuple[float, float] | None = None,
) -> Controls:
    """Controls for one tick. leg_start anchors the current route leg (the
    previous waypoint, or the run's start point on the first leg); without
    it the stub falls back to aiming at the waypoint directly. With no
    active mission target, or while the mission is paused at a stop, it
    brakes and recenters the wheel."""
    if mission is None or mission.state is not MissionState.ACTIVE:
        return _stop_controls(pose, dt)
    target = mission.target()
    if target is None:
        return _stop_controls(pose, dt)

    dist_wp = math.hypot(target.x - pose.x, target.y - pose.y)
    if dist_wp <= STOP_BAND_M or mission.phase != PHASE_DRIVING:
        return _stop_controls(pose, dt)

    if mission.target_index > 0:
        prev = mission.waypoints[mission.target_index - 1]
        leg_start = (prev.x, prev.y)
    lookahead = max(LOOKAHEAD_M, LOOKAHEAD_PER_MPS * pose.speed)
    if leg_start is None:
        cx, cy = target.x, target.y
    else:
        cx, cy = _carrot(pose, leg_start, target, lookahead)

    alpha = math.atan2(cy - pose.y, cx - pose.x) - pose.heading
    alpha = math.atan2(math.sin(alpha), math.cos(alpha))  # wrap to [-pi, pi]
    carrot_dist = max(math.hypot(cx - pose.x, cy - pose.y), 0.8)
    wanted = math.atan2(2.0 * wheelbase * math.sin(alpha), carrot_dist)
    if pose.speed > 0.5:
        lat_limit = math.atan(LAT_ACCEL_LIMIT * wheelbase / (pose.speed * pose.speed))
        wanted = max(-lat_limit, min(lat_limit, wanted))
    wanted = max(-MAX_STEERING_RAD, min(MAX_STEERING_RAD, wanted))
    steering_rate = max(
        -STEERING_SLEW_RAD_S,
        min(STEERING_SLEW_RAD_S, (wanted - pose.steering) / dt),
    )

    # slow down for sharp aim errors and for the final approach
    turn_factor = max(0.3, math.cos(alpha))
    approach = math.sqrt(2.0 * APPROACH_DECEL * max(dist_wp - STOP_BAND_M + 0.05, 0.0))
    target_speed = min(caps.speed_cap, caps.speed_cap * turn_factor, approach)
    accel = max(-FULL_BRAKE_DECEL, min(ACCEL_LIMIT, (target_speed - pose.speed) / dt))
    return Controls(accel=accel, steering_rate=steering_rate)
