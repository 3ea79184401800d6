"""Synthetic lidar and camera feeds.

The lidar is a single forward-facing planar scanner: beams fan across the
field of view, each returning either the nearest obstacle intersection
(sampled at three heights up the obstacle face) or a ground return. Points
come back in the vehicle frame, which is what the safety monitor consumes.
The camera produces a moving grayscale test pattern; a freeze fault replays
the previous frame's bytes with a fresh timestamp.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..camera import CameraFrame
from ..lidar import LidarScan
from ..states import VehiclePose
from .faults import FaultSchedule
from .world import WorldModel

OBSTACLE_Z_SAMPLES = (0.3, 0.6, 0.9)
GROUND_RANGE_M = 10.0
GROUND_Z = 0.02  # below the detector's height band, as real ground returns are


@dataclass(frozen=True)
class LidarConfig:
    n_beams: int = 360
    fov_deg: float = 180.0
    max_range: float = 30.0

    def __post_init__(self):
        if self.n_beams < 1:
            raise ValueError("n_beams must be >= 1")
        if not 0.0 < self.fov_deg <= 360.0:
            raise ValueError("fov_deg must be in (0, 360]")
        if self.max_range <= 0.0:
            raise ValueError("max_range must be > 0")


def _world_segments(world: WorldModel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All obstacle edges as (S, 2) start points, (S, 2) edge vectors, and
    (S,) obstacle heights."""
    starts, edges, heights = [], [], []
    for obstacle in world.obstacles:
        n = len(obstacle.polygon)
        for i in range(n):
            ax, ay = obstacle.polygon[i]
            bx, by = obstacle.polygon[(i + 1) % n]
            starts.append((ax, ay))
            edges.append((bx - ax, by - ay))
            heights.append(obstacle.height)
    if not starts:
        return np.empty((0, 2)), np.empty((0, 2)), np.empty((0,))
    return np.asarray(starts), np.asarray(edges), np.asarray(heights)


def raycast_lidar(
    world: WorldModel,
    pose: VehiclePose,
    cfg: LidarConfig,
    faults: FaultSchedule | None = None,
    t_ms: int = 0,
    seq: int = 0,
) -> LidarScan:
    fov = math.radians(cfg.fov_deg)
    rel_angles = (
        np.linspace(-fov / 2.0, fov / 2.0, cfg.n_beams)
        if cfg.n_beams > 1
        else np.array([0.0])
    )
    world_angles = pose.heading + rel_angles
    dirs = np.column_stack([np.cos(world_angles), np.sin(world_angles)])  # (B, 2)

    starts, edges, heights = _world_segments(world)
    hit_dist = np.full(cfg.n_beams, np.inf)
    hit_height = np.zeros(cfg.n_beams)

    if len(starts):
        # ray o + t*d vs segment a + u*e, solved per (beam, segment) pair
        rel = starts[None, :, :] - np.array([pose.x, pose.y])[None, None, :]  # (1, S, 2)
        ex, ey = edges[:, 0][None, :], edges[:, 1][None, :]  # (1, S)
        dx, dy = dirs[:, 0][:, None], dirs[:, 1][:, None]  # (B, 1)
        denom = dx * ey - dy * ex  # (B, S)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (rel[:, :, 0] * ey - rel[:, :, 1] * ex) / denom
            u = (rel[:, :, 0] * dy - rel[:, :, 1] * dx) / denom
        valid = (np.abs(denom) > 1e-15) & (t >= 0.0) & (u >= 0.0) & (u <= 1.0)
        t = np.where(valid & (t <= cfg.max_range), t, np.inf)
        seg_idx = np.argmin(t, axis=1)
        hit_dist = t[np.arange(cfg.n_beams), seg_idx]
        hit_height = heights[seg_idx]

    points: list[tuple[float, float, float]] = []
    cos_rel, sin_rel = np.cos(rel_angles), np.sin(rel_angles)
    for b in range(cfg.n_beams):
        if np.isfinite(hit_dist[b]):
            r = float(hit_dist[b])
            xv, yv = r * float(cos_rel[b]), r * float(sin_rel[b])
            for z in OBSTACLE_Z_SAMPLES:
                if z <= hit_height[b] + 1e-9:
                    points.append((xv, yv, z))
        else:
            r = min(GROUND_RANGE_M, cfg.max_range)
            points.append((r * float(cos_rel[b]), r * float(sin_rel[b]), GROUND_Z))

    if faults is not None:
        points.extend(faults.ghost_points(t_ms, pose))

    arr = np.asarray(points, dtype=float).reshape(-1, 3)
    return LidarScan(points=arr, timestamp=t_ms, seq=seq)


FRAME_WIDTH = 32
FRAME_HEIGHT = 24


def synth_camera_frame(
    camera_id: str,
    t_ms: int,
    seq: int,
    frozen_pixels: bytes | None = None,
) -> CameraFrame:
    """Well-exposed moving test pattern; consecutive seqs differ in bytes.
    Pass frozen_pixels to replay stale image data under a fresh timestamp."""
    if frozen_pixels is not None:
        pixels = frozen_pixels
    else:
        x = np.arange(FRAME_WIDTH)[None, :]
        y = np.arange(FRAME_HEIGHT)[:, None]
        # mean sits near 120, safely inside the exposure window
        pattern = (x * 3 + y * 5 + seq * 11) % 200 + 20
        pixels = pattern.astype(np.uint8).tobytes()
    return CameraFrame(
        camera_id=camera_id,
        width=FRAME_WIDTH,
        height=FRAME_HEIGHT,
        pixels=pixels,
        timestamp=t_ms,
        seq=seq,
    )
