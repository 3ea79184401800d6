"""Lidar filtering and the safe-zone occupancy check.

The point cloud arrives in the vehicle frame. Two filters run before any
point may mark the zone occupied:

- a height band drops ground returns and overhead structure;
- clustering drops isolated returns (ghost points from dust, rain or sensor
  noise) that do not have enough neighbours to be a real object.

Only clusters that survive both filters can flip the cage state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .states import CageState
from .zones import ZonePolygon, contains


class FilterConfigError(ValueError):
    pass


@dataclass(frozen=True)
class FilterConfig:
    z_min: float = 0.10
    z_max: float = 2.50
    cluster_eps: float = 0.30
    cluster_min_pts: int = 3

    def __post_init__(self) -> None:
        if not (math.isfinite(self.z_min) and math.isfinite(self.z_max)) or self.z_min >= self.z_max:
            raise FilterConfigError("z band must satisfy z_min < z_max")
        if not math.isfinite(self.cluster_eps) or self.cluster_eps <= 0:
            raise FilterConfigError("cluster_eps must be > 0")
        if self.cluster_min_pts < 1:
            raise FilterConfigError("cluster_min_pts must be >= 1")


@dataclass
class LidarScan:
    """One sweep, points as an (N, 3) float array in the vehicle frame."""

    points: np.ndarray
    timestamp: int
    seq: int

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"scan points must be (N, 3), got {pts.shape}")
        if pts.size and not np.isfinite(pts).all():
            raise ValueError("scan points must be finite")
        self.points = pts


@dataclass(frozen=True)
class CageVerdict:
    cage_state: CageState
    offending_points: tuple[tuple[float, float], ...]
    nearest_distance: float | None


def z_cutoff(points: np.ndarray, cfg: FilterConfig) -> np.ndarray:
    """Keep points strictly inside the height band (z_min, z_max)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"points must be (N, 3), got {pts.shape}")
    if not len(pts):
        return pts.reshape(0, 3)
    mask = (pts[:, 2] > cfg.z_min) & (pts[:, 2] < cfg.z_max)
    return pts[mask]


def cluster(points_2d: np.ndarray, cfg: FilterConfig) -> list[np.ndarray]:
    """Connected components of the eps-neighbour graph over 2D points.

    Neighbourhood is Euclidean distance <= cluster_eps. Components smaller
    than cluster_min_pts are discarded. Returns sorted index arrays, ordered
    by smallest member, so output is deterministic for a given input order.

    Buckets points into an eps-sized grid first; neighbours can only live in
    the 3x3 cell block around a point, which keeps the scan-sized inputs
    linear-ish instead of quadratic.
    """
    pts = np.asarray(points_2d, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"points must be (N, 2), got {pts.shape}")
    n = len(pts)
    if n == 0:
        return []

    eps = cfg.cluster_eps
    eps2 = eps * eps
    cells: dict[tuple[int, int], list[int]] = {}
    cell_ix = np.floor(pts / eps).astype(np.int64)
    for idx in range(n):
        cells.setdefault((int(cell_ix[idx, 0]), int(cell_ix[idx, 1])), []).append(idx)

    visited = np.zeros(n, dtype=bool)
    clusters: list[np.ndarray] = []
    for seed in range(n):
        if visited[seed]:
            continue
        visited[seed] = True
        component = [seed]
        queue = [seed]
        while queue:
            cur = queue.pop()
            cx, cy = int(cell_ix[cur, 0]), int(cell_ix[cur, 1])
            px, py = pts[cur]
            for gx in (cx - 1, cx, cx + 1):
                for gy in (cy - 1, cy, cy + 1):
                    for other in cells.get((gx, gy), ()):
                        if visited[other]:
                            continue
                        dx = pts[other, 0] - px
                        dy = pts[other, 1] - py
                        if dx * dx + dy * dy <= eps2:
                            visited[other] = True
                            component.append(other)
                            queue.append(other)
        if len(component) >= cfg.cluster_min_pts:
            clusters.append(np.array(sorted(component), dtype=np.int64))
    clusters.sort(key=lambda c: int(c[0]))
    return clusters


def evaluate(
    scan: LidarScan,
    zone: ZonePolygon,
    cfg: FilterConfig,
    front_point: tuple[float, float] = (2.5, 0.0),
) -> CageVerdict:
    """Run both filters, then test surviving clusters against the zone.

    The zone is occupied as soon as any surviving cluster has at least one
    point inside it. Offending points are exactly those in-zone points;
    nearest_distance is measured from front_point (the front bumper
    midpoint), which the caller supplies for its actual geometry.
    """
    banded = z_cutoff(scan.points, cfg)
    flat = banded[:, :2]
    offending: list[tuple[float, float]] = []
    for component in cluster(flat, cfg):
        for idx in component:
            p = (float(flat[idx, 0]), float(flat[idx, 1]))
            if contains(zone, p):
                offending.append(p)
    if not offending:
        return CageVerdict(CageState.FREE, (), None)
    fx, fy = front_point
    nearest = min(math.hypot(px - fx, py - fy) for px, py in offending)
    return CageVerdict(CageState.OCCUPIED, tuple(offending), float(nearest))
