"""The lidar verdict pipeline, stage by stage.

Builds one synthetic point cloud containing ground returns, an overhead
structure, a pedestrian-sized cluster and two isolated ghost returns, then
walks it through the height-band cut, density clustering and the zone
containment check. The pedestrian flips the verdict; the ghosts never do.

Run: python demos/lidar_filtering.py
"""

from __future__ import annotations

import numpy as np

from safecage.lidar import FilterConfig, LidarScan, cluster, evaluate, z_cutoff
from safecage.states import CageState
from safecage.zones import compute_safe_zone

rng = np.random.default_rng(11)


def make_cloud(with_pedestrian: bool) -> np.ndarray:
    parts = []
    # ground speckle: z ~ 3 cm, below the height band
    gx = rng.uniform(-2.0, 8.0, size=120)
    gy = rng.uniform(-3.0, 3.0, size=120)
    parts.append(np.column_stack([gx, gy, np.full(120, 0.03)]))
    # overhead sign 3 m up, above the band
    parts.append(np.array([[4.0, 0.0, 3.2], [4.1, 0.1, 3.2], [4.0, -0.1, 3.1]]))
    # two ghost returns, isolated, inside the band and inside the zone
    parts.append(np.array([[3.0, 0.2, 0.7], [4.5, -0.4, 0.9]]))
    if with_pedestrian:
        px = rng.normal(4.0, 0.08, size=12)
        py = rng.normal(0.3, 0.08, size=12)
        pz = rng.uniform(0.3, 1.6, size=12)
        parts.append(np.column_stack([px, py, pz]))
    return np.vstack(parts)


def describe(scan_points: np.ndarray, label: str) -> None:
    cfg = FilterConfig()
    zone = compute_safe_zone(2.0, 0.0)
    banded = z_cutoff(scan_points, cfg)
    groups = cluster(banded[:, :2], cfg)
    verdict = evaluate(LidarScan(points=scan_points, timestamp=0, seq=0), zone, cfg)

    print(f"{label}:")
    print(f"  raw points                  {len(scan_points)}")
    print(f"  inside height band          {len(banded)}  "
          f"(band {cfg.z_min} m < z < {cfg.z_max} m drops ground and overhead)")
    print(f"  dense clusters              {len(groups)}  "
          f"(>= {cfg.cluster_min_pts} points within {cfg.cluster_eps} m; ghosts drop out)")
    print(f"  verdict                     {verdict.cage_state.value}")
    if verdict.cage_state is CageState.OCCUPIED:
        print(f"  offending points            {len(verdict.offending_points)}")
        print(f"  nearest obstacle distance   {verdict.nearest_distance:.2f} m from the bumper")
    print()


def main() -> None:
    describe(make_cloud(with_pedestrian=False), "scan without pedestrian")
    describe(make_cloud(with_pedestrian=True), "same scene plus a pedestrian at 4 m")


if __name__ == "__main__":
    main()
