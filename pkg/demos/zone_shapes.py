"""Safe zone geometry, visualized in the terminal.

Sweeps the zone computation across speeds and steering angles and renders
one curved zone as ASCII art, to build intuition for what the onboard
monitor actually checks lidar points against: faster means longer, steering
bends the sweep, and the limited-autonomy zone always fits inside the full
one at the same vehicle state.

Run: python demos/zone_shapes.py
"""

from __future__ import annotations

import math

from safecage.zones import (
    FAD_ZONE_PARAMS,
    LAD_ZONE_PARAMS,
    compute_safe_zone,
    contains,
    stopping_distance,
)


def extents(zone) -> tuple[float, float, float, float]:
    xs = [x for x, _ in zone.vertices]
    ys = [y for _, y in zone.vertices]
    return min(xs), max(xs), min(ys), max(ys)


def ascii_render(zone, width: int = 64, height: int = 22) -> str:
    """Coarse raster of the zone polygon, vehicle at the left edge."""
    x0, x1, y0, y1 = extents(zone)
    pad = 0.3
    x0, x1, y0, y1 = x0 - pad, x1 + pad, y0 - pad, y1 + pad
    rows = []
    for r in range(height):
        y = y1 - (r + 0.5) * (y1 - y0) / height
        row = []
        for c in range(width):
            x = x0 + (c + 0.5) * (x1 - x0) / width
            row.append("#" if contains(zone, (x, y)) else ".")
        rows.append("".join(row))
    return "\n".join(rows)


def main() -> None:
    print("stopping distance by speed (full-autonomy braking profile)")
    for speed in (0.0, 0.5, 1.0, 2.0, 3.0):
        d = stopping_distance(speed, FAD_ZONE_PARAMS)
        print(f"  v = {speed:.1f} m/s  ->  {d:.3f} m")

    print("\nzone footprint growth, straight ahead")
    prev = None
    for speed in (0.0, 1.0, 2.0, 3.0):
        zone = compute_safe_zone(speed, 0.0)
        x0, x1, y0, y1 = extents(zone)
        nested = ""
        if prev is not None:
            inside = all(contains(zone, v) for v in prev.vertices)
            nested = "  (contains the slower zone)" if inside else "  (NESTING BROKEN)"
        print(
            f"  v = {speed:.1f}: x in [{x0:+.2f}, {x1:+.2f}], "
            f"y in [{y0:+.2f}, {y1:+.2f}], {len(zone.vertices)} vertices{nested}"
        )
        prev = zone

    print("\nlimited-autonomy zone nests inside the full one (same state)")
    for speed, steer_deg in ((1.0, 0.0), (2.5, 12.0), (3.0, -20.0)):
        steer = math.radians(steer_deg)
        fad = compute_safe_zone(speed, steer)
        lad = compute_safe_zone(
            speed, steer, params=LAD_ZONE_PARAMS, mode_label="limited autonomous driving"
        )
        ok = all(contains(fad, v) for v in lad.vertices)
        print(f"  v = {speed:.1f}, steer = {steer_deg:+.0f} deg: {'nested' if ok else 'BROKEN'}")

    steer = math.radians(18.0)
    zone = compute_safe_zone(2.5, steer)
    print(f"\ncurved zone at v = 2.5 m/s, steering {math.degrees(steer):.0f} deg left:")
    print(ascii_render(zone))


if __name__ == "__main__":
    main()
