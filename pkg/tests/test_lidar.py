from __future__ import annotations

import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from safecage.lidar import (
    CageVerdict,
    FilterConfig,
    FilterConfigError,
    LidarScan,
    cluster,
    evaluate,
    z_cutoff,
)
from safecage.states import CageState
from safecage.zones import compute_safe_zone

from oracles import cluster_union_find

CFG = FilterConfig()


def scan_of(points):
    return LidarScan(points=np.array(points, dtype=float).reshape(-1, 3), timestamp=0, seq=0)


class TestZCutoff:
    def test_band_is_strict(self):
        pts = np.array(
            [
                [1.0, 0.0, 0.02],  # ground
                [1.0, 0.0, 0.10],  # exactly at z_min: out
                [1.0, 0.0, 0.11],
                [1.0, 0.0, 2.49],
                [1.0, 0.0, 2.50],  # exactly at z_max: out
                [1.0, 0.0, 3.10],  # overhead
            ]
        )
        kept = z_cutoff(pts, CFG)
        assert kept[:, 2].tolist() == [0.11, 2.49]

    def test_empty_and_shape_checks(self):
        assert z_cutoff(np.zeros((0, 3)), CFG).shape == (0, 3)
        with pytest.raises(ValueError):
            z_cutoff(np.zeros((4, 2)), CFG)

    def test_config_invariants(self):
        with pytest.raises(FilterConfigError):
            FilterConfig(z_min=1.0, z_max=1.0)
        with pytest.raises(FilterConfigError):
            FilterConfig(cluster_eps=0.0)
        with pytest.raises(FilterConfigError):
            FilterConfig(cluster_min_pts=0)


class TestCluster:
    def test_two_blobs_and_a_ghost(self):
        pts = np.array(
            [
                [0.0, 0.0],
                [0.1, 0.0],
                [0.0, 0.1],
                [5.0, 5.0],  # lone ghost
                [2.0, 0.0],
                [2.2, 0.0],
                [2.2, 0.2],
                [2.0, 0.2],
            ]
        )
        got = cluster(pts, CFG)
        assert [c.tolist() for c in got] == [[0, 1, 2], [4, 5, 6, 7]]

    def test_chain_merges_through_links(self):
        # consecutive gaps are each <= eps, so the chain is one component
        pts = np.array([[0.25 * i, 0.0] for i in range(10)])
        got = cluster(pts, CFG)
        assert len(got) == 1 and len(got[0]) == 10

    def test_matches_union_find_oracle_random(self):
        rng = random.Random(1234)
        for trial in range(200):
            n = rng.randrange(0, 60)
            pts = np.array(
                [[rng.uniform(-4, 4), rng.uniform(-4, 4)] for _ in range(n)]
            ).reshape(n, 2)
            got = [tuple(c.tolist()) for c in cluster(pts, CFG)]
            want = cluster_union_find(pts.tolist(), CFG.cluster_eps, CFG.cluster_min_pts)
            assert got == want, f"trial {trial}"

    @settings(max_examples=100, deadline=None)
    @given(
        st.lists(
            st.tuples(
                st.floats(-10, 10, allow_nan=False, width=32),
                st.floats(-10, 10, allow_nan=False, width=32),
            ),
            max_size=40,
        )
    )
    def test_matches_union_find_oracle_property(self, pairs):
        pts = np.array(pairs, dtype=float).reshape(len(pairs), 2)
        got = [tuple(c.tolist()) for c in cluster(pts, CFG)]
        want = cluster_union_find(pts.tolist(), CFG.cluster_eps, CFG.cluster_min_pts)
        assert got == want


class TestEvaluate:
    def setup_method(self):
        self.zone = compute_safe_zone(1.0, 0.0)  # straight, front edge at 3.95

    def test_empty_scan_is_free(self):
        verdict = evaluate(scan_of([]), self.zone, CFG)
        assert verdict == CageVerdict(CageState.FREE, (), None)

    def test_ground_returns_are_free(self):
        pts = [[x, 0.0, 0.02] for x in np.linspace(0.5, 6.0, 40)]
        assert evaluate(scan_of(pts), self.zone, CFG).cage_state is CageState.FREE

    def test_cluster_in_zone_occupies(self):
        pts = [[3.0, 0.0, 0.5], [3.0, 0.1, 0.5], [3.1, 0.0, 0.5]]
        verdict = evaluate(scan_of(pts), self.zone, CFG)
        assert verdict.cage_state is CageState.OCCUPIED
        assert len(verdict.offending_points) == 3
        # nearest from the default front bumper midpoint (2.5, 0)
        assert verdict.nearest_distance == pytest.approx(0.5, abs=1e-9)

    def test_ghosts_below_min_pts_never_occupy(self):
        pts = [[3.0, 0.0, 0.5], [3.0, 0.4, 0.5]]  # two isolated points in zone
        assert evaluate(scan_of(pts), self.zone, CFG).cage_state is CageState.FREE

    def test_cluster_outside_zone_is_free(self):
        pts = [[3.0, 2.0, 0.5], [3.0, 2.1, 0.5], [3.1, 2.0, 0.5]]
        assert evaluate(scan_of(pts), self.zone, CFG).cage_state is CageState.FREE

    def test_cluster_straddling_zone_reports_inside_points_only(self):
        pts = [
            [3.0, 0.85, 0.5],  # inside (half width 0.9)
            [3.0, 1.05, 0.5],  # outside but linked within eps
            [3.0, 0.65, 0.5],
        ]
        verdict = evaluate(scan_of(pts), self.zone, CFG)
        assert verdict.cage_state is CageState.OCCUPIED
        assert sorted(p[1] for p in verdict.offending_points) == pytest.approx([0.65, 0.85])

    def test_tall_obstacle_stack_counts_as_one_cluster(self):
        # same (x, y) at three heights: distance zero in 2D
        pts = [[3.0, 0.0, 0.3], [3.0, 0.0, 0.6], [3.0, 0.0, 0.9]]
        verdict = evaluate(scan_of(pts), self.zone, CFG)
        assert verdict.cage_state is CageState.OCCUPIED

    def test_front_point_override(self):
        pts = [[3.0, 0.0, 0.5], [3.0, 0.1, 0.5], [3.1, 0.0, 0.5]]
        verdict = evaluate(scan_of(pts), self.zone, CFG, front_point=(3.0, 0.0))
        assert verdict.nearest_distance == pytest.approx(0.0, abs=1e-12)


class TestEvaluateAgainstBruteForce:
    def test_random_scans_match_oracle(self):
        """Full-pipeline cross-check: filtered points -> oracle clustering ->
        zone test, versus evaluate()."""
        rng = random.Random(777)
        for trial in range(60):
            zone = compute_safe_zone(rng.uniform(0, 3), rng.uniform(-0.6, 0.6))
            n = rng.randrange(0, 120)
            pts = np.array(
                [
                    [rng.uniform(-2, 8), rng.uniform(-4, 4), rng.uniform(0.0, 3.0)]
                    for _ in range(n)
                ]
            ).reshape(n, 3)
            scan = LidarScan(points=pts, timestamp=0, seq=trial)

            banded = z_cutoff(pts, CFG)
            flat = [tuple(p[:2]) for p in banded]
            expected_offending = []
            for comp in cluster_union_find(flat, CFG.cluster_eps, CFG.cluster_min_pts):
                from safecage.zones import contains

                for i in comp:
                    if contains(zone, flat[i]):
                        expected_offending.append(flat[i])
            verdict = evaluate(scan, zone, CFG)
            assert (verdict.cage_state is CageState.OCCUPIED) == bool(expected_offending)
            assert sorted(verdict.offending_points) == sorted(expected_offending)
            if expected_offending:
                want = min(math.hypot(x - 2.5, y) for x, y in expected_offending)
                assert verdict.nearest_distance == pytest.approx(want, abs=1e-9)
