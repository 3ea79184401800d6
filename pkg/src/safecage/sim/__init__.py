"""Deterministic vehicle and environment simulation.

Kinematic bicycle vehicle, a static polygonal world, synthetic lidar and
camera sensors, a waypoint-following driving stub, and scheduled fault
injection. Everything steps on one simulated clock so headless runs are
reproducible bit for bit.
"""
