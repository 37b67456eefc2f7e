"""Simulated planar Lidar and observation assembly.

The sensor casts 64 beams over a 220 degree field of view, left to right in
ascending angle, readings clamped to [0, 5] m. Moving agents occlude beams
exactly like static obstacles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import normalize_angle
from .world import Pose, WorldMap, raycast_batch

N_BEAMS = 64
FOV = math.radians(220.0)
MAX_RANGE = 5.0
THETA_N = 1  # observation history length fed to the policy
BEAM_ANGLES = np.linspace(-FOV / 2.0, FOV / 2.0, N_BEAMS)

OBS_DIM = N_BEAMS * THETA_N + 2


@dataclass
class LidarScan:
    ranges: np.ndarray
    fov: float = FOV
    max_range: float = MAX_RANGE
    beam_angles: np.ndarray = field(default_factory=lambda: BEAM_ANGLES.copy())

    def __post_init__(self):
        self.ranges = np.asarray(self.ranges, dtype=float)
        if self.ranges.shape != (N_BEAMS,):
            raise ValueError(f"expected {N_BEAMS} readings, got {self.ranges.shape}")


class NoiseModel:
    """Additive per-beam Gaussian range noise from a private seeded stream."""

    def __init__(self, sigma_lidar: float, seed=0):
        if sigma_lidar < 0:
            raise ValueError("sigma_lidar must be >= 0")
        self.sigma_lidar = float(sigma_lidar)
        self.seed = seed
        self._rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))

    def perturb(self, ranges: np.ndarray) -> np.ndarray:
        if self.sigma_lidar == 0.0:
            return ranges
        return ranges + self._rng.normal(0.0, self.sigma_lidar, size=ranges.shape)


def scan(wmap: WorldMap, agents, robot_pose: Pose, noise: NoiseModel | None = None) -> LidarScan:
    """Cast all beams from the robot pose. Noise (when configured) is added to
    the clamped true distances, then readings are clamped back to [0, 5]."""
    angles = robot_pose.heading + BEAM_ANGLES
    dirs = np.column_stack([np.cos(angles), np.sin(angles)])
    ranges = raycast_batch(wmap, agents, robot_pose.position, dirs, MAX_RANGE)
    if noise is not None:
        ranges = np.clip(noise.perturb(ranges), 0.0, MAX_RANGE)
    return LidarScan(ranges)


def scan_points(s: LidarScan, robot_pose: Pose) -> np.ndarray:
    """World-frame hit points for all returns short of max range, (K, 2)."""
    hit = s.ranges < s.max_range - 1e-6
    if not hit.any():
        return np.zeros((0, 2))
    angles = robot_pose.heading + s.beam_angles[hit]
    r = s.ranges[hit]
    return robot_pose.position[None, :] + np.column_stack([r * np.cos(angles), r * np.sin(angles)])


@dataclass
class Observation:
    """Policy input: the last THETA_N scans plus the goal in polar robot frame."""

    lidar_stack: tuple
    goal_polar: tuple  # (rho m, alpha rad)

    def vector(self) -> np.ndarray:
        parts = [s.ranges for s in self.lidar_stack]
        parts.append(np.array(self.goal_polar))
        return np.concatenate(parts)


def assemble_observation(scans, robot_pose: Pose, goal) -> Observation:
    """Stack the most recent scans and attach goal polar coordinates.

    With fewer than THETA_N scans available the earliest one is repeated.
    A zero-distance goal gets bearing 0 by convention.
    """
    scans = list(scans)
    if not scans:
        raise ValueError("need at least one scan")
    while len(scans) < THETA_N:
        scans.insert(0, scans[0])
    stack = tuple(scans[-THETA_N:])
    goal = np.asarray(goal, dtype=float)
    d = goal - robot_pose.position
    rho = float(np.hypot(*d))
    if rho < 1e-12:
        alpha = 0.0
    else:
        alpha = normalize_angle(math.atan2(d[1], d[0]) - robot_pose.heading)
    return Observation(stack, (rho, alpha))
