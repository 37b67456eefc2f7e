"""RRT path planner and start/goal episode sampling.

The planner is used for two things: validating that a goal is reachable and
measuring an approximate path distance for goal sampling. Paths are smoothed
with greedy shortcutting so reported lengths stay close to optimal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .world import Body, Pose, R_ROBOT, WorldMap, check_collision, collide_points, sample_free_point

RRT_STEP = 0.5  # m, tree extension length
RRT_GOAL_BIAS = 0.1
RRT_MAX_ITERS = 5000
SWEEP_INTERVAL = 0.05  # m, disk spacing for segment collision checks
SAMPLE_BUDGET = 1000  # attempts before sample_episode gives up


class PlanningError(RuntimeError):
    """Goal not reached within the iteration budget."""


class SamplingError(RuntimeError):
    """No start/goal pair satisfying the distance constraint was found."""


@dataclass(frozen=True)
class RrtPlan:
    """Collision-free polyline from start to goal."""

    waypoints: np.ndarray  # (K, 2)
    length: float


def _segment_free(wmap: WorldMap, a: np.ndarray, b: np.ndarray, radius: float) -> bool:
    """Check a straight move by sweeping a disk at SWEEP_INTERVAL spacing."""
    d = float(np.hypot(*(b - a)))
    n = max(1, int(math.ceil(d / SWEEP_INTERVAL)))
    ts = np.arange(n + 1)[:, None] / n
    pts = a[None, :] + ts * (b - a)[None, :]
    return not collide_points(wmap, pts, radius).any()


def _shortcut(wmap: WorldMap, pts: list[np.ndarray], radius: float) -> list[np.ndarray]:
    """Greedy smoothing: from each kept waypoint jump to the farthest visible one."""
    out = [pts[0]]
    i = 0
    while i < len(pts) - 1:
        j = len(pts) - 1
        while j > i + 1 and not _segment_free(wmap, pts[i], pts[j], radius):
            j -= 1
        out.append(pts[j])
        i = j
    return out


def _plan_length(pts) -> float:
    return float(sum(np.hypot(*(pts[i + 1] - pts[i])) for i in range(len(pts) - 1)))


def plan_rrt(
    wmap: WorldMap,
    start,
    goal,
    seed: int,
    *,
    radius: float = R_ROBOT,
    step: float = RRT_STEP,
    goal_bias: float = RRT_GOAL_BIAS,
    max_iters: int = RRT_MAX_ITERS,
) -> RrtPlan:
    """Plan a collision-free polyline from start to goal.

    Deterministic for a given seed. Raises ValueError when an endpoint is in
    collision and PlanningError when the iteration budget runs out.
    """
    start = np.asarray(start, dtype=float)
    goal = np.asarray(goal, dtype=float)
    if check_collision(Body(start, radius), wmap):
        raise ValueError("start position is in collision")
    if check_collision(Body(goal, radius), wmap):
        raise ValueError("goal position is in collision")
    if np.hypot(*(goal - start)) < 1e-12:
        return RrtPlan(np.vstack([start, goal]), 0.0)
    if _segment_free(wmap, start, goal, radius):
        pts = [start, goal]
        return RrtPlan(np.vstack(pts), _plan_length(pts))

    rng = np.random.Generator(np.random.PCG64(seed))
    nodes = np.zeros((max_iters + 2, 2))
    parents = np.full(max_iters + 2, -1, dtype=int)
    nodes[0] = start
    count = 1
    lo = np.zeros(2)
    hi = np.array([wmap.width, wmap.height])
    for _ in range(max_iters):
        if rng.random() < goal_bias:
            target = goal
        else:
            target = lo + rng.random(2) * (hi - lo)
        diff = nodes[:count] - target
        nearest = int(np.argmin(np.einsum("ij,ij->i", diff, diff)))
        d = float(np.hypot(*(target - nodes[nearest])))
        if d < 1e-9:
            continue
        new = target if d <= step else nodes[nearest] + (target - nodes[nearest]) * (step / d)
        if not _segment_free(wmap, nodes[nearest], new, radius):
            continue
        nodes[count] = new
        parents[count] = nearest
        count += 1
        if np.hypot(*(goal - new)) <= step and _segment_free(wmap, new, goal, radius):
            nodes[count] = goal
            parents[count] = count - 1
            path = []
            i = count
            while i >= 0:
                path.append(nodes[i])
                i = parents[i]
            path.reverse()
            pts = _shortcut(wmap, path, radius)
            return RrtPlan(np.vstack(pts), _plan_length(pts))
    raise PlanningError(f"goal not reached in {max_iters} iterations")


def sample_episode(wmap: WorldMap, mode: str, rng_seed) -> tuple[Pose, np.ndarray]:
    """Sample a start pose and goal point for one episode.

    mode 'ed': straight-line start-goal distance in [5, 10] m.
    mode 'pd': RRT path length in [5, 10] m.
    Deterministic for a given seed; raises SamplingError after SAMPLE_BUDGET
    rejected attempts.
    """
    if mode not in ("ed", "pd"):
        raise ValueError(f"unknown sampling mode {mode!r}")
    ss = rng_seed if isinstance(rng_seed, np.random.SeedSequence) else np.random.SeedSequence(rng_seed)
    rng = np.random.Generator(np.random.PCG64(ss))
    for _ in range(SAMPLE_BUDGET):
        try:
            start = sample_free_point(wmap, rng, R_ROBOT, max_tries=50)
            goal = sample_free_point(wmap, rng, R_ROBOT, max_tries=50)
        except RuntimeError:
            continue
        heading = float(rng.uniform(-math.pi, math.pi))
        d = float(np.hypot(*(goal - start)))
        if d > 10.0:
            continue
        if mode == "ed":
            if 5.0 <= d <= 10.0:
                return Pose(start[0], start[1], heading), goal
            continue
        if d < 0.5:
            continue
        try:
            plan = plan_rrt(wmap, start, goal, seed=int(rng.integers(2**63)))
        except PlanningError:
            continue
        if 5.0 <= plan.length <= 10.0:
            return Pose(start[0], start[1], heading), goal
    raise SamplingError(
        f"no start/goal pair with {mode} distance in [5, 10] m after {SAMPLE_BUDGET} attempts"
    )
