"""Anticipative collision-avoidance strategies layered on the hybrid planner.

Three independent mechanisms:

* anticipative turn: one-step lookahead of the current command against the
  last scan's points; on a predicted static collision the command is replaced
  by a fixed recovery sequence (4 turn-only steps, then 2 advance-only steps).
* robot & pedestrian propagation: forward-simulate the hybrid planner and the
  agents (constant velocity) on a local map built from the last scan, then
  execute the action recorded at the rollout's closest approach.
* pedestrian propagation circles: predicted agent positions become virtual
  disks with uncertainty-grown radii that are rendered into the Lidar scan.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import geometry
from .sensing import BEAM_ANGLES, LidarScan, MAX_RANGE
from .sfm import AgentState, cvm_step
from .world import Body, Pose, R_AGENT, R_ROBOT, integrate_unicycle
from .policy import Action

AT_TURN_STEPS = 4
AT_ADVANCE_STEPS = 2
AT_TURN_RATE = 1.0  # rad/s, the angular speed limit


@dataclass
class AtState:
    """Recovery-sequence state machine. INACTIVE passes commands through;
    TURNING/ADVANCING count emitted steps of the current sequence."""

    phase: str = "inactive"  # inactive | turning | advancing
    count: int = 0
    direction: int = 1
    rng: np.random.Generator | None = None

    def _spin_direction(self) -> int:
        if self.rng is None:
            return 1
        return 1 if self.rng.integers(0, 2) == 1 else -1


def at_predict_collision(robot_pose: Pose, action: Action, points: np.ndarray, dt: float) -> bool:
    """Would executing this command for one step bring the robot disk onto any
    scan point?"""
    if len(points) == 0:
        return False
    nxt = integrate_unicycle(robot_pose, action.linear, action.angular, dt)
    d = points - nxt.position[None, :]
    return bool((np.einsum("ij,ij->i", d, d) < R_ROBOT**2).any())


def at_candidate_action(state: AtState, proposed: Action) -> Action | None:
    """The command whose one-step collision matters this step, or None while
    the robot is rotating in place (rotation cannot collide)."""
    if state.phase == "inactive":
        return proposed
    if state.phase == "turning" and state.count < AT_TURN_STEPS:
        return None
    # next emission is an advance step
    return Action(proposed.linear, 0.0)


def at_step(
    state: AtState,
    proposed: Action,
    collision_predicted: bool,
    moving_obstacle_near: bool,
) -> tuple[Action, AtState]:
    """Advance the recovery state machine by one control step.

    collision_predicted must refer to the command returned by
    at_candidate_action for the current state. The sequence is only entered
    for static hazards: when a moving obstacle is implicated the proposed
    command passes through untouched.
    """
    if state.phase == "inactive":
        if collision_predicted and not moving_obstacle_near:
            d = state._spin_direction()
            return Action(0.0, d * AT_TURN_RATE), replace(state, phase="turning", count=1, direction=d)
        return proposed, state

    if state.phase == "turning" and state.count < AT_TURN_STEPS:
        return Action(0.0, state.direction * AT_TURN_RATE), replace(state, count=state.count + 1)

    # about to advance (either finishing the turn phase or mid-advance)
    if collision_predicted:
        # restart the whole sequence with a fresh random direction
        d = state._spin_direction()
        return Action(0.0, d * AT_TURN_RATE), replace(state, phase="turning", count=1, direction=d)
    advanced = 1 if state.phase == "turning" else state.count + 1
    out = Action(proposed.linear, 0.0)
    if advanced >= AT_ADVANCE_STEPS:
        return out, replace(state, phase="inactive", count=0)
    return out, replace(state, phase="advancing", count=advanced)


def moving_obstacle_near(robot_pose: Pose, action: Action, agents, dt: float, sensing_range: float = MAX_RANGE) -> bool:
    """True when some tracked agent's next predicted position intersects the
    robot's next-step swept disk."""
    pos = robot_pose.position
    nxt = integrate_unicycle(robot_pose, action.linear, action.angular, dt)
    seg = np.array([[pos[0], pos[1], nxt.x, nxt.y]])
    for a in agents:
        if np.hypot(*(a.position - pos)) > sensing_range:
            continue
        predicted = a.position + dt * a.velocity
        if float(geometry.point_segments_distance(predicted, seg)[0]) < R_ROBOT + a.body.radius:
            return True
    return False


# ---------------------------------------------------------------------------
# Pedestrian propagation circles


@dataclass(frozen=True)
class AnticipativeCircle:
    """Predicted agent disk k steps ahead; the radius grows linearly with the
    per-step uncertainty increment."""

    center: np.ndarray
    radius: float
    step_index: int
    agent_id: int


def app_generate(agents, n: int, every: int, sigma: float, dt: float) -> list[AnticipativeCircle]:
    """Constant-velocity predictions at steps every, 2*every, ... <= n.

    Radius at step k is k*sigma + agent radius (rounded to 12 decimals so
    radii survive a round trip through decimal trace files).
    """
    if not (n >= every >= 1):
        raise ValueError("need n >= every >= 1")
    circles = []
    for idx, a in enumerate(agents):
        for k in range(every, n + 1, every):
            center = a.position + (k * dt) * a.velocity
            radius = round(k * sigma + a.body.radius, 12)
            circles.append(AnticipativeCircle(center, radius, k, idx))
    return circles


def app_truncate_on_hit(circles, robot: Body) -> list[AnticipativeCircle]:
    """Drop, per agent, the first circle the robot overlaps and everything
    after it. Overlapping a prediction is not a collision; it just means the
    prediction is stale from that step onward."""
    cutoff: dict[int, int] = {}
    for c in circles:
        if np.hypot(*(c.center - robot.center)) < c.radius + robot.radius:
            k = cutoff.get(c.agent_id)
            if k is None or c.step_index < k:
                cutoff[c.agent_id] = c.step_index
    return [c for c in circles if cutoff.get(c.agent_id, np.inf) > c.step_index]


def app_augment_scan(scan: LidarScan, circles, robot_pose: Pose) -> LidarScan:
    """Render the circles into the scan as virtual obstacles: every beam reads
    the nearer of its real return and its first circle intersection."""
    if not circles:
        return scan
    angles = robot_pose.heading + scan.beam_angles
    dirs = np.column_stack([np.cos(angles), np.sin(angles)])
    centers = np.array([c.center for c in circles])
    radii = np.array([c.radius for c in circles])
    virtual = geometry.rays_vs_circles(robot_pose.position, dirs, centers, radii)
    ranges = np.clip(np.minimum(scan.ranges, virtual), 0.0, scan.max_range)
    return LidarScan(ranges, scan.fov, scan.max_range, scan.beam_angles)


# ---------------------------------------------------------------------------
# Robot & pedestrian propagation


@dataclass(frozen=True)
class ArpConfig:
    n: int = 20  # propagation steps
    local_map_range: float = MAX_RANGE  # evidence horizon, m
    point_radius: float = 0.05  # footprint given to each Lidar point, m

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need n >= 1")


@dataclass
class ArpSnapshot:
    """Frozen view of the world as the robot knows it: its own state, the last
    scan's hit points and the tracked agents in range."""

    pose: Pose
    velocity: np.ndarray  # world frame, m/s
    points: np.ndarray  # (K, 2) world-frame scan hits
    goal: np.ndarray
    goal_radius: float


def _local_scan(pose: Pose, points, point_radius, agents) -> LidarScan:
    """Synthetic scan against the local map only (scan points + agent disks)."""
    angles = pose.heading + BEAM_ANGLES
    dirs = np.column_stack([np.cos(angles), np.sin(angles)])
    ranges = np.full(len(BEAM_ANGLES), MAX_RANGE)
    if len(points):
        r = geometry.rays_vs_circles(
            pose.position, dirs, points, np.full(len(points), point_radius)
        )
        ranges = np.minimum(ranges, r)
    if agents:
        centers = np.array([a.position for a in agents])
        radii = np.array([a.body.radius for a in agents])
        ranges = np.minimum(ranges, geometry.rays_vs_circles(pose.position, dirs, centers, radii))
    return LidarScan(np.clip(ranges, 0.0, MAX_RANGE))


def _local_clearance(pose: Pose, points, point_radius, agents, cap: float) -> float:
    """Robot surface distance to the nearest local-map entity, capped so that
    an empty neighbourhood compares equal everywhere."""
    best = cap
    p = pose.position
    if len(points):
        d = points - p[None, :]
        best = min(best, float(np.sqrt(np.einsum("ij,ij->i", d, d)).min()) - point_radius - R_ROBOT)
    for a in agents:
        best = min(best, float(np.hypot(*(a.position - p))) - a.body.radius - R_ROBOT)
    return min(best, cap)


def arp_select(snapshot: ArpSnapshot, hybrid_planner, agents, config: ArpConfig, dt: float) -> Action:
    """Roll the hybrid planner forward on the local map and return the action
    recorded at the step of minimum clearance (earliest step on ties).

    hybrid_planner(pose, velocity, scan, agents) -> Action must be the same
    callable the live loop would use, evaluated without sensor noise. Agents
    propagate at constant velocity; the rollout stops early on a simulated
    collision or on reaching the goal.
    """
    pose = snapshot.pose.copy()
    velocity = np.asarray(snapshot.velocity, dtype=float)
    points = snapshot.points
    rolled = [
        AgentState(Body(a.position.copy(), a.body.radius), a.velocity.copy(), a.goal, a.max_speed)
        for a in agents
        if np.hypot(*(a.position - snapshot.pose.position)) <= config.local_map_range
    ]
    clearances = []
    actions = []
    for _ in range(config.n):
        clearances.append(_local_clearance(pose, points, config.point_radius, rolled, config.local_map_range))
        local = _local_scan(pose, points, config.point_radius, rolled)
        a = hybrid_planner(pose, velocity, local, rolled)
        actions.append(a)
        heading = np.array([math.cos(pose.heading), math.sin(pose.heading)])
        pose = integrate_unicycle(pose, a.linear, a.angular, dt)
        velocity = a.linear * heading
        rolled = [cvm_step(ag, dt) for ag in rolled]
        if np.hypot(*(snapshot.goal - pose.position)) < snapshot.goal_radius:
            break
        if _local_clearance(pose, points, config.point_radius, rolled, config.local_map_range) <= 0.0:
            break
    best = int(np.argmin(clearances))
    return actions[best]
