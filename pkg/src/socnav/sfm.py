"""Social force model with collision prediction.

Two consumers share the same repulsion kernel: the velocity correction added
to the robot's policy action, and the simulated pedestrians. Repulsion is
evaluated at the constant-velocity closest-approach configuration rather than
the current one, which is what makes the correction anticipative.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import geometry
from .world import Body, Pose, R_AGENT, R_ROBOT, WorldMap


@dataclass(frozen=True)
class SfmParams:
    amplitude: float = 0.7  # force amplitude A, m/s^2
    decay: float = 10.0 / 17.0  # exponential decay length B, m
    horizon: float = 5.0  # collision-prediction lookahead, s
    relaxation_time: float = 0.5  # pedestrian goal attraction, s
    angular_gain: float = 1.0  # rad/s per m/s of lateral force impulse
    sensing_range: float = 5.0  # Lidar range; the corrector sees no farther

    def __post_init__(self):
        if self.amplitude < 0 or self.decay <= 0 or self.horizon <= 0 or self.relaxation_time <= 0:
            raise ValueError("invalid SFM parameters")


@dataclass
class AgentState:
    """Circular pedestrian with a velocity, a goal and a speed cap."""

    body: Body
    velocity: np.ndarray
    goal: np.ndarray
    max_speed: float = 1.2

    def __post_init__(self):
        self.velocity = np.asarray(self.velocity, dtype=float)
        self.goal = np.asarray(self.goal, dtype=float)

    @property
    def position(self) -> np.ndarray:
        return self.body.center


def time_to_closest_approach(rel_pos, rel_vel, horizon: float) -> float:
    """Time minimizing |rel_pos + t*rel_vel|, clamped to [0, horizon].

    Returns 0 for negligible relative speed.
    """
    rel_pos = np.asarray(rel_pos, dtype=float)
    rel_vel = np.asarray(rel_vel, dtype=float)
    v2 = float(rel_vel @ rel_vel)
    if v2 < 1e-12:  # |rel_vel| < 1e-6
        return 0.0
    t = -float(rel_pos @ rel_vel) / v2
    return min(max(t, 0.0), horizon)


def _predicted_repulsion(
    pos: np.ndarray,
    vel: np.ndarray,
    radius: float,
    other_pos: np.ndarray,
    other_vel: np.ndarray,
    other_radii: np.ndarray,
    params: SfmParams,
) -> np.ndarray:
    """Summed repulsive force on (pos, vel) from each row of other_pos.

    Each pair is propagated to its closest-approach time; the force points
    from the other's predicted position toward ours and its magnitude decays
    exponentially with the predicted surface gap.
    """
    if len(other_pos) == 0:
        return np.zeros(2)
    rel_pos = other_pos - pos[None, :]
    rel_vel = other_vel - vel[None, :]
    v2 = np.einsum("ij,ij->i", rel_vel, rel_vel)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = -np.einsum("ij,ij->i", rel_pos, rel_vel) / v2
    t = np.where(v2 < 1e-12, 0.0, np.clip(t, 0.0, params.horizon))
    d_vec = -(rel_pos + t[:, None] * rel_vel)  # ours(t) - theirs(t)
    d = np.hypot(d_vec[:, 0], d_vec[:, 1])
    # head-on passes collapse the predicted gap; fall back to the current line
    cur_d = np.hypot(rel_pos[:, 0], rel_pos[:, 1])
    degenerate = d < 1e-9
    safe_d = np.where(degenerate, np.maximum(cur_d, 1e-9), d)
    dirs = np.where(degenerate[:, None], -rel_pos / np.maximum(cur_d, 1e-9)[:, None], d_vec / safe_d[:, None])
    mag = params.amplitude * np.exp((radius + other_radii - d) / params.decay)
    mag = np.where(cur_d < 1e-9, 0.0, mag)  # coincident centers: no defined direction
    return (mag[:, None] * dirs).sum(axis=0)


def repulsive_velocity_change(
    robot_pose: Pose,
    robot_velocity,
    agents,
    params: SfmParams,
    dt: float,
) -> tuple[float, float]:
    """Velocity correction (dv_linear, dv_angular) for the robot.

    The summed predicted repulsion from all agents inside sensing range is
    projected onto the robot frame; the longitudinal part changes the linear
    command directly and the lateral part turns into an angular rate through
    angular_gain. Returns (0, 0) with nobody in range.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    robot_velocity = np.asarray(robot_velocity, dtype=float)
    pos = robot_pose.position
    near = [a for a in agents if np.hypot(*(a.position - pos)) <= params.sensing_range]
    if not near:
        return (0.0, 0.0)
    force = _predicted_repulsion(
        pos,
        robot_velocity,
        R_ROBOT,
        np.array([a.position for a in near]),
        np.array([a.velocity for a in near]),
        np.array([a.body.radius for a in near]),
        params,
    )
    h = np.array([math.cos(robot_pose.heading), math.sin(robot_pose.heading)])
    perp = np.array([-h[1], h[0]])
    return (float(force @ h) * dt, params.angular_gain * float(force @ perp) * dt)


def sfm_agent_step(
    agent: AgentState,
    neighbors,
    robot: Body | None,
    robot_velocity,
    wmap: WorldMap,
    params: SfmParams,
    dt: float,
) -> AgentState:
    """Advance one pedestrian by dt.

    Acceleration = goal attraction + predicted repulsion from neighbors and
    the robot + exponential repulsion from the nearest wall point. Velocity is
    integrated first, speed-clamped, then the position update uses the new
    velocity. Neighbors are read from the pre-step snapshot, so a whole crowd
    updates synchronously.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    pos = agent.position
    to_goal = agent.goal - pos
    dist = float(np.hypot(*to_goal))
    desired = agent.max_speed * to_goal / dist if dist > 1e-9 else np.zeros(2)
    acc = (desired - agent.velocity) / params.relaxation_time

    others_pos = [n.position for n in neighbors]
    others_vel = [n.velocity for n in neighbors]
    others_rad = [n.body.radius for n in neighbors]
    if robot is not None:
        others_pos.append(np.asarray(robot.center, dtype=float))
        others_vel.append(np.asarray(robot_velocity, dtype=float))
        others_rad.append(robot.radius)
    if others_pos:
        acc = acc + _predicted_repulsion(
            pos,
            agent.velocity,
            agent.body.radius,
            np.array(others_pos),
            np.array(others_vel),
            np.array(others_rad),
            params,
        )

    point, d = geometry.nearest_point_on_segments(pos, wmap.edges)
    if d <= params.sensing_range and d > 1e-9:
        away = (pos - point) / d
        acc = acc + params.amplitude * math.exp((agent.body.radius - d) / params.decay) * away

    vel = agent.velocity + dt * acc
    speed = float(np.hypot(*vel))
    if speed > agent.max_speed:
        vel = vel * (agent.max_speed / speed)
    new_pos = pos + dt * vel
    return AgentState(Body(new_pos, agent.body.radius), vel, agent.goal, agent.max_speed)


def cvm_step(agent: AgentState, dt: float) -> AgentState:
    """Constant-velocity update: straight-line motion, velocity unchanged."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    return AgentState(
        Body(agent.position + dt * agent.velocity, agent.body.radius),
        agent.velocity.copy(),
        agent.goal,
        agent.max_speed,
    )
