"""Episode stepping loop, termination, metrics and the evaluation suites.

One control cycle is: sense -> (virtual circles) -> policy -> velocity
correction -> (turn/propagation override) -> integrate robot -> step agents ->
detect collision / goal. Everything is driven by explicit seeds, so a batch of
episodes is reproducible and embarrassingly parallel.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from enum import Enum
from multiprocessing import Pool

import numpy as np

from . import maps
from .anticipation import (
    AnticipativeCircle,
    ArpConfig,
    ArpSnapshot,
    AtState,
    app_augment_scan,
    app_generate,
    app_truncate_on_hit,
    arp_select,
    at_candidate_action,
    at_predict_collision,
    at_step,
    moving_obstacle_near,
)
from .hybrid import PlannerMode, combine
from .policy import Action, ActorNet, actor_forward, scripted_policy
from .rrt import sample_episode
from .sensing import NoiseModel, assemble_observation, scan, scan_points
from .sfm import AgentState, SfmParams, cvm_step, repulsive_velocity_change, sfm_agent_step
from .world import (
    Body,
    Pose,
    R_AGENT,
    R_ROBOT,
    WorldMap,
    check_collision,
    clearance,
    integrate_unicycle,
    sample_free_point,
)

GOAL_RADIUS = 0.4  # m; exceeds max per-step travel so arrivals cannot overshoot
AGENT_GOAL_RADIUS = 0.3  # m, pedestrian re-goal distance
MIN_SPAWN_GAP = 2.0  # m, agent spawn distance from the robot


class Outcome(Enum):
    SUCCESS = "success"
    COLLISION = "collision"
    TIMEOUT = "timeout"


@dataclass
class AgentSpec:
    count: int = 0
    behavior: str = "sfm"  # sfm | cvm
    max_speed: float = 1.2
    respawn: bool = True  # re-goal on arrival / respawn when out of bounds

    def __post_init__(self):
        if self.behavior not in ("sfm", "cvm"):
            raise ValueError(f"unknown agent behavior {self.behavior!r}")
        if self.count < 0 or self.max_speed < 0:
            raise ValueError("invalid agent spec")


@dataclass
class EpisodeConfig:
    wmap: WorldMap
    mode: PlannerMode = PlannerMode.HYBRID
    policy: object = "scripted"  # "scripted" or an ActorNet
    agents: AgentSpec = field(default_factory=AgentSpec)
    sigma_lidar: float = 0.0
    dt: float = 0.2
    max_steps: int = 500
    sampling: str = "ed"  # ed | pd
    seed: object = 0  # int or tuple of ints
    goal_radius: float = GOAL_RADIUS
    sfm_params: SfmParams = field(default_factory=SfmParams)
    arp: ArpConfig = field(default_factory=ArpConfig)
    app_every: int = 5
    app_sigma: float = 0.01  # m of circle growth per predicted step
    fixed_start: Pose | None = None
    fixed_goal: object = None
    fixed_agents: list | None = None
    record_trace: bool = False
    record_scans: bool = False

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.sampling not in ("ed", "pd"):
            raise ValueError(f"unknown sampling mode {self.sampling!r}")


@dataclass
class EpisodeResult:
    outcome: Outcome
    steps_taken: int
    min_clearance: float
    path_length: float
    trace: dict | None = None


@dataclass(frozen=True)
class Metrics:
    """SR/CR/TR percentages over a batch; the three counts partition it."""

    n_success: int
    n_collision: int
    n_timeout: int

    @property
    def n(self) -> int:
        return self.n_success + self.n_collision + self.n_timeout

    @property
    def sr(self) -> float:
        return 100.0 * self.n_success / self.n

    @property
    def cr(self) -> float:
        return 100.0 * self.n_collision / self.n

    @property
    def tr(self) -> float:
        return 100.0 * self.n_timeout / self.n

    def line(self) -> str:
        return f"{self.sr:g} - {self.cr:g} - {self.tr:g}"

    @classmethod
    def from_results(cls, results) -> "Metrics":
        outcomes = [r.outcome for r in results]
        return cls(
            outcomes.count(Outcome.SUCCESS),
            outcomes.count(Outcome.COLLISION),
            outcomes.count(Outcome.TIMEOUT),
        )


def _seed_entropy(seed) -> tuple:
    if isinstance(seed, (tuple, list)):
        return tuple(int(s) for s in seed)
    return (int(seed),)


def episode_seed(base, index: int) -> tuple:
    """Derive the per-episode seed for an episode batch."""
    return (*_seed_entropy(base), index)


def resolve_policy(policy):
    """Map a config policy spec onto an Observation -> Action callable."""
    if policy == "scripted":
        return scripted_policy
    if isinstance(policy, ActorNet):
        return lambda obs: actor_forward(policy, obs.vector())
    if isinstance(policy, (str, os.PathLike)):
        from .policy import load_checkpoint

        net = load_checkpoint(policy)[0]
        return lambda obs: actor_forward(net, obs.vector())
    raise ValueError(f"cannot resolve policy {policy!r}")


class Simulation:
    """Mutable state of one episode; step() advances one control cycle."""

    def __init__(self, cfg: EpisodeConfig):
        self.cfg = cfg
        ss = np.random.SeedSequence(_seed_entropy(cfg.seed))
        s_sample, s_agents, s_noise, s_at = ss.spawn(4)
        self._agent_rng = np.random.Generator(np.random.PCG64(s_agents))
        self._noise = NoiseModel(cfg.sigma_lidar, s_noise) if cfg.sigma_lidar > 0 else None
        self._at_state = AtState(rng=np.random.Generator(np.random.PCG64(s_at)))
        self._policy = resolve_policy(cfg.policy)

        if cfg.fixed_start is not None and cfg.fixed_goal is not None:
            self.pose = cfg.fixed_start.copy()
            self.goal = np.asarray(cfg.fixed_goal, dtype=float)
        else:
            self.pose, self.goal = sample_episode(cfg.wmap, cfg.sampling, s_sample)
        self.velocity = np.zeros(2)

        if cfg.fixed_agents is not None:
            self.agents = [
                AgentState(Body(a.position.copy(), a.body.radius), a.velocity.copy(), a.goal.copy(), a.max_speed)
                for a in cfg.fixed_agents
            ]
        else:
            self.agents = self._spawn_agents()

        self.steps = 0
        self.outcome: Outcome | None = None
        self.path_length = 0.0
        self.min_clearance = clearance(self._robot_body(), cfg.wmap, [a.body for a in self.agents])
        self.circles: list[AnticipativeCircle] = []
        self.trace = (
            {"robot": [], "agents": [], "circles": [], "scans": []} if cfg.record_trace else None
        )

    # -- setup ------------------------------------------------------------

    def _robot_body(self) -> Body:
        return Body(self.pose.position, R_ROBOT)

    def _spawn_agents(self) -> list[AgentState]:
        cfg = self.cfg
        agents: list[AgentState] = []
        for _ in range(cfg.agents.count):
            for _ in range(200):
                p = sample_free_point(cfg.wmap, self._agent_rng, R_AGENT)
                if np.hypot(*(p - self.pose.position)) < MIN_SPAWN_GAP:
                    continue
                if any(np.hypot(*(p - a.position)) < 2 * R_AGENT + 0.1 for a in agents):
                    continue
                break
            else:
                raise RuntimeError("could not place agents (map too crowded)")
            goal = sample_free_point(cfg.wmap, self._agent_rng, R_AGENT)
            if cfg.agents.behavior == "cvm":
                direction = goal - p
                n = np.hypot(*direction)
                vel = cfg.agents.max_speed * direction / n if n > 1e-9 else np.zeros(2)
            else:
                vel = np.zeros(2)
            agents.append(AgentState(Body(p, R_AGENT), vel, goal, cfg.agents.max_speed))
        return agents

    # -- per-step machinery -------------------------------------------------

    def hybrid_action(self, pose: Pose, velocity, scan_, agents) -> Action:
        """Policy output plus (except in raw mode) the repulsive correction."""
        obs = assemble_observation([scan_], pose, self.goal)
        a = self._policy(obs)
        if self.cfg.mode is PlannerMode.OP_DDPG:
            return a
        dv = repulsive_velocity_change(pose, velocity, agents, self.cfg.sfm_params, self.cfg.dt)
        return combine(a, dv)

    def _choose_action(self, raw_scan) -> Action:
        cfg = self.cfg
        self.circles = []
        eff = raw_scan
        if cfg.mode in (PlannerMode.HYBRID_APP, PlannerMode.HYBRID_APP_AT):
            near = [
                a
                for a in self.agents
                if np.hypot(*(a.position - self.pose.position)) <= cfg.sfm_params.sensing_range
            ]
            circles = app_generate(near, cfg.arp.n, cfg.app_every, cfg.app_sigma, cfg.dt)
            self.circles = app_truncate_on_hit(circles, self._robot_body())
            eff = app_augment_scan(raw_scan, self.circles, self.pose)

        if cfg.mode is PlannerMode.HYBRID_ARP:
            snapshot = ArpSnapshot(
                self.pose,
                self.velocity,
                scan_points(raw_scan, self.pose),
                self.goal,
                cfg.goal_radius,
            )
            return arp_select(snapshot, self.hybrid_action, self.agents, cfg.arp, cfg.dt)

        a = self.hybrid_action(self.pose, self.velocity, eff, self.agents)
        if cfg.mode in (PlannerMode.HYBRID_AT, PlannerMode.HYBRID_APP_AT):
            cand = at_candidate_action(self._at_state, a)
            if cand is None:
                predicted = near_mover = False
            else:
                predicted = at_predict_collision(self.pose, cand, scan_points(eff, self.pose), cfg.dt)
                near_mover = moving_obstacle_near(
                    self.pose, cand, self.agents, cfg.dt, cfg.sfm_params.sensing_range
                )
            a, self._at_state = at_step(self._at_state, a, predicted, near_mover)
        return a

    def _step_agents(self, robot_before: Body, robot_vel_before):
        cfg = self.cfg
        if not self.agents:
            return
        if cfg.agents.behavior == "sfm":
            snapshot = list(self.agents)
            new = []
            for i, a in enumerate(snapshot):
                neighbors = snapshot[:i] + snapshot[i + 1 :]
                new.append(
                    sfm_agent_step(
                        a, neighbors, robot_before, robot_vel_before, cfg.wmap, cfg.sfm_params, cfg.dt
                    )
                )
        else:
            new = [cvm_step(a, cfg.dt) for a in self.agents]
        if cfg.agents.respawn:
            new = [self._refresh_agent(a) for a in new]
        self.agents = new

    def _refresh_agent(self, a: AgentState) -> AgentState:
        """Keep traffic flowing: new goal on arrival; constant-velocity walkers
        that drift out of bounds respawn at a fresh free position."""
        cfg = self.cfg
        out_of_bounds = not cfg.wmap.contains(a.position)
        arrived = np.hypot(*(a.goal - a.position)) < AGENT_GOAL_RADIUS
        if not (out_of_bounds or arrived):
            return a
        pos = a.position
        if out_of_bounds:
            for _ in range(100):
                pos = sample_free_point(cfg.wmap, self._agent_rng, R_AGENT)
                if np.hypot(*(pos - self.pose.position)) >= MIN_SPAWN_GAP:
                    break
        goal = sample_free_point(cfg.wmap, self._agent_rng, R_AGENT)
        if cfg.agents.behavior == "cvm":
            direction = goal - pos
            n = np.hypot(*direction)
            vel = a.max_speed * direction / n if n > 1e-9 else np.zeros(2)
        else:
            vel = a.velocity
        return AgentState(Body(pos, a.body.radius), vel, goal, a.max_speed)

    def step(self):
        """One control cycle; sets .outcome when the episode terminates."""
        if self.outcome is not None:
            return
        cfg = self.cfg
        raw = scan(cfg.wmap, [a.body for a in self.agents], self.pose, self._noise)
        action = self._choose_action(raw)

        robot_before = self._robot_body()
        vel_before = self.velocity
        heading = np.array([math.cos(self.pose.heading), math.sin(self.pose.heading)])
        self.pose = integrate_unicycle(self.pose, action.linear, action.angular, cfg.dt)
        self.velocity = action.linear * heading
        self.path_length += abs(action.linear) * cfg.dt

        self._step_agents(robot_before, vel_before)

        self.steps += 1
        body = self._robot_body()
        agent_bodies = [a.body for a in self.agents]
        self.min_clearance = min(self.min_clearance, clearance(body, cfg.wmap, agent_bodies))
        if self.trace is not None:
            self._record(raw, action)
        if check_collision(body, cfg.wmap, agent_bodies):
            self.outcome = Outcome.COLLISION
        elif np.hypot(*(self.goal - self.pose.position)) < cfg.goal_radius:
            self.outcome = Outcome.SUCCESS
        elif self.steps >= cfg.max_steps:
            self.outcome = Outcome.TIMEOUT

    def _record(self, raw_scan, action):
        t = self.steps
        self.trace["robot"].append(
            (t, self.pose.x, self.pose.y, self.pose.heading, action.linear, action.angular)
        )
        for i, a in enumerate(self.agents):
            self.trace["agents"].append(
                (t, i, a.position[0], a.position[1], a.velocity[0], a.velocity[1])
            )
        for c in self.circles:
            self.trace["circles"].append(
                (t, c.agent_id, c.step_index, c.center[0], c.center[1], c.radius)
            )
        if self.cfg.record_scans:
            for b, r in enumerate(raw_scan.ranges):
                self.trace["scans"].append((t, b, r))

    def result(self) -> EpisodeResult:
        if self.outcome is None:
            raise RuntimeError("episode still running")
        return EpisodeResult(
            self.outcome, self.steps, float(self.min_clearance), self.path_length, self.trace
        )


def run_episode(cfg: EpisodeConfig) -> EpisodeResult:
    """Run one episode to termination. Deterministic for a given config seed."""
    sim = Simulation(cfg)
    while sim.outcome is None:
        sim.step()
    return sim.result()


def _run_indexed(args):
    cfg, index, base = args
    return run_episode(replace(cfg, seed=episode_seed(base, index)))


def run_batch(cfg: EpisodeConfig, episodes: int, seed=None) -> list[EpisodeResult]:
    """Run an episode batch with per-index derived seeds.

    Set SOCNAV_WORKERS > 1 to fan out over processes; results are identical to
    the serial order either way.
    """
    if episodes < 1:
        raise ValueError("need episodes >= 1")
    base = cfg.seed if seed is None else seed
    jobs = [(cfg, i, base) for i in range(episodes)]
    workers = int(os.environ.get("SOCNAV_WORKERS", "1"))
    if workers > 1:
        with Pool(workers) as pool:
            return pool.map(_run_indexed, jobs)
    return [_run_indexed(j) for j in jobs]


def evaluate(cfg: EpisodeConfig, episodes: int = 100, seed=None) -> Metrics:
    """Outcome counts over a batch as SR/CR/TR percentages."""
    return Metrics.from_results(run_batch(cfg, episodes, seed))


# ---------------------------------------------------------------------------
# Forced-intersection suite

INTERSECTION_NOMINAL_SPEED = 0.9  # m/s, planning speed used to time arrivals

# Each agent is (bearing_deg, path_distance_m, arrival_offset_s, lateral_offset_m):
# it crosses the robot's straight route at path_distance (shifted laterally by
# lateral_offset), arriving arrival_offset seconds before/after a robot moving
# at the nominal speed would. Offsets grade the cases from loose (clearable at
# any agent speed) to tight (solvable only with enough warning time); head-on
# encounters carry a lateral shift so they are geometrically resolvable.
INTERSECTION_CASES = (
    ((-60, 4.0, -0.5, 0.0),),
    ((60, 4.0, -0.5, 0.0),),
    ((-60, 4.0, 0.0, 0.0),),
    ((60, 4.0, 0.0, 0.0),),
    ((-60, 4.0, -1.0, 0.0),),
    ((60, 4.0, 2.0, 0.0),),
    ((-30, 4.0, -2.0, 0.0),),
    ((0, 4.5, 0.0, 0.8),),
    ((-30, 4.0, -1.0, 0.0),),
    ((30, 4.0, -1.0, 0.0),),
    ((-60, 4.0, -0.5, 0.0), (60, 6.0, -2.0, 0.0)),
    ((60, 3.0, -2.0, 0.0), (0, 5.0, -3.0, 1.0), (30, 7.0, -2.5, 0.0)),
)


def intersection_case_agents(case, agent_max_speed: float) -> list[AgentState]:
    """Agents timed to cross the robot's straight route.

    The crossing time scales with the robot's nominal progress, so raising the
    agent speed leaves the conflict timing unchanged but shrinks the warning
    window (the agent covers the sensing range faster). With zero agent speed
    the walkers instead stand 2 m off the route.
    """
    start = np.array([4.0, 10.0])
    agents = []
    for theta_deg, dist, t_off, lat in case:
        p_cross = start + np.array([dist, lat])
        ang = math.pi + math.radians(theta_deg)
        u = np.array([math.cos(ang), math.sin(ang)])
        if agent_max_speed < 1e-9:
            perp = np.array([-u[1], u[0]])
            pos = p_cross + 2.0 * perp
            vel = np.zeros(2)
        else:
            t_arrive = dist / INTERSECTION_NOMINAL_SPEED + t_off
            pos = p_cross - agent_max_speed * t_arrive * u
            vel = agent_max_speed * u
        agents.append(AgentState(Body(pos, R_AGENT), vel, pos + 100.0 * u, max(agent_max_speed, 1e-9)))
    return agents


def intersection_suite(
    mode: PlannerMode,
    agent_max_speed: float,
    policy="scripted",
    dt: float = 0.2,
    max_steps: int = 300,
    seed=0,
) -> Metrics:
    """Run the 12 fixed crossing fixtures on the empty map with constant
    velocity agents scaled to agent_max_speed."""
    if agent_max_speed < 0:
        raise ValueError("agent_max_speed must be >= 0")
    wmap = maps.empty_map()
    results = []
    for i, case in enumerate(INTERSECTION_CASES):
        agents = intersection_case_agents(case, agent_max_speed)
        cfg = EpisodeConfig(
            wmap=wmap,
            mode=mode,
            policy=policy,
            agents=AgentSpec(len(agents), "cvm", max(agent_max_speed, 1e-9), respawn=False),
            dt=dt,
            max_steps=max_steps,
            seed=episode_seed(seed, i),
            fixed_start=Pose(4.0, 10.0, 0.0),
            fixed_goal=np.array([13.0, 10.0]),
            fixed_agents=agents,
        )
        results.append(run_episode(cfg))
    return Metrics.from_results(results)


def sweep(axis: str, values, cfg: EpisodeConfig, episodes: int = 100, seed=None):
    """One Metrics row per value along the requested axis."""
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    rows = []
    for v in values:
        if axis == "noise":
            m = evaluate(replace(cfg, sigma_lidar=float(v)), episodes, seed)
        elif axis == "agents":
            m = evaluate(replace(cfg, agents=replace(cfg.agents, count=int(v))), episodes, seed)
        elif axis == "velocity":
            m = intersection_suite(
                cfg.mode, float(v), policy=cfg.policy, dt=cfg.dt, seed=cfg.seed if seed is None else seed
            )
        else:
            raise ValueError(f"unknown sweep axis {axis!r}")
        rows.append((v, m))
    return rows
