"""Scenario configuration: one YAML file describes one evaluation setting.

Schema (SI units throughout)::

    seed: 1
    map:
      name: building1            # label
      bounds: [30.0, 24.0]       # width, height in meters
      obstacles:                 # polygon vertex lists and/or rects
        - [[1, 1], [3, 1], [3, 2], [1, 2]]
        - {rect: [x0, y0, x1, y1]}
      spawn_region: [[...]]      # optional polygon
    # or:  map: {builtin: building1}
    agents: {count: 20, max_speed: 1.2, behavior: sfm}   # sfm | cvm
    sampling: {mode: pd}          # ed | pd
    noise: {sigma: 0.0}
    episode: {max_steps: 500, dt: 0.2}
    planner: {mode: hybrid}       # op_ddpg|hybrid|at|arp|app|app_at
    sfm: {A: 0.7, B: 0.588, horizon: 5.0, relaxation_time: 0.5, angular_gain: 1.0}
    anticipation: {n: 20, every: 5, sigma: 0.01}
"""
from __future__ import annotations

import yaml

from .anticipation import ArpConfig
from .episodes import AgentSpec, EpisodeConfig
from .hybrid import PlannerMode
from .sfm import SfmParams
from .world import load_map


class ConfigError(ValueError):
    pass


def _section(tree: dict, key: str) -> dict:
    v = tree.get(key, {}) or {}
    if not isinstance(v, dict):
        raise ConfigError(f"scenario section {key!r} must be a mapping")
    return v


def scenario_from_tree(tree: dict) -> EpisodeConfig:
    if not isinstance(tree, dict) or "map" not in tree:
        raise ConfigError("scenario needs a 'map' section")
    wmap = load_map(tree["map"])
    agents = _section(tree, "agents")
    sampling = _section(tree, "sampling")
    noise = _section(tree, "noise")
    episode = _section(tree, "episode")
    planner = _section(tree, "planner")
    sfm = _section(tree, "sfm")
    ant = _section(tree, "anticipation")
    try:
        return EpisodeConfig(
            wmap=wmap,
            mode=PlannerMode.parse(planner.get("mode", "hybrid")),
            agents=AgentSpec(
                count=int(agents.get("count", 0)),
                behavior=agents.get("behavior", "sfm"),
                max_speed=float(agents.get("max_speed", 1.2)),
                respawn=bool(agents.get("respawn", True)),
            ),
            sigma_lidar=float(noise.get("sigma", 0.0)),
            dt=float(episode.get("dt", 0.2)),
            max_steps=int(episode.get("max_steps", 500)),
            sampling=sampling.get("mode", "ed"),
            seed=tree.get("seed", 0),
            sfm_params=SfmParams(
                amplitude=float(sfm.get("A", 0.7)),
                decay=float(sfm.get("B", 10.0 / 17.0)),
                horizon=float(sfm.get("horizon", 5.0)),
                relaxation_time=float(sfm.get("relaxation_time", 0.5)),
                angular_gain=float(sfm.get("angular_gain", 1.0)),
                sensing_range=float(sfm.get("sensing_range", 5.0)),
            ),
            arp=ArpConfig(
                n=int(ant.get("n", 20)),
                local_map_range=float(ant.get("local_map_range", 5.0)),
                point_radius=float(ant.get("point_radius", 0.05)),
            ),
            app_every=int(ant.get("every", 5)),
            app_sigma=float(ant.get("sigma", 0.01)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_scenario(path) -> EpisodeConfig:
    with open(path) as f:
        tree = yaml.safe_load(f)
    return scenario_from_tree(tree)
