"""Actor/critic networks, the step reward, and the scripted fallback policy.

Network sizing follows the deployed controller: actor hidden widths
(241, 12, 20) onto 2 outputs, critic observation tower of width 84 feeding a
joint tower (607, 242) onto a scalar value, ReLU activations throughout.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from .nets import Mlp, relu
from .sensing import MAX_RANGE, OBS_DIM, Observation

ACTION_LOW = np.array([-0.2, -1.0])  # linear m/s, angular rad/s
ACTION_HIGH = np.array([1.0, 1.0])
_ACTION_MID = (ACTION_LOW + ACTION_HIGH) / 2.0
_ACTION_HALF = (ACTION_HIGH - ACTION_LOW) / 2.0

ACTOR_HIDDEN = (241, 12, 20)
CRITIC_OBS_WIDTH = 84
CRITIC_JOINT_HIDDEN = (607, 242)

# Fixed input scaling, part of the architecture: ranges to [0,1], goal
# distance to a comparable magnitude, bearing to [-1,1].
_OBS_SCALE = np.concatenate([np.full(OBS_DIM - 2, 1.0 / MAX_RANGE), [0.1, 1.0 / math.pi]])

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class Action:
    linear: float
    angular: float

    def as_array(self) -> np.ndarray:
        return np.array([self.linear, self.angular])


def clamp_action(linear: float, angular: float) -> Action:
    return Action(
        float(min(max(linear, ACTION_LOW[0]), ACTION_HIGH[0])),
        float(min(max(angular, ACTION_LOW[1]), ACTION_HIGH[1])),
    )


@dataclass(frozen=True)
class RewardWeights:
    """Coefficients for [step, dist_goal, collision, turn, clearance, goal]."""

    step: float
    dist_goal: float
    collision: float
    turn: float
    clearance: float
    goal: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.step, self.dist_goal, self.collision, self.turn, self.clearance, self.goal]
        )


DEFAULT_REWARD_WEIGHTS = RewardWeights(-0.43, 0.38, -57.90, 0.415, 0.67, 62.0)


def reward(features, weights: RewardWeights = DEFAULT_REWARD_WEIGHTS) -> float:
    """Dot product of the six step features with their coefficients.

    Features are [1, -dist_to_goal, collided, -|angular|, min_range, reached].
    """
    f = np.asarray(features, dtype=float)
    if f.shape != (6,):
        raise ValueError(f"expected 6 reward features, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise ValueError("non-finite reward feature")
    return float(f @ weights.as_array())


def reward_features(dist_to_goal, collided, angular, min_range, reached) -> np.ndarray:
    return np.array(
        [1.0, -dist_to_goal, 1.0 if collided else 0.0, -abs(angular), min_range, 1.0 if reached else 0.0]
    )


class ActorNet:
    """Deterministic policy network; tanh-squashed affine map onto the action box."""

    def __init__(self, rng: np.random.Generator | None = None, hidden=ACTOR_HIDDEN, obs_dim=OBS_DIM):
        self.obs_dim = obs_dim
        self.mlp = Mlp([obs_dim, *hidden, 2], rng)
        self.scale = _OBS_SCALE if obs_dim == OBS_DIM else np.ones(obs_dim)

    @property
    def params(self):
        return self.mlp.params

    def copy(self) -> "ActorNet":
        out = ActorNet.__new__(ActorNet)
        out.obs_dim = self.obs_dim
        out.mlp = self.mlp.copy()
        out.scale = self.scale
        return out

    def forward(self, obs: np.ndarray) -> np.ndarray:
        """Batched forward: obs (B, obs_dim) -> actions (B, 2) within bounds."""
        z = self.mlp.forward(obs * self.scale)
        return _ACTION_MID + _ACTION_HALF * np.tanh(z)

    def forward_full(self, obs: np.ndarray):
        z, cache = self.mlp.forward_full(obs * self.scale)
        y = np.tanh(z)
        return _ACTION_MID + _ACTION_HALF * y, (cache, y)

    def backward(self, cache, grad_action: np.ndarray):
        mlp_cache, y = cache
        gz = grad_action * _ACTION_HALF * (1.0 - y * y)
        grads, _ = self.mlp.backward(mlp_cache, gz)
        return grads


class CriticNet:
    """Q network: observation tower encodes the obs, the joint tower consumes
    [encoding, action] and emits a scalar value."""

    def __init__(
        self,
        rng: np.random.Generator | None = None,
        obs_width=CRITIC_OBS_WIDTH,
        joint_hidden=CRITIC_JOINT_HIDDEN,
        obs_dim=OBS_DIM,
    ):
        self.obs_dim = obs_dim
        self.tower = Mlp([obs_dim, obs_width], rng, out_scale=1.0 / np.sqrt(obs_dim))
        self.joint = Mlp([obs_width + 2, *joint_hidden, 1], rng)
        self.scale = _OBS_SCALE if obs_dim == OBS_DIM else np.ones(obs_dim)

    @property
    def params(self):
        return self.tower.params + self.joint.params

    def copy(self) -> "CriticNet":
        out = CriticNet.__new__(CriticNet)
        out.obs_dim = self.obs_dim
        out.tower = self.tower.copy()
        out.joint = self.joint.copy()
        out.scale = self.scale
        return out

    def forward(self, obs: np.ndarray, action: np.ndarray) -> np.ndarray:
        q, _ = self.forward_full(obs, action)
        return q

    def forward_full(self, obs: np.ndarray, action: np.ndarray):
        z_enc, tower_cache = self.tower.forward_full(obs * self.scale)
        enc = relu(z_enc)
        joint_in = np.concatenate([enc, action], axis=-1)
        q, joint_cache = self.joint.forward_full(joint_in)
        return q[..., 0], (tower_cache, z_enc, joint_cache)

    def backward(self, cache, grad_q: np.ndarray):
        """Returns (param grads ordered like .params, d(loss)/d(action))."""
        tower_cache, z_enc, joint_cache = cache
        g = grad_q[..., None]
        joint_grads, g_in = self.joint.backward(joint_cache, g)
        g_enc = g_in[..., : z_enc.shape[-1]]
        g_action = g_in[..., z_enc.shape[-1] :]
        tower_grads, _ = self.tower.backward(tower_cache, g_enc * (z_enc > 0.0))
        return tower_grads + joint_grads, g_action


def actor_forward(net: ActorNet, obs_vec) -> Action:
    """Single-observation policy inference with bound-safe outputs."""
    obs_vec = np.asarray(obs_vec, dtype=float)
    if obs_vec.shape != (net.obs_dim,):
        raise ValueError(f"expected obs of shape ({net.obs_dim},), got {obs_vec.shape}")
    if not np.all(np.isfinite(obs_vec)):
        raise ValueError("non-finite observation")
    a = net.forward(obs_vec[None, :])[0]
    return Action(float(a[0]), float(a[1]))


def critic_forward(net: CriticNet, obs_vec, action) -> float:
    obs_vec = np.asarray(obs_vec, dtype=float)
    if obs_vec.shape != (net.obs_dim,):
        raise ValueError(f"expected obs of shape ({net.obs_dim},), got {obs_vec.shape}")
    act = action.as_array() if isinstance(action, Action) else np.asarray(action, dtype=float)
    return float(net.forward(obs_vec[None, :], act[None, :])[0])


def scripted_policy(obs: Observation) -> Action:
    """Reactive fallback: steer proportionally to goal bearing, slow down near
    obstacles. No anticipation, used as a training-free baseline policy."""
    rho, alpha = obs.goal_polar
    min_range = float(min(s.ranges.min() for s in obs.lidar_stack))
    linear = min(1.0, 0.5 + 0.1 * min_range)
    return clamp_action(linear, 2.0 * alpha)


# ---------------------------------------------------------------------------
# Checkpoints


def _digest(arrays: dict[str, np.ndarray]) -> str:
    h = hashlib.sha256()
    for k in sorted(arrays):
        h.update(k.encode())
        h.update(np.ascontiguousarray(arrays[k]).tobytes())
    return h.hexdigest()


def save_checkpoint(path, actor: ActorNet, critic: CriticNet, extra: dict | None = None) -> str:
    """Write all tensors plus a JSON header with shapes and a content digest.

    Returns the digest string.
    """
    arrays = {}
    for i, p in enumerate(actor.params):
        arrays[f"actor_{i}"] = p
    for i, p in enumerate(critic.params):
        arrays[f"critic_{i}"] = p
    digest = _digest(arrays)
    meta = {
        "version": CHECKPOINT_VERSION,
        "obs_dim": actor.obs_dim,
        "shapes": {k: list(v.shape) for k, v in arrays.items()},
        "digest": digest,
    }
    if extra:
        meta.update(extra)
    np.savez(path, meta=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8), **arrays)
    return digest


def load_checkpoint(path) -> tuple[ActorNet, CriticNet, dict]:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        arrays = {k: data[k] for k in data.files if k != "meta"}
    if meta.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {meta.get('version')}")
    if _digest(arrays) != meta["digest"]:
        raise ValueError("checkpoint digest mismatch (corrupted file)")
    actor = ActorNet(obs_dim=meta["obs_dim"])
    critic = CriticNet(obs_dim=meta["obs_dim"])
    n_actor = len(actor.params)
    actor.mlp.set_params([arrays[f"actor_{i}"] for i in range(n_actor)])
    n_tower = len(critic.tower.params)
    n_critic = len(critic.params)
    critic_params = [arrays[f"critic_{i}"] for i in range(n_critic)]
    critic.tower.set_params(critic_params[:n_tower])
    critic.joint.set_params(critic_params[n_tower:])
    return actor, critic, meta
