"""Combination of the policy action with the social-force velocity correction."""
from __future__ import annotations

from enum import Enum

from .policy import Action, clamp_action


class PlannerMode(Enum):
    """Which layers run on top of the raw policy during an episode."""

    OP_DDPG = "op_ddpg"  # raw policy, no correction
    HYBRID = "hybrid"  # policy + repulsive velocity change
    HYBRID_AT = "at"  # hybrid + anticipative turn
    HYBRID_ARP = "arp"  # hybrid + robot & pedestrian propagation
    HYBRID_APP = "app"  # hybrid + pedestrian propagation circles
    HYBRID_APP_AT = "app_at"  # hybrid + circles + anticipative turn

    @classmethod
    def parse(cls, s: str) -> "PlannerMode":
        try:
            return cls(s.lower())
        except ValueError:
            raise ValueError(
                f"unknown planner mode {s!r}; expected one of {[m.value for m in cls]}"
            ) from None


def combine(a: Action, dv: tuple[float, float]) -> Action:
    """Add the velocity correction to the policy action, then clamp each
    component back into the action box."""
    return clamp_action(a.linear + dv[0], a.angular + dv[1])
