"""Per-step reward increments and their weighted combination.

Five components accumulate over an episode:

  r1  work done by the conversation field along the robot's path
      (midpoint-rule line integral)
  r2  time credited while the field's work rate on the robot is >= 0
  r3  time penalty, -dt every step
  r4  one-shot bonus on successful joining
  r5  negative work done by the field along each SHA's path (disturbance)

Total per step:  w_e*(w1*r1 + w2*r2 + w3*r3 + w4*r4) + w_a*w5*r5.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

from .geometry import Vec2


@dataclass(slots=True)
class RewardWeights:
    """Component weights plus the egoism/altruism split.

    `sign_r1` flips the field-work sign convention for r1 (and therefore the
    r2 work-rate test); the default rewards moving with the field.
    """

    w_e: float = 1.0
    w_a: float = 1.0
    w1: float = 1.0
    w2: float = 0.1
    w3: float = 0.1
    w4: float = 1.0
    w5: float = 0.5
    success_bonus: float = 10.0
    sign_r1: float = 1.0

    def validate(self) -> None:
        for name in ("w_e", "w_a", "w1", "w2", "w3", "w4", "w5"):
            v = getattr(self, name)
            if v < 0.0:
                raise ValueError(f"reward weight {name} must be >= 0, got {v}")
        if self.sign_r1 not in (1.0, -1.0):
            raise ValueError(f"sign_r1 must be +1 or -1, got {self.sign_r1}")


@dataclass(slots=True)
class RewardBreakdown:
    r1: float = 0.0
    r2: float = 0.0
    r3: float = 0.0
    r4: float = 0.0
    r5: float = 0.0
    total: float = 0.0


def group_forming_increment(field_at: Callable[[Vec2], Vec2],
                            u_prev: Vec2, u_next: Vec2) -> float:
    """Midpoint-rule increment of the field line integral along one step:
    field((u_prev+u_next)/2) . (u_next - u_prev)."""
    mid = Vec2((u_prev.x + u_next.x) * 0.5, (u_prev.y + u_next.y) * 0.5)
    du = u_next - u_prev
    return field_at(mid).dot(du)


def non_increasing_increment(work_rate: float, dt: float) -> float:
    """dt while the field's work rate is non-negative, else 0."""
    return dt if work_rate >= 0.0 else 0.0


def time_penalty_increment(dt: float) -> float:
    return -dt


def success_bonus(success: bool, bonus: float = 10.0) -> float:
    return bonus if success else 0.0


def sha_disturbance_increment(per_sha: Iterable[tuple[Vec2, Vec2]]) -> float:
    """-sum over SHAs of (force on the SHA) . (its displacement this step)."""
    total = 0.0
    for force, disp in per_sha:
        total += force.dot(disp)
    return -total


def total_reward(b: RewardBreakdown, w: RewardWeights) -> float:
    return (w.w_e * (w.w1 * b.r1 + w.w2 * b.r2 + w.w3 * b.r3 + w.w4 * b.r4)
            + w.w_a * w.w5 * b.r5)
