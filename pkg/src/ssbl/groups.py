"""Simulated human agents: the force-driven controller that holds the group
formation, and episode spawning."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .forces import OSpace, combined_force
from .geometry import (EPS_DIR, AgentState, ProxemicsConfig, Role, Vec2,
                       WorldConfig, wrap_angle)


class SpawnError(RuntimeError):
    """Spawn constraints could not be satisfied."""


@dataclass(slots=True)
class GroupSpawnSpec:
    """Initial-configuration parameters for one episode."""

    n_shas: int = 2
    separation: float = 2.0        # diameter of the circle the SHAs stand on
    center_region: float = 1.5     # half-side of the spawn box for the group center
    robot_min_dist: float = 4.0    # minimum robot distance from the group centroid
    rng_seed: int = 0

    def validate(self, world: WorldConfig, prox: ProxemicsConfig) -> None:
        if self.n_shas < 2:
            raise ValueError(f"n_shas must be >= 2, got {self.n_shas}")
        if self.robot_min_dist <= prox.d_social:
            raise ValueError(
                f"robot_min_dist ({self.robot_min_dist}) must exceed "
                f"d_social ({prox.d_social})"
            )
        half = world.floor_side / 2.0
        if self.center_region + self.separation / 2.0 >= half:
            raise ValueError("group spawn region does not fit inside the floor")


@dataclass(slots=True)
class ShaGains:
    """Gains of the force-following controller driving each SHA."""

    gain_f: float = 1.0    # force -> acceleration
    k_turn: float = 2.0    # heading error -> turn rate
    f_dead: float = 0.05   # force deadband; below it the agent holds position
    w_de: float = 0.5      # orientation blend weight for the social direction
    w_dc: float = 0.5      # orientation blend weight for the public direction


DEFAULT_GAINS = ShaGains()


def sha_policy(sha: AgentState, all_agents: list[AgentState],
               prox: ProxemicsConfig, ospace: OSpace, world: WorldConfig,
               gains: ShaGains = DEFAULT_GAINS) -> tuple[Vec2, float]:
    """Acceleration and turn rate for one SHA under the conversation field.

    Acceleration follows the combined force (deadbanded, clipped to a_max).
    The agent turns toward the blend of its normalized social and public
    orientation vectors; when both vanish it holds heading.
    """
    if sha.role is not Role.SHA:
        raise ValueError(f"sha_policy called for non-SHA agent {sha.id}")
    others = [a for a in all_agents if a.id != sha.id]
    bd = combined_force(sha, others, prox, ospace)

    f = bd.combined
    fnorm = f.norm()
    if fnorm < gains.f_dead:
        accel = Vec2(0.0, 0.0)
    else:
        accel = gains.gain_f * f
        anorm = accel.norm()
        if anorm > world.a_max:
            accel = accel * (world.a_max / anorm)

    blend = gains.w_de * bd.d_e.normalized() + gains.w_dc * bd.d_c.normalized()
    if blend.norm() <= EPS_DIR:
        turn = 0.0
    else:
        err = wrap_angle(blend.heading() - sha.heading)
        turn = max(-world.omega_max, min(world.omega_max, gains.k_turn * err))
    return accel, turn


def _ray_to_wall(origin: Vec2, angle: float, side: float) -> float:
    """Distance from origin to the floor boundary along the given direction."""
    c, s = math.cos(angle), math.sin(angle)
    best = math.hypot(side, side)  # diagonal bound
    if c > EPS_DIR:
        best = min(best, (side - origin.x) / c)
    elif c < -EPS_DIR:
        best = min(best, -origin.x / c)
    if s > EPS_DIR:
        best = min(best, (side - origin.y) / s)
    elif s < -EPS_DIR:
        best = min(best, -origin.y / s)
    return best


MAX_SPAWN_TRIES = 1000


def spawn_episode(spec: GroupSpawnSpec, world: WorldConfig) -> list[AgentState]:
    """Spawn the group and the robot for one episode.

    SHAs stand on a circle of diameter `separation` around a group center
    drawn uniformly from the center-region box, all facing the centroid.
    The robot is placed at a uniform distance in [robot_min_dist, wall bound]
    from the centroid with a uniform heading. Returns [robot, sha_1, ...]
    with the robot as agent 0.
    """
    rng = np.random.default_rng(spec.rng_seed)
    side = world.floor_side
    half = side / 2.0

    center = Vec2(
        half + rng.uniform(-spec.center_region, spec.center_region),
        half + rng.uniform(-spec.center_region, spec.center_region),
    )
    phase = rng.uniform(0.0, 2.0 * math.pi)
    radius = spec.separation / 2.0

    agents: list[AgentState] = []
    for k in range(spec.n_shas):
        ang = phase + 2.0 * math.pi * k / spec.n_shas
        pos = Vec2(center.x + radius * math.cos(ang),
                   center.y + radius * math.sin(ang))
        if not (0.0 <= pos.x <= side and 0.0 <= pos.y <= side):
            raise SpawnError("group circle does not fit inside the floor")
        heading = wrap_angle((center - pos).heading())
        agents.append(AgentState(id=k + 1, role=Role.SHA, position=pos,
                                 velocity=Vec2(0.0, 0.0), heading=heading))

    robot = None
    for _ in range(MAX_SPAWN_TRIES):
        ang = rng.uniform(0.0, 2.0 * math.pi)
        reach = _ray_to_wall(center, ang, side)
        if reach <= spec.robot_min_dist:
            continue
        dist = rng.uniform(spec.robot_min_dist, reach)
        pos = Vec2(center.x + dist * math.cos(ang),
                   center.y + dist * math.sin(ang))
        heading = wrap_angle(rng.uniform(-math.pi, math.pi))
        robot = AgentState(id=0, role=Role.ROBOT, position=pos,
                           velocity=Vec2(0.0, 0.0), heading=heading)
        break
    if robot is None:
        raise SpawnError(
            f"could not place robot at distance >= {spec.robot_min_dist} "
            f"within {MAX_SPAWN_TRIES} tries"
        )
    return [robot] + agents
