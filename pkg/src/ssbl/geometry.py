"""Planar vectors, agent state, proxemics/world configuration and the shared
physics integrator.

All quantities are SI: meters, seconds, radians. Headings live in (-pi, pi].
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

# Below this norm a direction is undefined and every direction-dependent
# quantity evaluates to the zero vector.
EPS_DIR = 1e-9


class SimulationFault(RuntimeError):
    """Simulation state is corrupt (non-finite position/velocity/command)."""


class Vec2(NamedTuple):
    """Immutable 2D vector. Arithmetic returns new vectors."""

    x: float
    y: float

    def __add__(self, other):
        return Vec2(self.x + other.x, self.y + other.y)

    def __radd__(self, other):
        # supports sum() over vectors
        if other == 0:
            return self
        return NotImplemented

    def __sub__(self, other):
        return Vec2(self.x - other.x, self.y - other.y)

    def __mul__(self, k: float):
        return Vec2(self.x * k, self.y * k)

    __rmul__ = __mul__

    def __neg__(self):
        return Vec2(-self.x, -self.y)

    def dot(self, other) -> float:
        return self.x * other.x + self.y * other.y

    def norm_sq(self) -> float:
        return self.x * self.x + self.y * self.y

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def normalized(self) -> "Vec2":
        """Unit vector, or (0, 0) when the norm is at or below EPS_DIR."""
        n = math.hypot(self.x, self.y)
        if n <= EPS_DIR:
            return Vec2(0.0, 0.0)
        return Vec2(self.x / n, self.y / n)

    def rotated(self, angle: float) -> "Vec2":
        c, s = math.cos(angle), math.sin(angle)
        return Vec2(c * self.x - s * self.y, s * self.x + c * self.y)

    def heading(self) -> float:
        return math.atan2(self.y, self.x)

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y)


ZERO2 = Vec2(0.0, 0.0)


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    r = a % TWO_PI
    return r - TWO_PI if r > math.pi else r


class Role(Enum):
    SHA = "sha"
    ROBOT = "robot"


@dataclass(slots=True)
class AgentState:
    """Pose and velocity of one agent. Treated as an immutable value:
    the integrator returns a new state instead of mutating."""

    id: int
    role: Role
    position: Vec2
    velocity: Vec2
    heading: float  # radians in (-pi, pi]

    def speed(self) -> float:
        return self.velocity.norm()

    def heading_unit(self) -> Vec2:
        return Vec2(math.cos(self.heading), math.sin(self.heading))


@dataclass(slots=True)
class ProxemicsConfig:
    """Interpersonal zone radii (personal < social < public) plus the floor
    radius used when estimating a shared conversation space."""

    d_personal: float = 1.2
    d_social: float = 3.6
    d_public: float = 7.6
    s_min: float = 0.5

    def validate(self) -> None:
        if not (0.0 < self.d_personal < self.d_social < self.d_public):
            raise ValueError(
                f"proxemics radii must satisfy 0 < personal < social < public, "
                f"got ({self.d_personal}, {self.d_social}, {self.d_public})"
            )
        if self.s_min <= 0.0:
            raise ValueError(f"s_min must be positive, got {self.s_min}")


@dataclass(slots=True)
class WorldConfig:
    """Square floor with four walls and the integrator constants."""

    floor_side: float = 10.0
    dt: float = 0.1
    v_max: float = 1.0
    a_max: float = 1.0
    omega_max: float = math.pi / 2.0
    damping: float = 0.95

    def validate(self) -> None:
        if self.floor_side <= 0.0:
            raise ValueError("floor_side must be positive")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if not (0.0 < self.damping <= 1.0):
            raise ValueError("damping must lie in (0, 1]")
        if self.v_max <= 0.0 or self.a_max <= 0.0 or self.omega_max <= 0.0:
            raise ValueError("v_max, a_max and omega_max must be positive")

    def center(self) -> Vec2:
        return Vec2(self.floor_side / 2.0, self.floor_side / 2.0)


def integrate(agent: AgentState, accel: Vec2, turn_rate: float,
              world: WorldConfig) -> AgentState:
    """Advance one agent by one tick of semi-implicit Euler.

    v' = clamp(damping * (v + a*dt), v_max); p' = p + v'*dt, clamped to the
    walls with the velocity component into the wall zeroed; heading wrapped.
    """
    if not (accel.is_finite() and math.isfinite(turn_rate)
            and agent.position.is_finite() and agent.velocity.is_finite()
            and math.isfinite(agent.heading)):
        raise SimulationFault(f"non-finite state or command for agent {agent.id}")
    if accel.norm() > world.a_max * (1.0 + 1e-9) + 1e-12:
        raise ValueError(f"|accel|={accel.norm()} exceeds a_max={world.a_max}")
    if abs(turn_rate) > world.omega_max * (1.0 + 1e-9) + 1e-12:
        raise ValueError(f"|turn_rate|={turn_rate} exceeds omega_max={world.omega_max}")

    d = world.damping
    dt = world.dt
    vx = d * (agent.velocity.x + accel.x * dt)
    vy = d * (agent.velocity.y + accel.y * dt)
    speed = math.hypot(vx, vy)
    # renormalize at most a few times so rounding can never leave speed above cap
    for _ in range(4):
        if speed <= world.v_max:
            break
        f = world.v_max / speed
        vx *= f
        vy *= f
        speed = math.hypot(vx, vy)

    px = agent.position.x + vx * dt
    py = agent.position.y + vy * dt
    side = world.floor_side
    if px < 0.0:
        px = 0.0
        if vx < 0.0:
            vx = 0.0
    elif px > side:
        px = side
        if vx > 0.0:
            vx = 0.0
    if py < 0.0:
        py = 0.0
        if vy < 0.0:
            vy = 0.0
    elif py > side:
        py = side
        if vy > 0.0:
            vy = 0.0

    return AgentState(
        id=agent.id,
        role=agent.role,
        position=Vec2(px, py),
        velocity=Vec2(vx, vy),
        heading=wrap_angle(agent.heading + turn_rate * dt),
    )


def wall_distances(p: Vec2, world: WorldConfig) -> tuple[float, float, float, float]:
    """Distances (left, right, bottom, top) from p to the four walls.

    Points outside the floor are clamped first; that only happens on corrupt
    input, so it is logged rather than raised.
    """
    side = world.floor_side
    x = min(max(p.x, 0.0), side)
    y = min(max(p.y, 0.0), side)
    if x != p.x or y != p.y:
        log.warning("wall_distances: position %s outside [0, %s]^2, clamped", p, side)
    return (x, side - x, y, side - y)
