"""Policies: the feed-forward network, the force-following baseline and the
uniform-random reference, plus checkpoint I/O.

Network parameters are canonically float32 (that is what checkpoints store);
forward passes run in float64 on cached upcast weights.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .env import Action, ApproachEnv
from .forces import ForceBreakdown, combined_force
from .geometry import AgentState, wrap_angle

# Inputs are meters / meters-per-second on a ~10 m floor; this keeps the
# first-layer preactivations in the responsive range of tanh.
OBS_SCALE = 0.1

ACTIVATION = "tanh"


def param_count(layer_sizes: tuple[int, ...]) -> int:
    return sum((din + 1) * dout
               for din, dout in zip(layer_sizes[:-1], layer_sizes[1:]))


@dataclass(slots=True, eq=False)
class PolicyParams:
    """Flat float32 parameter vector for a tanh MLP with the given sizes
    (input ... hidden ... output=2). Layout: per layer, W row-major then b."""

    layer_sizes: tuple[int, ...]
    flat_params: np.ndarray
    activation: str = ACTIVATION
    _layers: list | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        expected = param_count(self.layer_sizes)
        self.flat_params = np.asarray(self.flat_params, dtype=np.float32)
        if self.flat_params.shape != (expected,):
            raise ValueError(
                f"flat_params has {self.flat_params.size} values, "
                f"layer sizes {self.layer_sizes} need {expected}"
            )
        if not np.all(np.isfinite(self.flat_params)):
            raise ValueError("flat_params contains non-finite values")
        if self.activation != ACTIVATION:
            raise ValueError(f"unsupported activation {self.activation!r}")

    def layers(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """(W, b) pairs upcast to float64, cached per params object."""
        if self._layers is None:
            self._layers = []
            flat = self.flat_params.astype(np.float64)
            i = 0
            for din, dout in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
                w = flat[i:i + din * dout].reshape(dout, din)
                i += din * dout
                b = flat[i:i + dout]
                i += dout
                self._layers.append((w, b))
        return self._layers


def zero_params(layer_sizes: tuple[int, ...]) -> PolicyParams:
    return PolicyParams(tuple(layer_sizes),
                        np.zeros(param_count(tuple(layer_sizes)), np.float32))


def policy_forward(params: PolicyParams, obs: np.ndarray) -> np.ndarray:
    """Deterministic forward pass; every layer is tanh, so outputs lie in
    [-1, 1]^2."""
    if obs.shape != (params.layer_sizes[0],):
        raise ValueError(
            f"observation length {obs.shape} does not match input layer "
            f"{params.layer_sizes[0]}"
        )
    x = obs * OBS_SCALE
    for w, b in params.layers():
        x = np.tanh(w @ x + b)
    return x


# -- checkpoints -------------------------------------------------------------


def save_checkpoint(params: PolicyParams, path: str | Path,
                    config_hash: str = "", seed: int = 0) -> None:
    doc = {
        "layer_sizes": list(params.layer_sizes),
        "activation": params.activation,
        "config_hash": config_hash,
        "seed": int(seed),
        "params_b64": base64.b64encode(
            params.flat_params.astype("<f4").tobytes()).decode("ascii"),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_checkpoint(path: str | Path) -> tuple[PolicyParams, dict]:
    from .config import ConfigError

    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        raw = base64.b64decode(doc["params_b64"])
        flat = np.frombuffer(raw, dtype="<f4").copy()
        params = PolicyParams(tuple(doc["layer_sizes"]), flat,
                              activation=doc.get("activation", ACTIVATION))
    except (KeyError, ValueError) as e:
        raise ConfigError(f"invalid checkpoint {path}: {e}") from e
    meta = {"config_hash": doc.get("config_hash", ""), "seed": doc.get("seed", 0)}
    return params, meta


# -- the three policy kinds --------------------------------------------------


@dataclass(slots=True)
class BaselineGains:
    gain_f: float = 1.0
    k_turn: float = 2.0
    w_de: float = 0.5
    w_dc: float = 0.5


def sffm_baseline_policy(robot: AgentState, breakdown: ForceBreakdown,
                         gains: BaselineGains = BaselineGains()) -> Action:
    """Robot directly controlled by the conversation field: thrust along the
    heading proportional to the force component, turn toward the blend of the
    orientation vectors."""
    f = breakdown.combined
    a_fwd = max(-1.0, min(1.0, gains.gain_f * f.dot(robot.heading_unit())))
    blend = (gains.w_de * breakdown.d_e.normalized()
             + gains.w_dc * breakdown.d_c.normalized())
    if blend.norm() <= 1e-9:
        a_turn = 0.0
    else:
        err = wrap_angle(blend.heading() - robot.heading)
        a_turn = max(-1.0, min(1.0, gains.k_turn * err))
    return Action(a_fwd, a_turn)


class NetworkPolicy:
    """Deterministic policy backed by PolicyParams."""

    def __init__(self, params: PolicyParams):
        self.params = params

    def begin_episode(self, seed) -> None:
        pass

    def act(self, obs: np.ndarray, env: ApproachEnv) -> Action:
        out = policy_forward(self.params, obs)
        return Action(float(out[0]), float(out[1]))


class SffmPolicy:
    """The force-field baseline, recomputing the robot's field each tick."""

    def __init__(self, gains: BaselineGains | None = None):
        self.gains = gains if gains is not None else BaselineGains()

    def begin_episode(self, seed) -> None:
        pass

    def act(self, obs: np.ndarray, env: ApproachEnv) -> Action:
        robot = env.robot
        bd = combined_force(robot, env.shas, env.prox, env.ospace)
        return sffm_baseline_policy(robot, bd, self.gains)


RANDOM_POLICY_STREAM = 0x5EED


class RandomPolicy:
    """Uniform actions in [-1, 1]^2, seeded per episode."""

    def __init__(self):
        self._rng = None

    def begin_episode(self, seed) -> None:
        material = list(seed) if isinstance(seed, (list, tuple)) else [seed]
        self._rng = np.random.default_rng([RANDOM_POLICY_STREAM] + [int(s) for s in material])

    def act(self, obs: np.ndarray, env: ApproachEnv) -> Action:
        return Action(float(self._rng.uniform(-1.0, 1.0)),
                      float(self._rng.uniform(-1.0, 1.0)))


def make_policy(spec: str):
    """Resolve a CLI policy spec: 'sffm', 'random', or a checkpoint path."""
    if spec == "sffm":
        return SffmPolicy()
    if spec == "random":
        return RandomPolicy()
    params, _ = load_checkpoint(spec)
    return NetworkPolicy(params)
