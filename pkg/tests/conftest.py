"""Shared helpers for stepping SHA-only groups outside the full environment."""

from __future__ import annotations

import pytest

from ssbl.forces import estimate_ospace
from ssbl.geometry import Role, WorldConfig, ProxemicsConfig, integrate
from ssbl.groups import DEFAULT_GAINS, sha_policy


def step_group_once(agents, prox, world, gains=DEFAULT_GAINS):
    """One tick for the SHAs; non-SHA agents stay frozen in place."""
    shas = [a for a in agents if a.role is Role.SHA]
    ospace = estimate_ospace(shas, prox.s_min)
    commands = {}
    for a in agents:
        if a.role is Role.SHA:
            commands[a.id] = sha_policy(a, agents, prox, ospace, world, gains)
    out = []
    for a in agents:
        if a.role is Role.SHA:
            acc, tr = commands[a.id]
            out.append(integrate(a, acc, tr, world))
        else:
            out.append(a)
    return out


def run_group(agents, prox, world, steps, gains=DEFAULT_GAINS):
    """Step the group `steps` times, returning the trajectory of states."""
    traj = [agents]
    for _ in range(steps):
        agents = step_group_once(agents, prox, world, gains)
        traj.append(agents)
    return traj


@pytest.fixture
def world():
    return WorldConfig()


@pytest.fixture
def prox():
    return ProxemicsConfig()
