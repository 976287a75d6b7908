import math

import pytest

from conftest import run_group, step_group_once
from ssbl.forces import estimate_ospace, partition_neighbors, repulsion_force
from ssbl.geometry import AgentState, Role, Vec2, WorldConfig
from ssbl.groups import (GroupSpawnSpec, SpawnError, sha_policy,
                         spawn_episode)


def sha(i, x, y, heading=0.0):
    return AgentState(id=i, role=Role.SHA, position=Vec2(x, y),
                      velocity=Vec2(0.0, 0.0), heading=heading)


def robot(x, y):
    return AgentState(id=0, role=Role.ROBOT, position=Vec2(x, y),
                      velocity=Vec2(0.0, 0.0), heading=0.0)


def settled_dyad():
    a = sha(1, 4.0, 5.0, heading=0.0)
    b = sha(2, 6.0, 5.0, heading=math.pi)
    return [a, b]


# -- sha_policy ---------------------------------------------------------------


def test_stable_dyad_rests_under_deadband(world, prox):
    agents = settled_dyad()
    ospace = estimate_ospace(agents, prox.s_min)
    for a in agents:
        accel, turn = sha_policy(a, agents, prox, ospace, world)
        assert accel == Vec2(0.0, 0.0)
        assert turn == 0.0  # already facing each other


def test_dyad_headings_converge_to_facing(world, prox):
    agents = [sha(1, 4.0, 5.0, heading=2.0), sha(2, 6.0, 5.0, heading=-1.0)]
    states = run_group(agents, prox, world, 120)[-1]
    assert abs(states[0].heading - 0.0) < 1e-6
    assert abs(abs(states[1].heading) - math.pi) < 1e-6


def test_intruding_robot_pushes_sha_away(world, prox):
    agents = settled_dyad() + [robot(4.6, 5.0)]  # 0.6 m from SHA 1
    a = agents[0]
    ospace = estimate_ospace(agents[:2], prox.s_min)
    accel, _ = sha_policy(a, agents, prox, ospace, world)
    part = partition_neighbors(a, agents[1:], prox)
    f_r = repulsion_force(a, part, prox)
    assert f_r.norm() > 0.0
    assert accel.dot(f_r) > 0.0  # acceleration has a component along repulsion


def test_no_orientation_target_holds_heading(world, prox):
    lonely = sha(1, 5.0, 5.0, heading=0.7)
    ospace = estimate_ospace([lonely, sha(2, 5.0, 14.0)], prox.s_min)
    # the other agent is outside every zone: d_e = d_c = 0
    accel, turn = sha_policy(lonely, [lonely, sha(2, 5.0, 14.0)], prox,
                             ospace, WorldConfig(floor_side=20.0))
    assert turn == 0.0
    assert accel == Vec2(0.0, 0.0)


def test_sha_policy_rejects_robot(world, prox):
    with pytest.raises(ValueError):
        sha_policy(robot(1, 1), [robot(1, 1)], prox,
                   estimate_ospace(settled_dyad()), world)


# -- group dynamics invariants --------------------------------------------------


def test_dyad_reaches_quasi_static_state(world, prox):
    spec = GroupSpawnSpec()
    for seed in range(10):
        agents = spawn_episode(
            GroupSpawnSpec(rng_seed=seed), world)[1:]  # SHAs only
        traj = run_group(agents, prox, world, 200)
        moved = [max((b.position - a.position).norm()
                     for a, b in zip(traj[i], traj[i + 1]))
                 for i in range(len(traj) - 1)]
        settle = next((i for i, m in enumerate(moved) if m < 1e-3), None)
        assert settle is not None and settle <= 200
        final = traj[-1]
        dist = (final[0].position - final[1].position).norm()
        assert prox.d_personal <= dist <= prox.d_social


def test_close_dyad_separates_to_personal_distance(world, prox):
    agents = [sha(1, 4.6, 5.0, heading=0.0), sha(2, 5.4, 5.0, heading=math.pi)]
    final = run_group(agents, prox, world, 300)[-1]
    dist = (final[0].position - final[1].position).norm()
    assert prox.d_personal <= dist <= prox.d_social


def test_robot_intrusion_raises_sha_speed_within_5_steps(world, prox):
    agents = run_group(settled_dyad(), prox, world, 50)[-1]
    assert max(a.speed() for a in agents) < 1e-6
    intruded = agents + [robot(agents[0].position.x + 0.6, agents[0].position.y)]
    speed0 = intruded[0].speed()
    speeds = []
    states = intruded
    for _ in range(5):
        states = step_group_once(states, prox, world)
        speeds.append(states[0].speed())
    assert max(speeds) > speed0


# -- spawning -------------------------------------------------------------------


def test_spawn_shas_face_each_other(world):
    agents = spawn_episode(GroupSpawnSpec(separation=2.0, rng_seed=42), world)
    s1, s2 = agents[1], agents[2]
    assert abs((s1.position - s2.position).norm() - 2.0) < 1e-12
    for me, other in ((s1, s2), (s2, s1)):
        facing = (other.position - me.position).heading()
        assert abs(facing - me.heading) < 1e-9


def test_spawn_robot_distance_constraint(world):
    for seed in range(50):
        agents = spawn_episode(GroupSpawnSpec(rng_seed=seed), world)
        centroid = estimate_ospace(agents[1:]).center
        d = (agents[0].position - centroid).norm()
        assert d >= GroupSpawnSpec().robot_min_dist
        for a in agents:
            assert 0.0 <= a.position.x <= world.floor_side
            assert 0.0 <= a.position.y <= world.floor_side


def test_spawn_is_deterministic(world):
    a = spawn_episode(GroupSpawnSpec(rng_seed=7), world)
    b = spawn_episode(GroupSpawnSpec(rng_seed=7), world)
    assert a == b
    c = spawn_episode(GroupSpawnSpec(rng_seed=8), world)
    assert a != c


def test_spawn_error_when_robot_cannot_fit():
    tiny = WorldConfig(floor_side=9.0)
    spec = GroupSpawnSpec(robot_min_dist=12.0)
    with pytest.raises(SpawnError):
        spawn_episode(spec, tiny)


def test_spawn_spec_validation(world, prox):
    with pytest.raises(ValueError):
        GroupSpawnSpec(n_shas=1).validate(world, prox)
    with pytest.raises(ValueError):
        GroupSpawnSpec(robot_min_dist=2.0).validate(world, prox)
    with pytest.raises(ValueError):
        GroupSpawnSpec(center_region=4.5).validate(world, prox)
    GroupSpawnSpec().validate(world, prox)


def test_spawn_three_shas_regular_polygon(world):
    agents = spawn_episode(GroupSpawnSpec(n_shas=3, separation=2.0, rng_seed=3), world)
    assert len(agents) == 4
    centroid = estimate_ospace(agents[1:]).center
    for a in agents[1:]:
        assert abs((a.position - centroid).norm() - 1.0) < 1e-9
