import itertools

import pytest
from conftest import TEN_CELL_MASK

from biomap.analysis import value_iteration
from biomap.envs import (GRID_ACTION_NAMES, GRID_UNIT_VECTORS, LEFT, OPTIMAL_ACTIONS, RIGHT, UP,
                         MaskConfig, MaskedCliffWalking, NoisyLineEnv, SingleStateEnv,
                         aliased_probe_env, reachable_positions)
from biomap.planner import (ArbiterParams, BiomapBudget, BudgetExhausted, ExplorationLog,
                            GoalUnreachable, NegativeCycle, NondeterministicEnvironment,
                            NotDeterministic, Policy, boundary_arbiter, execute_policy, explore,
                            graph_from_mdp, recover_mdp, run_biomap, solve_policy, transform_weights)
from biomap.automaton import DeterminismVerdict
from biomap.vecgraph import CompactVectorGraph


def graph():
    g = CompactVectorGraph(GRID_UNIT_VECTORS, GRID_ACTION_NAMES)
    g.insert_vertex(g.origin)
    return g


def env_at(env, cell):
    env.reset()
    env._state = cell
    return env


def test_arbiter_wall_at_start():
    env, g = env_at(MaskedCliffWalking(), 36), graph()
    assert boundary_arbiter(env, g, 36, g.origin, LEFT, ArbiterParams(3))
    [e] = g.edges
    assert e.is_loop and e.action == LEFT and e.weight == -1.0
    assert env.position == 36 and not env.done


def test_arbiter_rejects_real_move():
    env, g = env_at(MaskedCliffWalking(), 25), graph()
    assert not boundary_arbiter(env, g, 25, g.origin, RIGHT)
    assert g.edges == [] and env.position == 25


def test_arbiter_aliasing_defence():
    env, g = env_at(aliased_probe_env(), 2), graph()
    assert env.step(RIGHT).observation == 2  # looks like a self-loop
    env._state = 2
    assert not boundary_arbiter(env, g, 2, g.origin, RIGHT)


def test_arbiter_delta_validation():
    with pytest.raises(ValueError):
        ArbiterParams(1)


def test_full_exploration(cliff_run):
    res, log, _ = cliff_run
    assert res.graph.phi == 0
    assert len(res.graph.vertices) == len(reachable_positions(MaskedCliffWalking())) == 48
    assert log.episodes <= 60 and log.boundaries > 0


def test_single_state_env():
    log = ExplorationLog()
    g = explore(SingleStateEnv(), BiomapBudget(), ArbiterParams(), log)
    assert list(g.vertices) == [g.origin]
    assert len(g.edges) == 4 and all(e.is_loop for e in g.edges)
    assert g.phi == 0 and log.episodes == 1


def test_masking_invisible_to_exploration(cliff_run, ten_cell_run):
    assert cliff_run[0].graph == ten_cell_run[0].graph


def test_blind_spot_configs_reach_goal_with_different_graph(cliff_run):
    # these settings fool the one-step-probe boundary test: the graph loses
    # edges but the shortest path survives
    for cfg in [MaskConfig("column", 3, True, 3), MaskConfig("row", 5, True, 3)]:
        res = run_biomap(MaskedCliffWalking(cfg))
        assert res.graph != cliff_run[0].graph
        assert execute_policy(MaskedCliffWalking(cfg), res.policy).total_reward == -2.0


@pytest.mark.parametrize("weights,expected", [
    ([-1.0, -100.0, 10.0], [11.0, 110.0, 0.0]),
    ([-4.0, -4.0, -4.0], [0.0, 0.0, 0.0]),
    ([0.0, 5.0], [5.0, 0.0]),
])
def test_transform_weights(weights, expected):
    g = graph()
    for a, w in enumerate(weights):
        g.add_step(g.origin, a, w)
    assert [e.weight for e in transform_weights(g).edges] == expected


def test_transform_empty_graph():
    with pytest.raises(GoalUnreachable):
        transform_weights(graph())


def test_solve_cliff(cliff_run):
    res, _, _ = cliff_run
    assert res.policy.actions == list(OPTIMAL_ACTIONS)
    assert res.mdp.rollout(res.policy.actions)[1] == -2.0


def test_origin_is_goal():
    g = CompactVectorGraph(GRID_UNIT_VECTORS)
    g.insert_vertex(g.origin, goal=True)
    pol = solve_policy(g)
    assert pol.path == [g.origin] and pol.action_at == {}
    assert len(execute_policy(MaskedCliffWalking(), pol)) == 0


def test_negative_weights_rejected():
    g = graph()
    g.add_step(g.origin, RIGHT, -1.0, goal=True)
    with pytest.raises(NegativeCycle):
        solve_policy(g)


def test_no_goal():
    g = graph()
    g.add_step(g.origin, RIGHT, -100.0, terminal=True)
    with pytest.raises(GoalUnreachable):
        solve_policy(transform_weights(g))


def diamond():
    # (0,0) -> (1,0) -> (1,1) goal, and (0,0) -> (0,1) -> (1,1)
    g = graph()
    g.add_step((0, 0), RIGHT, -1.0)
    g.add_step((0, 0), UP, -3.0)
    g.add_step((1, 0), UP, 2.0, goal=True)
    g.add_step((0, 1), RIGHT, 9.0, goal=True)
    g.add_step((1, 0), RIGHT, -1.0)
    g.add_step((2, 0), UP, -1.0)
    return g


def test_diamond_against_enumeration():
    gt = transform_weights(diamond())
    goals = gt.goals
    best = None
    # all simple paths from the origin, enumerated by brute force
    verts = sorted(gt.vertices)
    for k in range(1, len(verts)):
        for mid in itertools.permutations([v for v in verts if v != gt.origin], k):
            path = (gt.origin,) + mid
            if path[-1] not in goals or any(v in goals for v in path[:-1]):
                continue
            hops = [[e.weight for e in gt.edges_from(u) if e.dst == w] for u, w in zip(path, path[1:])]
            if all(hops):
                cost = sum(min(h) for h in hops)
                best = cost if best is None else min(best, cost)
    pol = solve_policy(gt)
    got = sum(min(e.weight for e in gt.edges_from(u) if e.dst == w) for u, w in zip(pol.path, pol.path[1:]))
    assert got == best
    assert pol.path == [(0, 0), (0, 1), (1, 1)]


def test_run_biomap_all_sweep_configs_deterministic(sweep_cfg):
    for s in sweep_cfg.settings[:20]:
        res = run_biomap(MaskedCliffWalking(s.mask))
        assert res.verdict.deterministic
        assert execute_policy(MaskedCliffWalking(s.mask), res.policy).total_reward == -2.0


def test_nondeterministic_env_raises():
    with pytest.raises(NondeterministicEnvironment) as info:
        run_biomap(NoisyLineEnv(0))
    assert info.value.verdict.weight_witnesses and info.value.graph is not None


def test_budget_exhausted():
    with pytest.raises(BudgetExhausted) as info:
        run_biomap(MaskedCliffWalking(), BiomapBudget(2, 10))
    assert info.value.graph.phi > 0


def test_execute_policy(cliff_run):
    res, _, _ = cliff_run
    t = execute_policy(MaskedCliffWalking(TEN_CELL_MASK), res.policy)
    assert len(t) == 13 and t.total_reward == -2.0
    assert t.observations[8:] == [7, 8, 9, 10, 11, 47]


def test_execute_policy_identical_under_masks(cliff_run, sweep_cfg):
    res, _, _ = cliff_run
    ref = execute_policy(MaskedCliffWalking(), res.policy)
    for s in sweep_cfg.settings:
        t = execute_policy(MaskedCliffWalking(s.mask), res.policy)
        assert (t.actions, t.rewards) == (ref.actions, ref.rewards)


def test_recovered_mdp(cliff_run):
    res, _, _ = cliff_run
    mdp = res.mdp
    assert len(mdp.states) == 48
    q = value_iteration(mdp, 1.0)
    assert q.value(mdp.start) == -2.0
    assert graph_from_mdp(mdp) == res.graph


def test_recover_two_vertex():
    g = graph()
    g.add_step(g.origin, RIGHT, 10.0, goal=True)
    mdp = recover_mdp(g, DeterminismVerdict(True))
    assert mdp.transitions == {((0, 0), RIGHT): (1, 0)}


def test_recover_refuses_nondeterministic():
    with pytest.raises(NotDeterministic):
        recover_mdp(graph(), DeterminismVerdict(False))


def test_policy_json():
    pol = Policy([(0, 0), (0, 1)], {(0, 0): UP})
    assert pol.to_json(GRID_ACTION_NAMES) == [{"vertex": [0, 0], "action": "up"}]
    assert pol.actions == [UP]
