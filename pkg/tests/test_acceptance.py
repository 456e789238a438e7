"""Acceptance criteria for the package, one test per criterion.

Each test appends a PASS/FAIL line that is printed in the terminal summary
(run ``pytest tests/test_acceptance.py -v``).
"""
import itertools
import random
import statistics

import pytest
from conftest import record_acceptance

from biomap.analysis import AliasGroup, QTable, fog_variance
from biomap.automaton import MarkovAutomaton, determinize, from_graph, is_deterministic, recognizes
from biomap.envs import OPTIMAL_PATH, MaskConfig, MaskedCliffWalking, NoisyLineEnv, ROWS, COLS
from biomap.planner import (ArbiterParams, BiomapBudget, ExplorationLog, GoalUnreachable,
                            NondeterministicEnvironment, execute_policy, explore, graph_from_mdp,
                            recover_mdp, run_biomap, solve_policy, transform_weights)
from biomap.vecgraph import CompactVectorGraph, vadd

UNITS = ((0, 1), (1, 0), (0, -1), (-1, 0))


def report(name, ok, detail=""):
    record_acceptance(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}".rstrip())
    assert ok, f"{name}: {detail}"


def grid_of(v):
    # origin (0, 0) is grid 36, the bottom-left cell
    x, y = v
    return (ROWS - 1 - y) * COLS + x


def test_benchmark_optimum(biomap_sweep):
    recs, elapsed = biomap_sweep
    bad = [r for r in recs if r.error or r.rewards != [-2.0] or r.variance != 0.0]
    ok = len(recs) == 84 and not bad and elapsed < 30
    report("benchmark optimum", ok,
           f"{len(recs)} settings, {len(bad)} off -2, {elapsed:.1f}s")


def test_baseline_parity(qmdp_sweep):
    recs, elapsed = qmdp_sweep
    rewards = [x for r in recs for x in r.rewards]
    ok = len(recs) == 84 and not any(r.error for r in recs) and statistics.fmean(rewards) == -2.0 \
        and elapsed < 10
    report("baseline parity", ok, f"mean {statistics.fmean(rewards):g}, {elapsed:.1f}s")


def test_optimal_path_identity(cliff_run):
    res, _, _ = cliff_run
    cells = tuple(grid_of(v) for v in res.policy.path)
    report("optimal path identity", cells == OPTIMAL_PATH, str(cells))


def _trajectory_key(res, mask):
    traj = execute_policy(MaskedCliffWalking(mask), res.policy)
    return traj.actions, traj.rewards, res.policy.path


def test_masking_invariance(sweep_cfg, cliff_run):
    control, _, _ = cliff_run
    ref = (control.graph.to_dict(), control.verdict.to_json(), control.policy.to_json(),
           _trajectory_key(control, MaskConfig()))
    mismatched = []
    for s in sweep_cfg.settings:
        res = run_biomap(MaskedCliffWalking(s.mask))
        got = (res.graph.to_dict(), res.verdict.to_json(), res.policy.to_json(),
               _trajectory_key(res, s.mask))
        if got != ref:
            mismatched.append(s.mask)
    report("masking invariance", not mismatched,
           f"{len(sweep_cfg.settings)} settings vs layers=0 control, {len(mismatched)} differ")


def test_determinism_detection(biomap_sweep):
    caught = 0
    for seed in range(100):
        try:
            run_biomap(NoisyLineEnv(seed))
        except NondeterministicEnvironment as exc:
            caught += (not exc.verdict.deterministic) and len(exc.verdict.witnesses) >= 1
    recs, _ = biomap_sweep
    masked_ok = all(r.deterministic is True for r in recs)
    report("determinism detection", caught == 100 and masked_ok,
           f"noisy env flagged {caught}/100, masked runs deterministic={masked_ok}")


def test_alias_variance_oracle():
    rng = random.Random(7)
    worst = 0.0
    for _ in range(1000):
        n = rng.randint(2, 20)
        vals = [rng.uniform(-200, 50) for _ in range(n)]
        states = list(range(n))
        q = QTable({(s, 0): v for s, v in zip(states, vals)}, 1.0, [0])
        got = fog_variance(q, AliasGroup(0, frozenset(states)), 0).variance
        mean = sum(vals) / n
        want = sum((x - mean) ** 2 for x in vals) / n
        worst = max(worst, abs(got - want) / abs(want))
    constant_zero = all(
        fog_variance(QTable({(s, 0): c for s in range(k)}, 1.0, [0]),
                     AliasGroup(0, frozenset(range(k))), 0).variance == 0.0
        for c in (-2.0, 0.1, 7.3, -99.99) for k in (1, 2, 5, 13))
    report("alias variance oracle", worst <= 1e-12 and constant_zero,
           f"max rel err {worst:.2e}, constant lists exact zero={constant_zero}")


def random_det_graph(rng, size=4):
    g = CompactVectorGraph(UNITS, ("up", "right", "down", "left"))
    g.insert_vertex(g.origin)
    frontier = [g.origin]
    while frontier:
        v = frontier.pop(rng.randrange(len(frontier)))
        if g.vertices[v].terminal:
            continue
        for a, u in enumerate(UNITS):
            if rng.random() < 0.3:
                continue
            dst = vadd(v, u)
            if not all(0 <= c < size for c in dst):
                g.add_step(v, a, rng.choice((-1.0, -1.0, -5.0)), loop=True)
                continue
            if dst not in g.vertices:
                kind = rng.random()
                if kind < 0.1:
                    g.insert_vertex(dst, terminal=True)
                elif kind < 0.3:
                    g.insert_vertex(dst, goal=True)
                else:
                    g.insert_vertex(dst)
                    frontier.append(dst)
            info = g.vertices[dst]
            w = -100.0 if info.terminal and not info.goal else rng.choice((-1.0, -2.0, 10.0))
            g.add_step(v, a, w, terminal=info.terminal, goal=info.goal)
    return g


def test_dual_round_trip():
    rng = random.Random(11)
    failures = 0
    for _ in range(200):
        g = random_det_graph(rng)
        m = from_graph(g)
        verdict = is_deterministic(m, g)
        assert verdict.deterministic
        back = graph_from_mdp(recover_mdp(g, verdict))
        if from_graph(back) != m or back != g:
            failures += 1
    report("dual round trip", failures == 0, f"200 random graphs, {failures} mismatches")


def random_automaton(rng):
    n = rng.randint(1, 6)
    sigma = list(range(rng.randint(1, 3)))
    states = list(range(n))
    delta = {}
    for q in states:
        for a in sigma:
            k = rng.choice((0, 1, 1, 2, 3))
            ts = frozenset(rng.sample(states, min(k, n)))
            if ts:
                delta[(q, a)] = ts
    accepting = frozenset(q for q in states if rng.random() < 0.4)
    return MarkovAutomaton(frozenset(states), frozenset(sigma), delta, 0, accepting), sigma


def test_nfa_dfa_agreement():
    rng = random.Random(3)
    disagreements = 0
    words = 0
    for _ in range(50):
        m, sigma = random_automaton(rng)
        d = determinize(m)
        for length in range(9):
            for w in itertools.product(sigma, repeat=length):
                words += 1
                disagreements += recognizes(m, w) != recognizes(d, w)
    report("NFA/DFA agreement", disagreements == 0,
           f"50 automata, {words} words, {disagreements} disagreements")


def _simple_path_costs(g, src, goals):
    best = None

    def walk(u, seen, cost):
        nonlocal best
        if u in goals:
            best = cost if best is None else min(best, cost)
            return
        if g.vertices[u].terminal:
            return
        for e in g.edges_from(u):
            if e.is_loop or e.dst in seen:
                continue
            walk(e.dst, seen | {e.dst}, cost + e.weight)

    walk(src, {src}, 0.0)
    return best


def test_dijkstra_oracle():
    rng = random.Random(5)
    checked = mismatches = 0
    while checked < 100:
        g = random_det_graph(rng, size=3)
        if len(g.vertices) > 10:
            continue
        checked += 1
        gt = transform_weights(g)
        want = _simple_path_costs(gt, gt.origin, gt.goals)
        try:
            pol = solve_policy(gt)
        except GoalUnreachable:
            mismatches += want is not None
            continue
        if want is None:
            mismatches += 1
            continue
        cost = sum(min(e.weight for e in gt.edges_from(u) if e.dst == w)
                   for u, w in zip(pol.path, pol.path[1:]))
        mismatches += cost != want or pol.path[-1] not in gt.goals
    report("Dijkstra oracle", mismatches == 0, f"{checked} graphs, {mismatches} mismatches")


def test_budget_bound(sweep_cfg):
    envs = [MaskedCliffWalking(s.mask) for s in sweep_cfg.settings]
    envs += [NoisyLineEnv(s) for s in range(5)]
    budgets = [BiomapBudget(), BiomapBudget(5, 10), BiomapBudget(60, 8)]
    over = []
    runs = 0
    for env in envs:
        for budget in budgets:
            for delta in (2, 3, 5):
                start = env.total_steps
                log = ExplorationLog()
                explore(env, budget, ArbiterParams(delta), log)
                runs += 1
                bound = budget.max_episodes * budget.max_steps * delta * env.action_count
                if env.total_steps - start > bound:
                    over.append((env, budget, delta))
    report("budget bound", not over, f"{runs} runs, {len(over)} over N*M*delta*|A|")
