"""Model-free planning by dead reckoning: explore, certify, solve, execute."""
from __future__ import annotations

import heapq
import logging
import time
from dataclasses import dataclass, field

from .automaton import DeterminismVerdict, MarkovAutomaton, from_graph, is_deterministic
from .core import BiomapError, DetPomdpEnv, NotCheckpointable, TabularMDP, Trajectory, append_history
from .vecgraph import CompactVectorGraph, GraphEdge, Vector, vadd

log = logging.getLogger(__name__)


class NegativeCycle(BiomapError):
    pass


class GoalUnreachable(BiomapError):
    pass


class PolicyGap(BiomapError):
    pass


class NotDeterministic(BiomapError):
    pass


class NondeterministicEnvironment(BiomapError):
    def __init__(self, verdict: DeterminismVerdict, graph: CompactVectorGraph | None = None):
        super().__init__(f"{len(verdict.witnesses)} determinism violation(s)")
        self.verdict = verdict
        self.graph = graph


class BudgetExhausted(BiomapError):
    def __init__(self, graph: CompactVectorGraph):
        super().__init__(f"exploration budget spent with phi={graph.phi}")
        self.graph = graph


@dataclass(frozen=True)
class ArbiterParams:
    delta: int = 3

    def __post_init__(self):
        if self.delta < 2:
            raise ValueError("tolerance delta must be >= 2")


@dataclass(frozen=True)
class BiomapBudget:
    max_episodes: int = 60
    max_steps: int = 50

    def __post_init__(self):
        if self.max_episodes < 1 or self.max_steps < 1:
            raise ValueError("budgets must be positive")


@dataclass
class ExplorationLog:
    episodes: int = 0
    steps: int = 0
    arbiter_calls: int = 0
    boundaries: int = 0
    trajectories: list[Trajectory] = field(default_factory=list)
    paths: list[list[Vector]] = field(default_factory=list)


@dataclass
class Policy:
    path: list[Vector]
    action_at: dict[Vector, int]

    def to_json(self, action_names=None) -> list[dict]:
        name = (lambda a: action_names[a]) if action_names else (lambda a: a)  # noqa: E731
        return [{"vertex": list(v), "action": name(self.action_at[v])} for v in self.path[:-1]]

    @property
    def actions(self) -> list[int]:
        return [self.action_at[v] for v in self.path[:-1]]


@dataclass
class RecoveredMDP(TabularMDP):
    unit_vectors: tuple = ()
    action_names: tuple = ()

    def to_json(self) -> dict:
        return {
            "states": [list(s) for s in self.states],
            "actions": list(self.actions),
            "action_names": list(self.action_names),
            "unit_vectors": [list(u) for u in self.unit_vectors],
            "start": list(self.start),
            "terminals": sorted(list(s) for s in self.terminals),
            "goals": sorted(list(s) for s in self.goals),
            "transitions": [
                {"state": list(s), "action": a, "next": list(n), "reward": self.rewards[(s, a)]}
                for (s, a), n in sorted(self.transitions.items())
            ],
        }


@dataclass
class BiomapResult:
    policy: Policy
    mdp: RecoveredMDP
    verdict: DeterminismVerdict
    graph: CompactVectorGraph
    automaton: MarkovAutomaton
    metrics: dict


# -- boundary arbiter -----------------------------------------------------

def _probe(env: DetPomdpEnv) -> list[int]:
    here = env.checkpoint()
    sig = []
    for aj in range(env.action_count):
        sig.append(env.step(aj).observation)
        env.restore(here)
    return sig


def boundary_arbiter(env: DetPomdpEnv, g: CompactVectorGraph, o: int, v: Vector, a: int,
                     params: ArbiterParams = ArbiterParams()) -> bool:
    """Decide whether action ``a`` at the env's current cell is a true boundary.

    The env must sit at the cell whose observation is ``o`` and whose action
    vector is ``v``. Every action is probed once from there; then ``a`` is
    re-applied ``delta - 1`` times, each time requiring the observation to
    stay ``o`` and the one-step probe signature to stay unchanged. On success
    the self-loop ``(v, a, v)`` is added to ``g``. The env is returned to
    where it started either way.
    """
    if not env.checkpointable:
        raise NotCheckpointable(type(env).__name__)
    home = env.checkpoint()
    try:
        reference = _probe(env)
        weight = None
        for _ in range(2, params.delta + 1):
            out = env.step(a)
            if weight is None:
                weight = out.reward
            if out.observation != o or out.terminal:
                return False
            if _probe(env) != reference:
                return False
        g.add_step(v, a, weight, loop=True)
        return True
    finally:
        env.restore(home)


# -- exploration ----------------------------------------------------------

def explore(env: DetPomdpEnv, budget: BiomapBudget = BiomapBudget(),
            params: ArbiterParams = ArbiterParams(), log_to: ExplorationLog | None = None
            ) -> CompactVectorGraph:
    """Build the compact vector graph by dead reckoning.

    Runs episodes while ``phi > 0`` and fewer than ``max_episodes`` have
    started. Within an episode the step budget ``max_steps`` is charged with
    every env step, arbiter probes included.
    """
    if not env.checkpointable:
        raise NotCheckpointable(type(env).__name__)
    g = CompactVectorGraph.for_env(env)
    rec = log_to if log_to is not None else ExplorationLog()
    start_steps = env.total_steps
    n = 0
    while n < budget.max_episodes and (n == 0 or g.phi > 0):
        o = env.reset()
        n += 1
        v = g.origin
        g.insert_vertex(v)
        traj = Trajectory.start(o)
        path = [v]
        episode_start = env.total_steps
        while env.total_steps - episode_start < budget.max_steps:
            untaken = g.untaken_actions(v)
            if untaken:
                a, fresh = min(untaken), True
            else:
                route = g.route_to_frontier(v)
                if not route:
                    break
                a, fresh = route[0], False
            before = env.checkpoint()
            out = env.step(a)
            if fresh and out.observation == o and not out.terminal:
                after = env.checkpoint()
                env.restore(before)
                rec.arbiter_calls += 1
                if boundary_arbiter(env, g, o, v, a, params):
                    rec.boundaries += 1
                    append_history(traj, a, out)
                    path.append(v)
                    continue
                env.restore(after)
            v = g.add_step(v, a, out.reward, terminal=out.terminal,
                           goal=out.terminal and not out.failure)
            o = out.observation
            append_history(traj, a, out)
            path.append(v)
            if out.terminal:
                break
        rec.trajectories.append(traj)
        rec.paths.append(path)
    rec.episodes = n
    rec.steps = env.total_steps - start_steps
    return g


# -- weight transform and shortest path ------------------------------------

def transform_weights(g: CompactVectorGraph) -> CompactVectorGraph:
    """Shift all weights to be non-negative, then reverse their order (max - w)."""
    if not g.edges:
        raise GoalUnreachable("graph has no edges")
    lo = min(e.weight for e in g.edges)
    shift = abs(lo) if lo < 0 else 0.0
    hi = max(e.weight for e in g.edges) + shift
    out = g.map_weights(lambda w: hi - (w + shift))
    if has_negative_cycle(out):
        raise NegativeCycle("negative self-loop or cycle after weight transform")
    return out


def has_negative_cycle(g: CompactVectorGraph) -> bool:
    if any(e.weight < 0 and e.is_loop for e in g.edges):
        return True
    dist = {v: 0.0 for v in g.vertices}
    for _ in range(len(g.vertices)):
        changed = False
        for e in g.edges:
            if dist[e.src] + e.weight < dist[e.dst]:
                dist[e.dst] = dist[e.src] + e.weight
                changed = True
        if not changed:
            return False
    return True


def dijkstra(g: CompactVectorGraph, source: Vector) -> tuple[dict, dict]:
    """Distances and predecessors from ``source``; terminals are not expanded."""
    dist = {source: 0.0}
    pred: dict[Vector, Vector] = {}
    done = set()
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if g.vertices[u].terminal:
            continue
        for e in g.edges_from(u):
            if e.is_loop:
                continue
            nd = d + e.weight
            if nd < dist.get(e.dst, float("inf")):
                dist[e.dst] = nd
                pred[e.dst] = u
                heapq.heappush(heap, (nd, e.dst))
    return dist, pred


def solve_policy(gt: CompactVectorGraph) -> Policy:
    """Dijkstra from the origin to the cheapest goal vertex of a transformed graph.

    Between consecutive path vertices the lowest-weight edge is used; ties
    go to the smaller action id. Cliff-type terminals are never targets.
    """
    if any(e.weight < 0 for e in gt.edges):
        raise NegativeCycle("solve_policy needs non-negative weights")
    origin = gt.origin
    goals = gt.goals
    if origin in goals:
        return Policy([origin], {})
    if not goals:
        raise GoalUnreachable("no goal vertex was discovered")
    dist, pred = dijkstra(gt, origin)
    reached = [v for v in goals if v in dist]
    if not reached:
        raise GoalUnreachable("no path from the origin to a goal")
    target = min(reached, key=lambda v: (dist[v], v))
    path = [target]
    while path[-1] != origin:
        path.append(pred[path[-1]])
    path.reverse()
    action_at = {}
    for u, w in zip(path, path[1:]):
        best = min((e for e in gt.edges_from(u) if e.dst == w), key=lambda e: (e.weight, e.action))
        action_at[u] = best.action
    return Policy(path, action_at)


# -- recovery ---------------------------------------------------------------

def recover_mdp(g: CompactVectorGraph, verdict: DeterminismVerdict) -> RecoveredMDP:
    if not verdict.deterministic:
        raise NotDeterministic("cannot recover an MDP from a nondeterministic graph")
    transitions, rewards = {}, {}
    for e in g.edges:
        transitions[(e.src, e.action)] = e.dst
        rewards[(e.src, e.action)] = e.weight
    return RecoveredMDP(
        states=sorted(g.vertices),
        actions=list(range(g.action_count)),
        transitions=transitions,
        rewards=rewards,
        start=g.origin,
        terminals=set(g.terminals),
        goals=set(g.goals),
        unit_vectors=g.unit_vectors,
        action_names=g.action_names,
    )


def graph_from_mdp(mdp: RecoveredMDP) -> CompactVectorGraph:
    g = CompactVectorGraph(mdp.unit_vectors, mdp.action_names)
    for s in mdp.states:
        g.insert_vertex(s, terminal=s in mdp.terminals, goal=s in mdp.goals)
    for (s, a), nxt in sorted(mdp.transitions.items()):
        g.insert_edge(GraphEdge(s, nxt, a, mdp.rewards[(s, a)], g.unit_vectors[a]))
    return g


# -- end to end -------------------------------------------------------------

def complexity_terms(budget: BiomapBudget, params: ArbiterParams, action_count: int,
                     n_vertices: int, n_edges: int) -> dict:
    explore_term = budget.max_episodes * budget.max_steps * params.delta * action_count
    return {
        "explore": explore_term,
        "vertices_squared": n_vertices ** 2,
        "edges": n_edges,
        "total": explore_term + n_vertices ** 2 + n_edges,
    }


def run_biomap(env: DetPomdpEnv, budget: BiomapBudget = BiomapBudget(),
               params: ArbiterParams = ArbiterParams(),
               log_to: ExplorationLog | None = None) -> BiomapResult:
    t0 = time.perf_counter()
    rec = log_to if log_to is not None else ExplorationLog()
    g = explore(env, budget, params, rec)
    m = from_graph(g)
    verdict = is_deterministic(m, g)
    if not verdict.deterministic:
        raise NondeterministicEnvironment(verdict, g)
    if g.phi > 0:
        raise BudgetExhausted(g)
    policy = solve_policy(transform_weights(g))
    mdp = recover_mdp(g, verdict)
    metrics = {
        "episodes": rec.episodes,
        "steps": rec.steps,
        "arbiter_calls": rec.arbiter_calls,
        "boundaries": rec.boundaries,
        "vertices": len(g.vertices),
        "edges": len(g.edges),
        "wall_time": time.perf_counter() - t0,
        "complexity": complexity_terms(budget, params, env.action_count, len(g.vertices), len(g.edges)),
    }
    log.debug("biomap finished: %s", metrics)
    return BiomapResult(policy, mdp, verdict, g, m, metrics)


def execute_policy(env: DetPomdpEnv, pol: Policy, step_cap: int | None = None) -> Trajectory:
    """Follow ``pol`` by path integration alone; observations are recorded, never read."""
    traj = Trajectory.start(env.reset())
    v = pol.path[0]
    goal = pol.path[-1]
    while v != goal:
        if step_cap is not None and len(traj) >= step_cap:
            break
        if v not in pol.action_at:
            raise PolicyGap(f"no action for vertex {v}")
        a = pol.action_at[v]
        out = env.step(a)
        append_history(traj, a, out)
        v = vadd(v, env.unit_vectors[a])
        if out.terminal:
            break
    return traj
