"""Ground-truth tooling: value iteration, aliasing variance and the QMDP baseline."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable

from .core import BiomapError, DetPomdpEnv, TabularMDP, Trajectory, append_history
from .planner import Policy, execute_policy


class NonConvergence(BiomapError):
    pass


class DegenerateBelief(BiomapError):
    pass


@dataclass
class QTable:
    q: dict
    gamma: float
    actions: list = field(default_factory=list)

    def value(self, s) -> float:
        vals = [v for (st, _), v in self.q.items() if st == s]
        return max(vals) if vals else 0.0

    def greedy(self, s) -> int:
        return max((a for a in self.actions if (s, a) in self.q), key=lambda a: (self.q[(s, a)], -a))


def value_iteration(mdp: TabularMDP, gamma: float = 1.0, tol: float = 1e-9,
                    max_iter: int = 10_000) -> QTable:
    """Bellman iteration ``Q(s,a) = R(s,a) + gamma * max_a' Q(T(s,a), a')``.

    Terminal states are absorbing with value 0, which makes ``gamma = 1``
    usable on episodic tasks whose optimal policies terminate.
    """
    if not (0.0 <= gamma <= 1.0):
        raise ValueError("gamma must lie in [0, 1]")
    if tol <= 0:
        raise ValueError("tol must be positive")
    pairs = sorted(mdp.transitions, key=repr)
    q = {k: 0.0 for k in pairs}
    avail = {s: mdp.available(s) for s in mdp.states}
    for _ in range(max_iter):
        v = {s: (max(q[(s, a)] for a in acts) if acts else 0.0) for s, acts in avail.items()}
        new = {}
        for (s, a) in pairs:
            nxt = mdp.transitions[(s, a)]
            new[(s, a)] = mdp.rewards[(s, a)] + gamma * v.get(nxt, 0.0)
        change = max((abs(new[k] - q[k]) for k in pairs), default=0.0)
        q = new
        if change < tol:
            return QTable(q, gamma, list(mdp.actions))
    raise NonConvergence(f"no convergence within {max_iter} sweeps")


# -- aliasing variance ------------------------------------------------------

@dataclass(frozen=True)
class AliasGroup:
    observation: int
    states: frozenset


@dataclass
class FogEntry:
    observation: int
    action: int
    q_values: list[float]
    mean: float
    variance: float

    def as_row(self) -> dict:
        return {"observation": self.observation, "action": self.action,
                "n": len(self.q_values), "mean": self.mean, "variance": self.variance}


@dataclass
class FogReport:
    entries: list[FogEntry]

    def to_json(self) -> list[dict]:
        return [e.as_row() | {"q_values": e.q_values} for e in self.entries]


def alias_variance(values: Iterable[float]) -> float:
    """Mean squared deviation of the true Q-values sharing one observation.

    The shared (observed) estimate cancels out of the error variance, so only
    the true values are needed.
    """
    vals = [float(x) for x in values]
    n = len(vals)
    if n == 0:
        raise ValueError("empty group")
    if min(vals) == max(vals):
        return 0.0  # exact; a rounded mean could leave a residue of ~1 ulp
    mean = math.fsum(vals) / n
    return math.fsum((-x + mean) ** 2 for x in vals) / n


def fog_variance(q: QTable, group: AliasGroup, action: int) -> FogEntry:
    states = sorted(group.states)
    vals = [q.q[(s, action)] for s in states]
    return FogEntry(group.observation, action, vals, math.fsum(vals) / len(vals), alias_variance(vals))


def alias_groups(states: Iterable[Hashable], observe: Callable[[Hashable], int]) -> list[AliasGroup]:
    by_obs: dict[int, set] = {}
    for s in states:
        by_obs.setdefault(observe(s), set()).add(s)
    return [AliasGroup(o, frozenset(ss)) for o, ss in sorted(by_obs.items()) if len(ss) > 1]


def fog_report(q: QTable, groups: Iterable[AliasGroup]) -> FogReport:
    entries = []
    for g in groups:
        for a in q.actions:
            if all((s, a) in q.q for s in g.states):
                entries.append(fog_variance(q, g, a))
    return FogReport(entries)


# -- QMDP baseline ----------------------------------------------------------

class QMDPAgent:
    """Belief tracking over hidden states with actions chosen by sum_s b(s) Q*(s, a)."""

    def __init__(self, mdp: TabularMDP, observe: Callable[[Hashable], int], qtable: QTable):
        self.mdp = mdp
        self.observe = observe
        self.qtable = qtable
        self.belief: dict = {}

    def reset(self, observation: int, belief: dict | None = None) -> dict:
        if belief is None:
            support = [s for s in self.mdp.states if self.observe(s) == observation]
            if not support:
                raise DegenerateBelief(f"no state emits observation {observation}")
            belief = {s: 1.0 / len(support) for s in support}
        self.belief = dict(belief)
        return self.belief

    def scores(self) -> dict[int, float]:
        out = {}
        for a in self.mdp.actions:
            total, ok = 0.0, False
            for s, p in self.belief.items():
                if (s, a) in self.qtable.q:
                    total += p * self.qtable.q[(s, a)]
                    ok = True
            if ok:
                out[a] = total
        return out

    def act(self) -> int:
        sc = self.scores()
        if not sc:
            raise DegenerateBelief("belief has no state with available actions")
        return max(sc, key=lambda a: (sc[a], -a))

    def update(self, action: int, observation: int) -> dict:
        new: dict = {}
        for s, p in self.belief.items():
            nxt = self.mdp.transitions.get((s, action))
            if nxt is None or self.observe(nxt) != observation:
                continue
            new[nxt] = new.get(nxt, 0.0) + p
        z = sum(new.values())
        if z <= 0:
            raise DegenerateBelief(f"observation {observation} impossible under the belief")
        self.belief = {s: p / z for s, p in new.items()}
        return self.belief


def qmdp_policy(mdp: TabularMDP, observe: Callable[[Hashable], int], gamma: float = 1.0,
                tol: float = 1e-9) -> QMDPAgent:
    return QMDPAgent(mdp, observe, value_iteration(mdp, gamma, tol))


# -- evaluation -------------------------------------------------------------

@dataclass
class RewardStats:
    rewards: list[float]
    steps: list[int]
    wall_time: float

    def to_json(self) -> dict:
        return {"rewards": self.rewards, "steps": self.steps, "wall_time": self.wall_time}


def rollout(env: DetPomdpEnv, selector, step_cap: int = 50) -> Trajectory:
    """One episode under a Policy, a belief agent or a plain ``obs -> action`` callable."""
    if isinstance(selector, Policy):
        return execute_policy(env, selector, step_cap)
    obs = env.reset()
    traj = Trajectory.start(obs)
    if hasattr(selector, "act"):
        selector.reset(obs)
    while len(traj) < step_cap:
        a = selector.act() if hasattr(selector, "act") else selector(obs)
        out = env.step(a)
        append_history(traj, a, out)
        if out.terminal:
            break
        obs = out.observation
        if hasattr(selector, "update"):
            selector.update(a, obs)
    return traj


def evaluate_policy(env: DetPomdpEnv, selector, episodes: int = 1, step_cap: int = 50) -> RewardStats:
    t0 = time.perf_counter()
    rewards, steps = [], []
    for _ in range(episodes):
        traj = rollout(env, selector, step_cap)
        rewards.append(traj.total_reward)
        steps.append(len(traj))
    return RewardStats(rewards, steps, time.perf_counter() - t0)
