"""Masking Cliff Walking and small synthetic environments.

Board layout (index = row * 12 + col)::

     0  1  2  3  4  5  6  7  8  9 10 11
    12 13 14 15 16 17 18 19 20 21 22 23
    24 25 26 27 28 29 30 31 32 33 34 35
    36 37 38 39 40 41 42 43 44 45 46 47

36 is the start, 37..46 are cliffs, 47 is the goal.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable

from .core import BiomapError, DetPomdpEnv, TabularMDP

ROWS, COLS = 4, 12
START = 36
GOAL = 47
CLIFFS = frozenset(range(37, 47))
NORMAL = frozenset(range(0, 36))

UP, RIGHT, DOWN, LEFT = 0, 1, 2, 3
GRID_ACTION_NAMES = ("up", "right", "down", "left")
GRID_UNIT_VECTORS = ((0, 1), (1, 0), (0, -1), (-1, 0))
_MOVES = ((-1, 0), (0, 1), (1, 0), (0, -1))  # (drow, dcol) per action

STEP_REWARD = -1.0
CLIFF_REWARD = -100.0
GOAL_REWARD = 10.0
MAX_EPISODE_STEPS = 50

OPTIMAL_ACTIONS = (UP,) + (RIGHT,) * 11 + (DOWN,)
OPTIMAL_PATH = (36, 24, 25, 26, 27, 28, 29, 30, 31, 32, 33, 34, 35, 47)


class InvalidConfig(BiomapError):
    pass


@dataclass(frozen=True)
class MaskConfig:
    direction: str = "column"
    count: int = 1
    continuity: bool = True
    layers: int = 0

    def __post_init__(self):
        if self.direction not in ("row", "column"):
            raise InvalidConfig(f"direction must be 'row' or 'column', got {self.direction!r}")
        if self.count < 1:
            raise InvalidConfig("count must be positive")
        if self.layers < 0:
            raise InvalidConfig("layers must be non-negative")

    def as_dict(self) -> dict:
        return {"direction": self.direction, "count": self.count,
                "continuity": self.continuity, "layers": self.layers}


@dataclass(frozen=True)
class MaskGrouping:
    groups: tuple[frozenset, ...] = ()
    _lookup: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        seen: set[int] = set()
        for g in self.groups:
            if seen & g:
                raise InvalidConfig("mask groups overlap")
            seen |= g
            for cell in g:
                self._lookup[cell] = min(g)

    def label(self, group) -> int:
        return min(group)

    def observe(self, index: int) -> int:
        return self._lookup.get(index, index)

    @property
    def masked(self) -> frozenset:
        return frozenset(self._lookup)

    def preimage(self, observation: int, cells: Iterable[int] = range(ROWS * COLS)) -> list[int]:
        return [c for c in cells if self.observe(c) == observation]

    def to_json(self) -> dict:
        return {str(min(g)): sorted(g) for g in self.groups}


def _line(direction: str, k: int) -> list[int]:
    # k-th layer walking away from grid 35, ordered from the grid-35 side
    if direction == "column":
        col = COLS - 1 - k
        if col < 0:
            raise InvalidConfig(f"layer {k} has no column")
        return [r * COLS + col for r in (2, 1, 0)]
    row = 2 - k
    if row < 0:
        raise InvalidConfig(f"layer {k} has no row")
    return [row * COLS + c for c in range(COLS - 1, -1, -1)]


def build_grouping(cfg: MaskConfig) -> MaskGrouping:
    stride = 1 if cfg.continuity else 2
    groups = []
    for k in range(cfg.layers):
        line = _line(cfg.direction, k)
        picks = [i * stride for i in range(cfg.count)]
        if picks[-1] >= len(line):
            raise InvalidConfig(
                f"{cfg.count} {'continuous' if cfg.continuity else 'discrete'} masks "
                f"do not fit in a {cfg.direction} of {len(line)} regular grids")
        groups.append(frozenset(line[i] for i in picks))
    return MaskGrouping(tuple(groups))


def observe(pos: int, grouping: MaskGrouping) -> int:
    return grouping.observe(pos)


def cliff_transition(pos: int, action: int) -> tuple[int, float, bool]:
    """One step of the cliff dynamics: ``(next_pos, reward, terminal)``."""
    if pos in CLIFFS or pos == GOAL:
        raise ValueError(f"grid {pos} is terminal")
    row, col = divmod(pos, COLS)
    dr, dc = _MOVES[action]
    r, c = row + dr, col + dc
    if not (0 <= r < ROWS and 0 <= c < COLS):
        return pos, STEP_REWARD, False
    nxt = r * COLS + c
    if nxt in CLIFFS:
        return nxt, CLIFF_REWARD, True
    if nxt == GOAL:
        return nxt, GOAL_REWARD, True
    return nxt, STEP_REWARD, False


class GridEnv(DetPomdpEnv):
    """Four-action grid world with an observation labelling.

    Cells listed in ``cliffs`` and ``goals`` are terminal. Moves off the
    board leave the agent in place.
    """

    action_count = 4
    action_names = GRID_ACTION_NAMES
    unit_vectors = GRID_UNIT_VECTORS

    def __init__(self, rows, cols, start, labels=None, cliffs=(), goals=(),
                 step_reward=STEP_REWARD, cliff_reward=CLIFF_REWARD, goal_reward=GOAL_REWARD):
        super().__init__()
        self.rows, self.cols, self.start = rows, cols, start
        self.labels = dict(labels or {})
        self.cliffs = frozenset(cliffs)
        self.goals = frozenset(goals)
        self.step_reward = step_reward
        self.cliff_reward = cliff_reward
        self.goal_reward = goal_reward

    def _initial_state(self):
        return self.start

    def _observe(self, state):
        return self.labels.get(state, state)

    def transition(self, pos, action):
        row, col = divmod(pos, self.cols)
        dr, dc = _MOVES[action]
        r, c = row + dr, col + dc
        if not (0 <= r < self.rows and 0 <= c < self.cols):
            return pos, self.step_reward, False, False
        nxt = r * self.cols + c
        if nxt in self.cliffs:
            return nxt, self.cliff_reward, True, True
        if nxt in self.goals:
            return nxt, self.goal_reward, True, False
        return nxt, self.step_reward, False, False

    def _transition(self, state, action):
        return self.transition(state, action)

    @property
    def position(self) -> int:
        return self._state

    def model(self) -> TabularMDP:
        """Ground-truth tables (for oracles and model-based baselines only)."""
        terminals = set(self.cliffs | self.goals)
        states = list(range(self.rows * self.cols))
        transitions, rewards = {}, {}
        for s in states:
            if s in terminals:
                continue
            for a in range(self.action_count):
                nxt, r, _, _ = self.transition(s, a)
                transitions[(s, a)] = nxt
                rewards[(s, a)] = r
        return TabularMDP(states, list(range(self.action_count)), transitions, rewards,
                          self.start, terminals, set(self.goals))

    def observation_of(self, state) -> int:
        return self._observe(state)


class MaskedCliffWalking(GridEnv):
    """The 4x12 cliff walk with observation masking."""

    def __init__(self, mask: MaskConfig | None = None):
        self.mask = mask or MaskConfig(layers=0)
        self.grouping = build_grouping(self.mask)
        labels = {c: self.grouping.observe(c) for c in self.grouping.masked}
        super().__init__(ROWS, COLS, START, labels, CLIFFS, {GOAL})


class SingleStateEnv(DetPomdpEnv):
    """One non-terminal state; every action loops back onto it."""

    def __init__(self, action_count: int = 4, reward: float = -1.0):
        super().__init__()
        self.action_count = action_count
        self.action_names = tuple(f"a{i}" for i in range(action_count))
        self.unit_vectors = tuple(tuple(1 if j == i else 0 for j in range(action_count))
                                  for i in range(action_count))
        self.reward = reward

    def _initial_state(self):
        return 0

    def _observe(self, state):
        return 0

    def _transition(self, state, action):
        return 0, self.reward, False, False


def aliased_probe_env() -> GridEnv:
    """2x2 grid whose bottom cells (2, 3) share observation 2.

    Moving right from 2 to 3 looks like a self-loop, but the up-probe tells
    the two cells apart (0 above cell 2, 1 above cell 3).
    """
    return GridEnv(2, 2, start=2, labels={3: 2})


class NoisyLineEnv(DetPomdpEnv):
    """Three cells on a line with one randomised transition.

    Cells 0 (start), 1, 2 (goal). Actions: 0 = left, 1 = right. The reward
    of moving right out of cell 0 is redrawn uniformly from [-2, 0) on every
    step, so repeated visits disagree almost surely. The random stream is
    not part of checkpoints.
    """

    action_count = 2
    action_names = ("left", "right")
    unit_vectors = ((-1, 0), (1, 0))

    def __init__(self, seed: int | None = None):
        super().__init__()
        self.rng = random.Random(seed)

    def _initial_state(self):
        return 0

    def _observe(self, state):
        return state

    def _transition(self, state, action):
        if action == 0:
            return max(state - 1, 0), -1.0, False, False
        if state == 0:
            return 1, self.rng.uniform(-2.0, 0.0), False, False
        return 2, 10.0, True, False


def reachable_positions(env: GridEnv) -> set[int]:
    """Breadth-first search over the true dynamics from the start cell."""
    seen = {env.start}
    frontier = [env.start]
    terminals = env.cliffs | env.goals
    while frontier:
        nxt_frontier = []
        for s in frontier:
            if s in terminals:
                continue
            for a in range(env.action_count):
                n = env.transition(s, a)[0]
                if n not in seen:
                    seen.add(n)
                    nxt_frontier.append(n)
        frontier = nxt_frontier
    return seen


def arbiter_blind_spots(env: GridEnv, delta: int = 3) -> list[tuple[int, int]]:
    """(cell, action) moves that the one-step-probe boundary test mistakes for walls.

    Uses the true dynamics: a move qualifies when it changes the cell but not
    the observation, and every cell reached by repeating the action within
    ``delta - 1`` steps shows the same observation and the same one-step
    probe signature as the starting cell.
    """
    terminals = env.cliffs | env.goals
    obs = env.observation_of

    def signature(s):
        return [obs(env.transition(s, aj)[0]) for aj in range(env.action_count)]

    spots = []
    for s in range(env.rows * env.cols):
        if s in terminals:
            continue
        for a in range(env.action_count):
            s1, _, term, _ = env.transition(s, a)
            if s1 == s or term or obs(s1) != obs(s):
                continue
            ref, cur, fooled = signature(s), s, True
            for _ in range(2, delta + 1):
                cur, _, term, _ = env.transition(cur, a)
                if term or obs(cur) != obs(s) or signature(cur) != ref:
                    fooled = False
                    break
            if fooled:
                spots.append((s, a))
    return spots
