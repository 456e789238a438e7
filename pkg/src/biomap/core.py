"""Environment contract, trajectory records and shared vocabulary.

An environment is only ever touched through ``reset``/``step`` (plus
``checkpoint``/``restore`` for probing); the hidden state, transition and
observation functions stay inside the handle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Hashable, Sequence


class BiomapError(Exception):
    """Base class for all errors raised by this package."""


class StepAfterTerminal(BiomapError):
    pass


class UnknownAction(BiomapError):
    pass


class NotCheckpointable(BiomapError):
    pass


class StaleToken(BiomapError):
    pass


@dataclass(frozen=True)
class StepOutcome:
    observation: int
    reward: float
    terminal: bool = False
    # cliff-type terminals set this; goal terminals leave it False
    failure: bool = False

    def __post_init__(self):
        if not math.isfinite(self.reward):
            raise ValueError(f"reward must be finite, got {self.reward!r}")


@dataclass(frozen=True)
class CheckpointToken:
    episode: int
    state: Any
    done: bool
    steps: int


class DetPomdpEnv:
    """Base class for deterministic, partially observable episodic environments.

    Subclasses implement ``_initial_state``, ``_transition`` and ``_observe``.
    ``_transition(state, action)`` returns ``(next_state, reward, terminal,
    failure)``. The base class owns episode bookkeeping, error checking,
    checkpointing and the lifetime step counter used for budget accounting.
    """

    action_count: int = 0
    action_names: tuple[str, ...] = ()
    unit_vectors: tuple[tuple[int, ...], ...] = ()
    checkpointable: bool = True

    def __init__(self):
        self.episode = 0
        self.total_steps = 0
        self._state = None
        self._done = True
        self._episode_steps = 0

    # -- hooks -------------------------------------------------------------
    def _initial_state(self):
        raise NotImplementedError

    def _transition(self, state, action: int):
        raise NotImplementedError

    def _observe(self, state) -> int:
        raise NotImplementedError

    # -- contract ----------------------------------------------------------
    def reset(self) -> int:
        self.episode += 1
        self._state = self._initial_state()
        self._done = False
        self._episode_steps = 0
        return self._observe(self._state)

    def step(self, action: int) -> StepOutcome:
        if self._done:
            raise StepAfterTerminal("episode has ended; call reset()")
        if not (0 <= int(action) < self.action_count):
            raise UnknownAction(f"action {action!r} not in 0..{self.action_count - 1}")
        nxt, reward, terminal, failure = self._transition(self._state, int(action))
        self._state = nxt
        self._done = bool(terminal)
        self._episode_steps += 1
        self.total_steps += 1
        return StepOutcome(self._observe(nxt), float(reward), bool(terminal), bool(failure))

    def checkpoint(self) -> CheckpointToken:
        if not self.checkpointable:
            raise NotCheckpointable(type(self).__name__)
        return CheckpointToken(self.episode, self._state, self._done, self._episode_steps)

    def restore(self, token: CheckpointToken) -> None:
        if not self.checkpointable:
            raise NotCheckpointable(type(self).__name__)
        if token.episode != self.episode:
            raise StaleToken(f"token from episode {token.episode}, current {self.episode}")
        self._state = token.state
        self._done = token.done
        self._episode_steps = token.steps

    @property
    def done(self) -> bool:
        return self._done


def env_reset(env: DetPomdpEnv) -> int:
    return env.reset()


def env_step(env: DetPomdpEnv, action: int) -> StepOutcome:
    return env.step(action)


def env_checkpoint(env: DetPomdpEnv) -> CheckpointToken:
    return env.checkpoint()


def env_restore(env: DetPomdpEnv, token: CheckpointToken) -> None:
    env.restore(token)


@dataclass
class Trajectory:
    """Action/observation/reward history of one episode.

    ``observations`` always holds one more entry than ``actions`` once the
    initial observation is recorded. ``combined`` interleaves
    ``o0, a0, r0, o1, a1, r1, o2, ...``.
    """

    actions: list[int] = field(default_factory=list)
    observations: list[int] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)
    closed: bool = False

    @classmethod
    def start(cls, observation: int) -> "Trajectory":
        return cls(observations=[observation])

    @property
    def combined(self) -> list:
        out: list = [self.observations[0]] if self.observations else []
        for a, r, o in zip(self.actions, self.rewards, self.observations[1:]):
            out.extend((a, r, o))
        return out

    @property
    def total_reward(self) -> float:
        return float(sum(self.rewards))

    def __len__(self):
        return len(self.actions)


def append_history(t: Trajectory, action: int, out: StepOutcome) -> Trajectory:
    if t.closed:
        raise StepAfterTerminal("trajectory already closed")
    t.actions.append(int(action))
    t.rewards.append(out.reward)
    t.observations.append(out.observation)
    if out.terminal:
        t.closed = True
    return t


@dataclass
class TabularMDP:
    """A deterministic MDP given as explicit tables.

    Used both for ground-truth models of the benchmark environments and for
    MDPs reconstructed from an exploration graph.
    """

    states: list[Hashable]
    actions: list[int]
    transitions: dict[tuple[Hashable, int], Hashable]
    rewards: dict[tuple[Hashable, int], float]
    start: Hashable
    terminals: set[Hashable] = field(default_factory=set)
    goals: set[Hashable] = field(default_factory=set)

    def available(self, s) -> list[int]:
        if s in self.terminals:
            return []
        return [a for a in self.actions if (s, a) in self.transitions]

    def rollout(self, actions: Sequence[int]) -> tuple[list, float]:
        s, total, path = self.start, 0.0, [self.start]
        for a in actions:
            total += self.rewards[(s, a)]
            s = self.transitions[(s, a)]
            path.append(s)
            if s in self.terminals:
                break
        return path, total
