"""Markov automaton dual to a compact vector graph."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

from .core import BiomapError
from .vecgraph import CompactVectorGraph


class EmptyGraph(BiomapError):
    pass


@dataclass(frozen=True)
class MarkovAutomaton:
    states: frozenset
    alphabet: frozenset
    delta: dict  # (state, letter) -> frozenset of states
    initial: Hashable
    accepting: frozenset

    def __post_init__(self):
        if self.initial not in self.states:
            raise ValueError("initial state not in Q")
        if not self.accepting <= self.states:
            raise ValueError("F is not a subset of Q")
        for targets in self.delta.values():
            if not targets <= self.states:
                raise ValueError("transition target outside Q")

    def targets(self, q, letter) -> frozenset:
        return self.delta.get((q, letter), frozenset())

    def to_json(self) -> dict:
        key = lambda s: (repr(type(s)), s)  # noqa: E731
        return {
            "states": [_jsonable(q) for q in sorted(self.states, key=key)],
            "alphabet": sorted(self.alphabet),
            "delta": [
                {"state": _jsonable(q), "letter": a, "targets": [_jsonable(t) for t in sorted(ts, key=key)]}
                for (q, a), ts in sorted(self.delta.items(), key=lambda kv: (key(kv[0][0]), kv[0][1]))
            ],
            "initial": _jsonable(self.initial),
            "accepting": [_jsonable(q) for q in sorted(self.accepting, key=key)],
        }


def _jsonable(q):
    if isinstance(q, (tuple, frozenset)):
        return [_jsonable(x) for x in sorted(q)] if isinstance(q, frozenset) else list(q)
    return q


@dataclass
class DeterminismVerdict:
    deterministic: bool
    target_witnesses: list = field(default_factory=list)   # (state, letter, targets)
    weight_witnesses: list = field(default_factory=list)   # (state, letter, weights)

    @property
    def witnesses(self) -> list:
        return self.target_witnesses + self.weight_witnesses

    def to_json(self) -> dict:
        return {
            "deterministic": self.deterministic,
            "target_witnesses": [
                {"state": list(q), "letter": a, "targets": sorted(list(t) for t in ts)}
                for q, a, ts in self.target_witnesses],
            "weight_witnesses": [
                {"state": list(q), "letter": a, "weights": sorted(ws)}
                for q, a, ws in self.weight_witnesses],
        }


def from_graph(g: CompactVectorGraph) -> MarkovAutomaton:
    if not g.vertices or g.origin not in g.vertices:
        raise EmptyGraph("graph has no origin vertex")
    delta: dict = {}
    for e in g.edges:
        delta[(e.src, e.action)] = delta.get((e.src, e.action), frozenset()) | {e.dst}
    return MarkovAutomaton(
        states=frozenset(g.vertices),
        alphabet=frozenset(e.action for e in g.edges),
        delta=delta,
        initial=g.origin,
        accepting=frozenset(g.terminals),
    )


def is_deterministic(m: MarkovAutomaton, g: CompactVectorGraph | None = None) -> DeterminismVerdict:
    """At most one target per (state, letter), and agreeing rewards in ``g``."""
    targets = [(q, a, ts) for (q, a), ts in sorted(m.delta.items(), key=_delta_key) if len(ts) > 1]
    weights = []
    if g is not None:
        for q, a, edges in g.conflicts():
            ws = {e.weight for e in edges}
            if len(ws) > 1:
                weights.append((q, a, ws))
    return DeterminismVerdict(not targets and not weights, targets, weights)


def _delta_key(kv):
    (q, a), _ = kv
    return (repr(q), a)


def recognizes(m: MarkovAutomaton, word: Sequence) -> bool:
    current = {m.initial}
    for letter in word:
        current = set().union(*(m.targets(q, letter) for q in current)) if current else set()
        if not current:
            return False
    return bool(current & m.accepting)


def determinize(m: MarkovAutomaton) -> MarkovAutomaton:
    """Subset construction over the reachable part of ``m``.

    States of the result are frozensets of ``m``'s states; the empty set is
    omitted, so the result is a partial DFA.
    """
    start = frozenset({m.initial})
    states = {start}
    delta = {}
    queue = deque([start])
    letters = sorted(m.alphabet)
    while queue:
        S = queue.popleft()
        for a in letters:
            T = frozenset().union(*(m.targets(q, a) for q in S))
            if not T:
                continue
            delta[(S, a)] = frozenset({T})
            if T not in states:
                states.add(T)
                queue.append(T)
    accepting = frozenset(S for S in states if S & m.accepting)
    return MarkovAutomaton(frozenset(states), m.alphabet, delta, start, accepting)


def accepted_words(m: MarkovAutomaton, max_len: int, alphabet: Iterable | None = None) -> set[tuple]:
    """All words of length <= ``max_len`` recognised by ``m`` (trie walk over state sets)."""
    letters = sorted(alphabet if alphabet is not None else m.alphabet)
    out: set[tuple] = set()
    stack = [((), frozenset({m.initial}))]
    while stack:
        word, current = stack.pop()
        if current & m.accepting:
            out.add(word)
        if len(word) == max_len or not current:
            continue
        for a in letters:
            nxt = frozenset().union(*(m.targets(q, a) for q in current))
            if nxt:
                stack.append((word + (a,), nxt))
    return out
