"""Compact vector graph built by dead reckoning.

Vertices are cumulative action vectors (integer tuples); each edge carries
the action taken, the observed reward as weight and the action's unit
vector as attribute. The graph tracks the explored degree ``phi``: the
number of (non-terminal vertex, action) pairs not yet tried.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

from .core import BiomapError

Vector = tuple[int, ...]


class InvariantViolation(BiomapError):
    pass


class UnknownVertex(BiomapError, KeyError):
    pass


def vadd(u: Sequence[int], v: Sequence[int]) -> Vector:
    return tuple(a + b for a, b in zip(u, v))


def vsub(u: Sequence[int], v: Sequence[int]) -> Vector:
    return tuple(a - b for a, b in zip(u, v))


def is_unit_vector(vec: Sequence[int], units: Sequence[Sequence[int]]) -> bool:
    """True if no other action vector lies strictly between zero and ``vec``.

    Componentwise order: ``u < vec`` when ``u`` is nonzero, has the same
    sign pattern and is no larger in magnitude in every component, with at
    least one strictly smaller.
    """
    if not any(vec):
        return False
    for u in units:
        u = tuple(u)
        if u == tuple(vec) or not any(u):
            continue
        inside = all((x == 0 or (x * y > 0 and abs(x) <= abs(y))) for x, y in zip(u, vec))
        if inside:
            return False
    return True


@dataclass(frozen=True)
class GraphEdge:
    src: Vector
    dst: Vector
    action: int
    weight: float
    attribute: Vector

    @property
    def is_loop(self) -> bool:
        return self.src == self.dst


@dataclass
class VertexInfo:
    taken: set = field(default_factory=set)
    terminal: bool = False
    goal: bool = False


class CompactVectorGraph:
    def __init__(self, unit_vectors, action_names=None):
        self.unit_vectors: tuple[Vector, ...] = tuple(tuple(u) for u in unit_vectors)
        self.action_count = len(self.unit_vectors)
        self.action_names = tuple(action_names) if action_names else tuple(
            str(i) for i in range(self.action_count))
        dim = len(self.unit_vectors[0]) if self.unit_vectors else 0
        self.origin: Vector = (0,) * dim
        self.vertices: dict[Vector, VertexInfo] = {}
        self.edges: list[GraphEdge] = []
        self._by_key: dict[tuple[Vector, int], list[int]] = {}
        self.phi = 0

    @classmethod
    def for_env(cls, env) -> "CompactVectorGraph":
        return cls(env.unit_vectors, env.action_names)

    def __contains__(self, v) -> bool:
        return tuple(v) in self.vertices

    def __len__(self):
        return len(self.vertices)

    @property
    def terminals(self) -> set[Vector]:
        return {v for v, info in self.vertices.items() if info.terminal}

    @property
    def goals(self) -> set[Vector]:
        return {v for v, info in self.vertices.items() if info.goal}

    def insert_vertex(self, v, terminal: bool = False, goal: bool = False) -> "CompactVectorGraph":
        v = tuple(v)
        if v in self.vertices:
            return self
        self.vertices[v] = VertexInfo(terminal=terminal or goal, goal=goal)
        if not (terminal or goal):
            self.phi += self.action_count
        return self

    def insert_edge(self, e: GraphEdge) -> "CompactVectorGraph":
        if e.src not in self.vertices:
            raise UnknownVertex(e.src)
        if self.vertices[e.src].terminal:
            raise InvariantViolation(f"edge out of terminal vertex {e.src}")
        if not (0 <= e.action < self.action_count):
            raise InvariantViolation(f"unknown action {e.action}")
        if tuple(e.attribute) != self.unit_vectors[e.action]:
            raise InvariantViolation(f"attribute {e.attribute} is not the unit vector of action {e.action}")
        if not e.is_loop and vsub(e.dst, e.src) != tuple(e.attribute):
            raise InvariantViolation(f"{e.dst} - {e.src} != {e.attribute}")
        self.insert_vertex(e.dst)
        key = (e.src, e.action)
        bucket = self._by_key.setdefault(key, [])
        if any(self.edges[i] == e for i in bucket):
            return self
        bucket.append(len(self.edges))
        self.edges.append(e)
        taken = self.vertices[e.src].taken
        if e.action not in taken:
            taken.add(e.action)
            self.phi -= 1
        return self

    def add_step(self, src, action: int, weight: float, loop: bool = False,
                 terminal: bool = False, goal: bool = False) -> Vector:
        """Record one observed step by dead reckoning; returns the destination."""
        src = tuple(src)
        unit = self.unit_vectors[action]
        dst = src if loop else vadd(src, unit)
        if terminal or goal:
            self.insert_vertex(dst, terminal=True, goal=goal)
        self.insert_edge(GraphEdge(src, dst, action, float(weight), unit))
        return dst

    def edges_from(self, v, action: int | None = None) -> list[GraphEdge]:
        v = tuple(v)
        if action is not None:
            return [self.edges[i] for i in self._by_key.get((v, action), [])]
        return [e for a in range(self.action_count) for e in self.edges_from(v, a)]

    def untaken_actions(self, v) -> set[int]:
        v = tuple(v)
        if v not in self.vertices:
            raise UnknownVertex(v)
        info = self.vertices[v]
        if info.terminal:
            return set()
        return set(range(self.action_count)) - info.taken

    def route_to_frontier(self, v) -> list[int] | None:
        """Shortest action sequence from ``v`` to a vertex with untaken actions."""
        v = tuple(v)
        if v not in self.vertices:
            raise UnknownVertex(v)
        parents: dict[Vector, tuple[Vector, int] | None] = {v: None}
        queue = deque([v])
        while queue:
            u = queue.popleft()
            if self.untaken_actions(u):
                path = []
                while parents[u] is not None:
                    u, a = parents[u]
                    path.append(a)
                return path[::-1]
            for e in self.edges_from(u):
                if e.is_loop or e.dst in parents or self.vertices[e.dst].terminal:
                    continue
                parents[e.dst] = (u, e.action)
                queue.append(e.dst)
        return None

    def recount_phi(self) -> int:
        return sum(self.action_count - len(info.taken)
                   for info in self.vertices.values() if not info.terminal)

    def conflicts(self) -> list[tuple[Vector, int, list[GraphEdge]]]:
        """(vertex, action) pairs holding more than one distinct edge."""
        return [(k[0], k[1], [self.edges[i] for i in idx])
                for k, idx in sorted(self._by_key.items()) if len(idx) > 1]

    def copy(self) -> "CompactVectorGraph":
        return CompactVectorGraph.from_dict(self.to_dict())

    def map_weights(self, fn) -> "CompactVectorGraph":
        g = CompactVectorGraph(self.unit_vectors, self.action_names)
        for v, info in self.vertices.items():
            g.insert_vertex(v, info.terminal, info.goal)
        for e in self.edges:
            g.insert_edge(GraphEdge(e.src, e.dst, e.action, fn(e.weight), e.attribute))
        return g

    # -- serialisation -----------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "unit_vectors": [list(u) for u in self.unit_vectors],
            "action_names": list(self.action_names),
            "origin": list(self.origin),
            "vertices": [
                {"v": list(v), "terminal": info.terminal, "goal": info.goal}
                for v, info in sorted(self.vertices.items())
            ],
            "edges": [
                {"src": list(e.src), "dst": list(e.dst), "action": e.action, "weight": e.weight}
                for e in sorted(self.edges, key=lambda e: (e.src, e.action, e.dst, e.weight))
            ],
            "phi": self.phi,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CompactVectorGraph":
        g = cls(d["unit_vectors"], d.get("action_names"))
        for item in d["vertices"]:
            g.insert_vertex(item["v"], item["terminal"], item["goal"])
        for item in d["edges"]:
            a = item["action"]
            g.insert_edge(GraphEdge(tuple(item["src"]), tuple(item["dst"]), a,
                                    float(item["weight"]), g.unit_vectors[a]))
        return g

    def __eq__(self, other):
        if not isinstance(other, CompactVectorGraph):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __repr__(self):
        return f"CompactVectorGraph(|V|={len(self.vertices)}, |E|={len(self.edges)}, phi={self.phi})"


def insert_vertex(g: CompactVectorGraph, v, terminal: bool = False) -> CompactVectorGraph:
    return g.insert_vertex(v, terminal)


def insert_edge(g: CompactVectorGraph, e: GraphEdge) -> CompactVectorGraph:
    return g.insert_edge(e)


def untaken_actions(g: CompactVectorGraph, v) -> set[int]:
    return g.untaken_actions(v)


def route_to_frontier(g: CompactVectorGraph, v) -> list[int] | None:
    return g.route_to_frontier(v)
