"""DOT and JSON export of exploration graphs and recovered MDPs."""
from __future__ import annotations

import json
from pathlib import Path

from .planner import RecoveredMDP, graph_from_mdp
from .vecgraph import CompactVectorGraph


def _label(v) -> str:
    return "(" + ",".join(str(c) for c in v) + ")"


def _num(w: float) -> str:
    return f"{w:g}"


def graph_to_dot(g: CompactVectorGraph | RecoveredMDP, name: str = "G") -> str:
    if isinstance(g, RecoveredMDP):
        g = graph_from_mdp(g)
    if not g.vertices:
        raise ValueError("cannot export an empty graph")
    lines = [f"digraph {name} {{"]
    for v, info in sorted(g.vertices.items()):
        shape = "doublecircle" if info.terminal else "circle"
        extra = ", style=bold" if v == g.origin else ""
        lines.append(f'  "{_label(v)}" [label="{_label(v)}", shape={shape}{extra}];')
    for e in sorted(g.edges, key=lambda e: (e.src, e.action, e.dst, e.weight)):
        lines.append(f'  "{_label(e.src)}" -> "{_label(e.dst)}" '
                     f'[label="a:{g.action_names[e.action]} w:{_num(e.weight)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_graph_dot(g, path) -> Path:
    p = Path(path)
    p.write_text(graph_to_dot(g))
    return p


def write_json(obj, path) -> Path:
    p = Path(path)
    p.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")
    return p
