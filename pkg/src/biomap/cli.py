"""Command line entry point: ``biomap {sweep,run,stats,export-dot}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

from .envs import MaskConfig, MaskedCliffWalking
from .export import export_graph_dot, write_json
from .harness import (FACTORS, anova_by_factor, descriptive_stats, load_config, load_records,
                      run_sweep, write_outputs)
from .planner import ArbiterParams, BiomapBudget, RecoveredMDP, execute_policy, run_biomap
from .stats import DegenerateVariance, EmptyGroup
from .vecgraph import CompactVectorGraph


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "y"):
        return True
    if low in ("0", "false", "no", "n"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    if args.algos:
        cfg = replace(cfg, algorithms=tuple(a.strip() for a in args.algos.split(",") if a.strip()))
    records = run_sweep(cfg, workers=args.workers)
    out = write_outputs(records, args.out)
    failed = [r for r in records if r.error]
    for algo, s in sorted(descriptive_stats([r for r in records if r.rewards]).items()):
        print(f"{algo:8s} n={s.n} mean={s.mean:.2f} max={s.maximum:g} min={s.minimum:g} "
              f"var={s.variance:.2f} time={s.time:.2f}s")
    print(f"{len(records)} records written to {out} ({len(failed)} failed)")
    return 1 if failed else 0


def cmd_run(args) -> int:
    mask = MaskConfig(args.direction, args.count, args.continuity, args.layers)
    env = MaskedCliffWalking(mask)
    res = run_biomap(env, BiomapBudget(args.episodes, args.steps), ArbiterParams(args.delta))
    traj = execute_policy(MaskedCliffWalking(mask), res.policy, step_cap=args.steps)
    names = res.graph.action_names
    payload = {
        "mask": mask.as_dict(),
        "grouping": env.grouping.to_json(),
        "graph": res.graph.to_dict(),
        "automaton": res.automaton.to_json(),
        "verdict": res.verdict.to_json(),
        "policy": res.policy.to_json(names),
        "mdp": res.mdp.to_json(),
        "metrics": res.metrics,
        "trajectory": {"actions": [names[a] for a in traj.actions],
                       "observations": traj.observations,
                       "rewards": traj.rewards,
                       "total_reward": traj.total_reward},
    }
    if args.out:
        write_json(payload, args.out)
        print(f"cumulative reward {traj.total_reward:g}; run written to {args.out}")
    else:
        json.dump(payload, sys.stdout, indent=1, sort_keys=True)
        print()
    return 0


def cmd_stats(args) -> int:
    records = [r for r in load_records(args.input) if r.rewards]
    print(f"{'algorithm':10s} {'n':>4s} {'mean':>8s} {'max':>6s} {'min':>6s} {'var':>8s} {'time':>8s}")
    for algo, s in sorted(descriptive_stats(records).items()):
        print(f"{algo:10s} {s.n:4d} {s.mean:8.2f} {s.maximum:6g} {s.minimum:6g} {s.variance:8.2f} {s.time:8.3f}")
    for factor in args.anova or []:
        try:
            res = anova_by_factor(records, factor)
            print(f"ANOVA {factor}: F({res.df_between},{res.df_within}) = {res.f:.4g}, p = {res.p_value:.4g}")
        except (DegenerateVariance, EmptyGroup) as exc:
            print(f"ANOVA {factor}: degenerate ({exc})")
    return 0


def cmd_export_dot(args) -> int:
    with open(args.input) as fh:
        run = json.load(fh)
    if args.mdp:
        m = run["mdp"]
        tup = tuple
        mdp = RecoveredMDP(
            states=[tup(s) for s in m["states"]], actions=m["actions"],
            transitions={(tup(t["state"]), t["action"]): tup(t["next"]) for t in m["transitions"]},
            rewards={(tup(t["state"]), t["action"]): t["reward"] for t in m["transitions"]},
            start=tup(m["start"]), terminals={tup(s) for s in m["terminals"]},
            goals={tup(s) for s in m["goals"]}, unit_vectors=tuple(tup(u) for u in m["unit_vectors"]),
            action_names=tuple(m["action_names"]))
        export_graph_dot(mdp, args.out)
    else:
        export_graph_dot(CompactVectorGraph.from_dict(run["graph"]), args.out)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="biomap", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sweep", help="run algorithms over a masking sweep")
    s.add_argument("--config", default=None, help="YAML sweep config (default: shipped 84-run sweep)")
    s.add_argument("--algos", default=None, help="comma separated subset of biomap,qmdp")
    s.add_argument("--out", default="results", help="output directory")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    r = sub.add_parser("run", help="run BIOMAP on a single masking setting")
    r.add_argument("--direction", choices=("row", "column"), default="column")
    r.add_argument("--count", type=int, default=1)
    r.add_argument("--continuity", type=_bool, default=True)
    r.add_argument("--layers", type=int, default=0)
    r.add_argument("--episodes", type=int, default=60)
    r.add_argument("--steps", type=int, default=50)
    r.add_argument("--delta", type=int, default=3)
    r.add_argument("--out", default=None, help="write the run as JSON here (default: stdout)")
    r.set_defaults(func=cmd_run)

    st = sub.add_parser("stats", help="descriptive statistics and ANOVA over sweep results")
    st.add_argument("--in", dest="input", required=True, help="sweep output directory")
    st.add_argument("--anova", action="append", choices=FACTORS, help="factor (repeatable)")
    st.set_defaults(func=cmd_stats)

    d = sub.add_parser("export-dot", help="export a run's graph as Graphviz DOT")
    d.add_argument("--in", dest="input", required=True, help="run JSON written by `biomap run`")
    d.add_argument("--out", required=True)
    d.add_argument("--mdp", action="store_true", help="export the recovered MDP instead of the raw graph")
    d.set_defaults(func=cmd_export_dot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
