"""Batch sweeps over masking settings, result records and summary tables."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .analysis import evaluate_policy, qmdp_policy
from .envs import InvalidConfig, MaskConfig, MaskedCliffWalking, arbiter_blind_spots
from .planner import ArbiterParams, BiomapBudget, run_biomap
from .stats import DegenerateVariance, EmptyGroup, anova_oneway, describe

log = logging.getLogger(__name__)

ALGORITHMS = ("biomap", "qmdp")
# both implemented solvers plan offline; BIOMAP is the only model-free one
ALGO_TRAITS = {"biomap": {"offline": True, "model_free": True},
               "qmdp": {"offline": True, "model_free": False}}
FACTORS = ("algorithm", "direction", "count", "continuity", "layers", "is_biomap", "is_offline")


@dataclass(frozen=True)
class Setting:
    id: int
    mask: MaskConfig
    seed: int = 0


@dataclass
class SweepConfig:
    settings: list[Setting]
    algorithms: tuple[str, ...] = ALGORITHMS
    episodes: int = 60
    steps: int = 50
    delta: int = 3
    eval_episodes: int = 1
    step_cap: int = 50
    gamma: float = 1.0

    def __post_init__(self):
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms: {sorted(unknown)}")


@dataclass
class ExperimentRecord:
    setting_id: int
    algorithm: str
    mask: dict
    seed: int
    rewards: list[float] = field(default_factory=list)
    mean: float | None = None
    maximum: float | None = None
    minimum: float | None = None
    variance: float | None = None
    deterministic: bool | None = None
    exploration_steps: int | None = None
    graph_digest: str | None = None
    actions: list[int] | None = None
    error: str | None = None
    wall_time: float = 0.0

    def to_json(self, with_time: bool = False) -> dict:
        d = asdict(self)
        if not with_time:
            d.pop("wall_time")
        return d


def expand_grid(grid: dict, size: int, prune_blind_spots: bool = True, delta: int = 3) -> list[MaskConfig]:
    masks = []
    for direction in grid["directions"]:
        for continuity in grid["continuity"]:
            for layers in grid["layers"]:
                for count in grid["counts"][direction]:
                    try:
                        cfg = MaskConfig(direction, int(count), bool(continuity), int(layers))
                        env = MaskedCliffWalking(cfg)
                    except InvalidConfig:
                        continue
                    if prune_blind_spots and arbiter_blind_spots(env, delta):
                        continue
                    masks.append(cfg)
    if len(masks) > size:
        raise ValueError(f"grid yields {len(masks)} settings, more than size={size}")
    masks += [MaskConfig(layers=0)] * (size - len(masks))
    return masks


def load_config(path: str | os.PathLike | None = None) -> SweepConfig:
    if path is None:
        text = resources.files("biomap").joinpath("data/default_sweep.yaml").read_text()
    else:
        text = Path(path).read_text()
    raw = yaml.safe_load(text) or {}
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> SweepConfig:
    budget = raw.get("budget", {})
    evaluation = raw.get("evaluation", {})
    delta = int(budget.get("delta", 3))
    seed = int(os.environ.get("BIOMAP_SEED", raw.get("seed", 0)))
    if "settings" in raw:
        masks = [MaskConfig(**s) for s in raw["settings"]]
    elif "grid" in raw:
        masks = expand_grid(raw["grid"], int(raw.get("size", 84)),
                            raw.get("prune_blind_spots", True), delta)
    else:
        masks = []
    settings = [Setting(i, m, seed + i) for i, m in enumerate(masks)]
    return SweepConfig(
        settings=settings,
        algorithms=tuple(raw.get("algorithms", ALGORITHMS)),
        episodes=int(budget.get("episodes", 60)),
        steps=int(budget.get("steps", 50)),
        delta=delta,
        eval_episodes=int(evaluation.get("episodes", 1)),
        step_cap=int(evaluation.get("step_cap", 50)),
        gamma=float(raw.get("gamma", 1.0)),
    )


def graph_digest(graph) -> str:
    blob = json.dumps(graph.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def run_setting(setting: Setting, algorithm: str, cfg: SweepConfig) -> ExperimentRecord:
    rec = ExperimentRecord(setting.id, algorithm, setting.mask.as_dict(), setting.seed)
    t0 = time.perf_counter()
    try:
        env = MaskedCliffWalking(setting.mask)
        if algorithm == "biomap":
            res = run_biomap(env, BiomapBudget(cfg.episodes, cfg.steps), ArbiterParams(cfg.delta))
            rec.deterministic = res.verdict.deterministic
            rec.exploration_steps = res.metrics["steps"]
            rec.graph_digest = graph_digest(res.graph)
            rec.actions = res.policy.actions
            selector = res.policy
        else:
            selector = qmdp_policy(env.model(), env.observation_of, cfg.gamma)
        stats = evaluate_policy(MaskedCliffWalking(setting.mask), selector, cfg.eval_episodes, cfg.step_cap)
        rec.rewards = stats.rewards
        if stats.rewards:
            s = describe(stats.rewards)
            rec.mean, rec.maximum, rec.minimum, rec.variance = s.mean, s.maximum, s.minimum, s.variance
    except Exception as exc:  # one failing setting must not abort the sweep
        log.warning("setting %d / %s failed: %s", setting.id, algorithm, exc)
        rec.error = f"{type(exc).__name__}: {exc}"
        if hasattr(exc, "verdict"):
            rec.deterministic = exc.verdict.deterministic
    rec.wall_time = time.perf_counter() - t0
    return rec


def _run_task(args):
    return run_setting(*args)


def run_sweep(cfg: SweepConfig, workers: int = 1) -> list[ExperimentRecord]:
    tasks = [(s, a, cfg) for s in cfg.settings for a in cfg.algorithms]
    if not tasks:
        return []
    if workers <= 1:
        return [run_setting(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def descriptive_stats(records: list[ExperimentRecord]) -> dict:
    """Per-algorithm mean/max/min/population variance and total wall time."""
    by_algo: dict[str, list[ExperimentRecord]] = {}
    for r in records:
        by_algo.setdefault(r.algorithm, []).append(r)
    out = {}
    for algo, recs in by_algo.items():
        rewards = [x for r in recs for x in r.rewards]
        if not rewards:
            raise EmptyGroup(f"no rewards recorded for {algo}")
        out[algo] = describe(rewards, sum(r.wall_time for r in recs))
    return out


def factor_level(rec: ExperimentRecord, factor: str):
    if factor == "algorithm":
        return rec.algorithm
    if factor == "is_biomap":
        return rec.algorithm == "biomap"
    if factor == "is_offline":
        return ALGO_TRAITS[rec.algorithm]["offline"]
    if factor in ("direction", "count", "continuity", "layers"):
        return rec.mask[factor]
    raise ValueError(f"unknown factor {factor!r}; choose from {FACTORS}")


def anova_by_factor(records: list[ExperimentRecord], factor: str):
    """One-way ANOVA of per-episode rewards grouped by ``factor``.

    Unmasked controls carry no direction/count/continuity, so they are left
    out of those three factors.
    """
    groups: dict = {}
    for r in records:
        if r.error:
            continue
        if factor in ("direction", "count", "continuity") and r.mask["layers"] == 0:
            continue
        groups.setdefault(factor_level(r, factor), []).extend(r.rewards)
    return anova_oneway(dict(sorted(groups.items(), key=lambda kv: str(kv[0]))), factor)


def anova_rows(records: list[ExperimentRecord], factors=FACTORS) -> list[dict]:
    rows = []
    for f in factors:
        try:
            rows.append(anova_by_factor(records, f).as_row() | {"status": "ok"})
        except (DegenerateVariance, EmptyGroup) as exc:
            rows.append({"factor": f, "ss_between": "", "ss_within": "", "df_between": "",
                         "df_within": "", "F": "", "p_value": "",
                         "status": f"{type(exc).__name__}: {exc}"})
    return rows


def _write_csv(path: Path, rows: list[dict]):
    if not rows:
        path.write_text("")
        return
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def write_outputs(records: list[ExperimentRecord], out_dir: str | os.PathLike) -> Path:
    """records.json, summary.csv and anova.csv are reproducible; timings.csv is not."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "records.json").write_text(
        json.dumps([r.to_json() for r in records], indent=1, sort_keys=True) + "\n")
    summary = descriptive_stats([r for r in records if r.rewards]) if any(r.rewards for r in records) else {}
    _write_csv(out / "summary.csv", [
        {"algorithm": a} | {k: v for k, v in s.as_row().items() if k != "time"}
        for a, s in sorted(summary.items())])
    _write_csv(out / "anova.csv", anova_rows([r for r in records if r.rewards]))
    _write_csv(out / "timings.csv", [
        {"setting_id": r.setting_id, "algorithm": r.algorithm, "wall_time": f"{r.wall_time:.6f}"}
        for r in records])
    return out


def load_records(path: str | os.PathLike) -> list[ExperimentRecord]:
    p = Path(path)
    if p.is_dir():
        p = p / "records.json"
    timings = {}
    tpath = p.parent / "timings.csv"
    if tpath.exists():
        with tpath.open() as fh:
            for row in csv.DictReader(fh):
                timings[(int(row["setting_id"]), row["algorithm"])] = float(row["wall_time"])
    recs = []
    for d in json.loads(p.read_text()):
        d["wall_time"] = timings.get((d["setting_id"], d["algorithm"]), 0.0)
        recs.append(ExperimentRecord(**d))
    return recs
