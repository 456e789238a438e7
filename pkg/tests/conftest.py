import time

import pytest

from biomap.envs import MaskConfig, MaskedCliffWalking
from biomap.harness import load_config, run_sweep
from biomap.planner import ExplorationLog, run_biomap

TEN_CELL_MASK = MaskConfig("column", 2, False, 5)

_acceptance_lines: list[str] = []


def record_acceptance(line: str) -> None:
    _acceptance_lines.append(line)


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def sweep_cfg():
    return load_config()


@pytest.fixture(scope="session")
def biomap_sweep(sweep_cfg):
    cfg = type(sweep_cfg)(**{**sweep_cfg.__dict__, "algorithms": ("biomap",)})
    t0 = time.perf_counter()
    recs = run_sweep(cfg)
    return recs, time.perf_counter() - t0


@pytest.fixture(scope="session")
def qmdp_sweep(sweep_cfg):
    cfg = type(sweep_cfg)(**{**sweep_cfg.__dict__, "algorithms": ("qmdp",)})
    t0 = time.perf_counter()
    recs = run_sweep(cfg)
    return recs, time.perf_counter() - t0


@pytest.fixture(scope="session")
def cliff_run():
    log = ExplorationLog()
    env = MaskedCliffWalking()
    return run_biomap(env, log_to=log), log, env


@pytest.fixture(scope="session")
def ten_cell_run():
    log = ExplorationLog()
    env = MaskedCliffWalking(TEN_CELL_MASK)
    return run_biomap(env, log_to=log), log, env
