"""Shared fixtures.

The full scenario suite is expensive (tens of seconds), so it runs once per
session — twice, actually, because the determinism acceptance criterion needs
two byte-comparable passes — and every test that wants closed-loop results
reuses those runs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import pytest

from aeroarm.config import SimConfig, load_config
from aeroarm.harness import RunResult, emit_logs, run_scenario
from aeroarm.scenarios import SCENARIOS, get_scenario


@pytest.fixture(scope="session")
def cfg() -> SimConfig:
    return load_config(None)


@dataclass
class SuitePass:
    results: dict[str, RunResult]
    csv_paths: dict[str, str]
    summary_paths: dict[str, str]
    wall_time: float


@dataclass
class SuiteRuns:
    first: SuitePass
    second: SuitePass


def _run_suite(cfg: SimConfig, out_dir) -> SuitePass:
    results, csvs, sums = {}, {}, {}
    t0 = time.perf_counter()
    for name in SCENARIOS:
        res = run_scenario(get_scenario(name, cfg), cfg)
        csv_path, summary_path = emit_logs(res, out_dir)
        results[name] = res
        csvs[name] = str(csv_path)
        sums[name] = str(summary_path)
    return SuitePass(results, csvs, sums, time.perf_counter() - t0)


@pytest.fixture(scope="session")
def suite(cfg, tmp_path_factory) -> SuiteRuns:
    first = _run_suite(cfg, tmp_path_factory.mktemp("suite-a"))
    second = _run_suite(cfg, tmp_path_factory.mktemp("suite-b"))
    return SuiteRuns(first, second)


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
