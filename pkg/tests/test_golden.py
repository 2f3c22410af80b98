"""Regression guard: scenario summary metrics against committed golden values.

Tolerances are loose on purpose — these catch behavioral drift (a controller
or model change shifting results by tens of percent), not bit-level changes,
which test_acceptance.py::test_c11 already pins down.
"""

from pathlib import Path

import numpy as np
import pytest

from aeroarm.scenarios import SCENARIOS

GOLDEN_DIR = Path(__file__).parent / "golden"

EXACT_KEYS = {"scenario", "duration_s", "control_steps"}


def _parse(path: Path) -> dict:
    out = {}
    for line in path.read_text().splitlines():
        key, _, val = line.partition(": ")
        try:
            out[key] = float(val)
        except ValueError:
            out[key] = val
    return out


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_summary_matches_golden(suite, name):
    golden = _parse(GOLDEN_DIR / f"{name}_summary.txt")
    got = suite.first.results[name].summary
    assert set(got) == set(golden)
    for key, want in golden.items():
        if key in EXACT_KEYS:
            assert got[key] == want, key
        else:
            assert np.isclose(got[key], want, rtol=0.1, atol=1e-9), (
                f"{name}:{key} drifted: golden={want!r}, got={got[key]!r}")
