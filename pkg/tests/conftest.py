from __future__ import annotations

import numpy as np
import pytest

from mengerkit.measure import WeightedPlanarMeasure


def rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def random_measure(seed: int, n: int, weights: bool = True) -> WeightedPlanarMeasure:
    g = rng(seed)
    ws = g.uniform(0.1, 2.0, n) if weights else np.ones(n)
    return WeightedPlanarMeasure(g.random(n), g.random(n), ws)


@pytest.fixture
def small_measure() -> WeightedPlanarMeasure:
    return random_measure(7, 12)


# one line per acceptance criterion, filled by tests/test_acceptance.py
CRITERIA: dict[int, tuple[bool, str]] = {}


def record(n: int, ok: bool, detail: str) -> None:
    CRITERIA[n] = (bool(ok), detail)
    print(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        ok, detail = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
