import math

import numpy as np
import pytest
from hypothesis import settings

from moduliflow import initial
from moduliflow.geometry import make_grid

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def pytest_configure(config):
    config.acceptance_lines = ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=_criterion_order):
            terminalreporter.write_line(line)


def _criterion_order(line: str):
    # "PASS criterion 10a: ..." -> (10, "a")
    tag = line.split()[2].rstrip(":")
    digits = "".join(ch for ch in tag if ch.isdigit())
    return int(digits), tag


@pytest.fixture
def circle():
    return make_grid(1, 64, 2.0 * math.pi)


@pytest.fixture
def torus():
    return make_grid(2, 32, 2.0 * math.pi)


@pytest.fixture
def small_torus():
    return make_grid(2, 16, 2.0 * math.pi)


@pytest.fixture
def random_field():
    def make(grid, seed=0, amplitude=0.1, cutoff=3):
        return initial.random_smooth(grid, seed, cutoff=cutoff, amplitude=amplitude)

    return make


def rel(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    scale = max(np.max(np.abs(b)), 1e-300)
    return float(np.max(np.abs(a - b)) / scale)
