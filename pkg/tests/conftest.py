import functools
import sys

import numpy as np
import pytest

from springmesh import Mesh, run_desk_scale

SQRT3 = np.sqrt(3.0)


def regular_tet(a=1.0):
    return a * np.array([
        [1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]
    ]) / np.sqrt(8.0)


def hex_fan(r=1.0):
    """Hub at the origin surrounded by 6 rim nodes; rim nodes are boundary (tag 1)."""
    ang = np.arange(6) * np.pi / 3
    coords = np.vstack([[0.0, 0.0], r * np.column_stack([np.cos(ang), np.sin(ang)])])
    el = np.array([[0, 1 + k, 1 + (k + 1) % 6] for k in range(6)])
    tags = np.array([0] + [1] * 6)
    return Mesh(coords, el, tags)


@pytest.fixture
def fan():
    return hex_fan()


@pytest.fixture
def two_triangles():
    coords = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    return Mesh(coords, [[0, 1, 2], [1, 3, 2]])


@functools.lru_cache(maxsize=None)
def desk_run(name, seed=None, **overrides):
    """Desk-scale run shared by every test that needs it (runs once per session)."""
    return run_desk_scale(name, seed=seed, **overrides)


def pytest_terminal_summary(terminalreporter):
    acc = sys.modules.get("test_acceptance")
    if acc is None or not acc.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in acc.summary_lines():
        terminalreporter.write_line(line)
