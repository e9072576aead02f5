"""Shared builders for the test suite."""

import numpy as np
import pytest

from amenlab.algebra import A0Element
from amenlab.groups import FinitePoints, GroupDescriptor, ball


def f2_four_points():
    """Free group of rank 2 acting on four points by two fixed permutations."""
    G = GroupDescriptor.free(2)
    return FinitePoints(G, ["p0", "p1", "p2", "p3"], [[1, 2, 3, 0], [1, 0, 3, 2]])


def random_element(space, rng, radius=2, depth=0, complex_=False):
    window = ball(space.group, radius)
    k = int(rng.integers(1, min(len(window), 6) + 1))
    idx = rng.choice(len(window), size=k, replace=False)
    N = space.size(depth)
    coeffs = {}
    for i in idx:
        v = rng.normal(size=N)
        if complex_:
            v = v + 1j * rng.normal(size=N)
        coeffs[window[i]] = v
    return A0Element(space, coeffs, depth)


@pytest.fixture
def f2_space():
    return f2_four_points()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k][1])
