import math

import numpy as np
import pytest

from pa_attractors.cover import default_cover
from pa_attractors.pseudo_anosov import build_cover_map, cat_map, deck_involution
from pa_attractors.suspension import FiberPoint, normalize

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def cover():
    return default_cover()


@pytest.fixture(scope="session")
def P(cover):
    return build_cover_map(cat_map(), cover, name="P")


@pytest.fixture(scope="session")
def deck(cover):
    return deck_involution(cover)


def random_loop(cover, torus, z0, rng):
    """Closed loop at (z0, 0): a random walk in r with an excursion of z; returns (loop, net turns)."""
    turns = int(rng.integers(-2, 3))
    steps = int(rng.integers(20, 60))
    rs = np.concatenate([[0.0], np.cumsum(rng.uniform(-0.15, 0.15, steps))])
    rs += np.linspace(0, turns - rs[-1], steps + 1)
    loop = [normalize(torus, FiberPoint(z0, float(r))) for r in rs[:-1]]
    # out and back along a short straight ray at the current height
    ang = rng.uniform(0, 2 * math.pi)
    bx, by = (float(c) for c in z0.coords)
    ray = [cover.point((bx + s * math.cos(ang), by + s * math.sin(ang)), 0) for s in np.linspace(0.01, 0.05, 5)]
    ray = [normalize(torus, FiberPoint(z, float(rs[-2]))) for z in ray]
    loop += ray + ray[::-1]
    loop += [normalize(torus, FiberPoint(z0, float(rs[-2]))), normalize(torus, FiberPoint(z0, float(rs[-1])))]
    return loop, turns


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
