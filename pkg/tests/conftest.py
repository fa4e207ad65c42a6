import itertools

import numpy as np
import pytest

from ppt import Configuration, IntensityMeasure, SeedSpec, Window


@pytest.fixture
def unit_window():
    return Window([0.0], [1.0])


@pytest.fixture
def lebesgue(unit_window):
    return IntensityMeasure.uniform(unit_window, 1.0, label="const:1")


@pytest.fixture
def seed():
    return SeedSpec(20_250_808)


def config(coords, window):
    return Configuration(np.atleast_2d(np.asarray(coords, float)).reshape(-1, window.dim), window)


def brute_force_assignment(C):
    """Factorial enumeration oracle: optimal cost over all permutations."""
    n = C.shape[0]
    best = None
    for perm in itertools.permutations(range(n)):
        cost = 0.0
        for i in range(n):
            cost += float(C[i, perm[i]])
        if best is None or cost < best:
            best = cost
    return best
