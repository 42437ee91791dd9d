import os

import hypothesis
import numpy as np
import pytest

from ascg.objective import CompositeObjective, QuadraticFunction
from ascg.polyhedron import HPolytope

np.seterr(all="warn")

hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def unit_interval():
    return HPolytope([[1.0], [-1.0]], [1.0, 0.0])


@pytest.fixture
def shifted_square():
    """``f(x) = (x - 0.3)^2`` on the real line."""
    return CompositeObjective([[1.0]], [0.0], QuadraticFunction([[1.0]], [-0.6], 0.09))


def distance_objective(target, E=None, b=None):
    """``f(x) = |E x - target|^2 + <b, x>``."""
    target = np.asarray(target, dtype=float)
    k = target.shape[0]
    E = np.eye(k) if E is None else np.asarray(E, dtype=float)
    b = np.zeros(E.shape[1]) if b is None else b
    g = QuadraticFunction(np.eye(k), -2.0 * target, float(target @ target))
    return CompositeObjective(E, b, g)
