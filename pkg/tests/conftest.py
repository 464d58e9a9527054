import numpy as np
import pytest

from gradedmin import Box, Chart, FinslerStructure, SeminormFamily, TangentRule
from gradedmin.backends import active as kern
from gradedmin.library import make_functional


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger JIT compilation once so timed tests measure runtime only."""
    W = np.array([[1.0, 2.0], [1.0, 4.0]])
    X = np.array([[0.3, -0.2], [1.0, 0.5]])
    kern.seminorm_table(W, 0, X)
    kern.graded_metric_batch(W, 0, X, np.zeros(2))
    qx, qw = np.polynomial.legendre.leggauss(8)
    qx, qw = (qx + 1) / 2, qw / 2
    kern.curve_length(W, 0, 1, X, qx, qw, 1, 1.0, 1.0)
    kern.optimize_path(W, 0, 1, np.zeros(2), np.ones(2), 5, 1, 4, qx, qw, 0, 1.0, 0.0)
    kern.pseudometric_batch(W, 0, np.zeros(2), X, 5, 1, 4, qx, qw, 1, 1.0, 1.0)


@pytest.fixture
def fam3():
    """D=3, N=2, weighted-sup with the (1+k)^n table."""
    return SeminormFamily.from_rule("E3", 3, 2, growth=1.0)


@pytest.fixture
def flat_fam():
    """D=2, N=3, all seminorms equal to the sup norm."""
    return SeminormFamily.from_rule("F2", 2, 3, growth=0.0)


@pytest.fixture
def quad2(flat_fam):
    return make_functional(flat_fam.space_id, 2, name="quad2")


def flat_structure(family, half_width=8.0):
    chart = Chart("chart0", Box.cube(family.dim, half_width))
    return FinslerStructure(family, (chart,), TangentRule("flat"))


def conformal_structure(family, c0=1.0, c1=1.0, half_width=8.0):
    chart = Chart("chart0", Box.cube(family.dim, half_width))
    return FinslerStructure(family, (chart,), TangentRule("conformal", c0=c0, c1=c1))
