"""Edge cases shared by both kernel backends."""

import numpy as np
import pytest

from gradedmin.backends import load_backend


def _quad(order=8):
    t, w = np.polynomial.legendre.leggauss(order)
    return (t + 1) / 2, w / 2


@pytest.fixture(params=["numba", "numpy"])
def kern(request):
    return load_backend(request.param)


def test_zero_weight_row_gives_zero_seminorm(kern):
    W = np.array([[0.0, 0.0], [1.0, 1.0]])
    X = np.array([[3.0, -4.0]])
    table = kern.seminorm_table(W, 0, X)
    assert table[0, 0] == 0.0
    assert table[0, 1] == 4.0
    assert kern.graded_metric_batch(np.zeros((2, 2)), 0, X, np.zeros(2))[0] == 0.0


def test_two_node_path_has_no_interior_moves(kern):
    qx, qw = _quad()
    W = np.array([[1.0, 2.0]])
    length, nodes = kern.optimize_path(W, 0, 0, np.zeros(2), np.array([1.0, 0.5]),
                                       2, 3, 10, qx, qw, 0, 1.0, 0.0)
    assert nodes.shape == (2, 2)
    assert length == pytest.approx(1.0)  # sup(1*1, 2*0.5)


def test_coincident_endpoints_short_circuit(kern):
    qx, qw = _quad()
    W = np.array([[1.0], [1.0]])
    Y = np.zeros((3, 1))
    out = kern.pseudometric_batch(W, 0, np.zeros(1), Y, 9, 2, 8, qx, qw,
                                  1, 1.0, 1.0)
    assert np.all(out == 0.0)


def test_single_seminorm_families(kern):
    W = np.array([[2.0, 0.5, 1.0]])
    X = np.array([[1.0, -2.0, 0.0], [0.0, 0.0, 0.0]])
    table = kern.seminorm_table(W, 1, X)  # weighted-sum
    assert table.shape == (2, 1)
    assert table[0, 0] == pytest.approx(2.0 + 1.0)
    assert table[1, 0] == 0.0


def test_sum_rule_curve_length(kern):
    qx, qw = _quad()
    W = np.array([[1.0, 1.0]])
    nodes = np.array([[0.0, 0.0], [1.0, 1.0]])
    val = kern.curve_length(W, 1, 0, nodes, qx, qw, 0, 1.0, 0.0)
    assert val == pytest.approx(2.0)
