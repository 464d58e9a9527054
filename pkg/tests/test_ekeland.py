import dataclasses

import numpy as np
import pytest

from gradedmin import (EVPConfig, GradedPoint, PenaltySpec, SeminormFamily,
                       ekeland_search, qiu_search, verify_witness)
from gradedmin.ekeland import qiu_penalty
from gradedmin.errors import EvaluationError, PreconditionError
from gradedmin.library import expression_functional, make_functional


def _fam1(sid="X1"):
    return SeminormFamily.from_rule(sid, 1, 2, growth=0.0)


def _abs_metric(Y, xc):
    return np.abs(np.atleast_2d(Y) - xc).max(axis=1)


def _pt(sid, coords):
    return GradedPoint(sid, np.asarray(coords, dtype=np.float64))


@pytest.fixture
def quad1d():
    _fam1()
    return expression_functional("X1", "x0**2", 1, lower_bound=0.0)


def test_ekeland_quadratic_witness(quad1d):
    # f = x^2, start 1, a = 2, b = 1, sigma = |x - y|
    cfg = EVPConfig(seed=0, grid_half_width=3.0, grid_total=10000)
    w = ekeland_search(quad1d, _abs_metric, _pt("X1", [1.0]), 2.0, 1.0, cfg)
    assert w.valid
    z = w.point.coords[0]
    assert 0.0 <= z <= 1.0
    assert abs(z - 1.0) <= 1.0  # conclusion (2) with sigma = |.|
    for c in w.conclusions.values():
        assert c["ok"]
    # brute-force grid re-check of conclusion (3)
    ys = np.linspace(-3, 3, 10001)
    margins = ys ** 2 + 2.0 * np.abs(ys - z) - z ** 2
    margins = margins[np.abs(ys - z) > 0]
    assert margins.min() >= -1e-9


def test_ekeland_constant_functional():
    fam = _fam1("XC")
    f = expression_functional("XC", "5", 1, lower_bound=5.0)
    w = ekeland_search(f, _abs_metric, _pt("XC", [0.7]), 2.0, 1.0,
                       EVPConfig(seed=1, grid_total=512))
    assert w.valid
    assert w.point.coords[0] == pytest.approx(0.7)


def test_ekeland_from_minimizer(quad1d):
    w = ekeland_search(quad1d, _abs_metric, _pt("X1", [0.0]), 2.0, 1.0,
                       EVPConfig(seed=2, grid_total=512))
    assert w.valid
    assert w.point.coords[0] == pytest.approx(0.0, abs=1e-12)


def test_descent_invariant_trace(quad1d):
    w = ekeland_search(quad1d, _abs_metric, _pt("X1", [1.0]), 2.0, 1.0,
                       EVPConfig(seed=3, grid_total=2048))
    fvals = [quad1d.value(w.start)] + [s.f_value for s in w.trace]
    assert all(b <= a + 1e-15 for a, b in zip(fvals, fvals[1:]))
    prev = w.start.coords
    for step in w.trace:
        pen = 2.0 * _abs_metric(step.point[None, :], prev)[0]
        f_prev = quad1d.values(prev[None, :])[0]
        # membership inequality exactly as logged
        assert step.f_value + pen <= f_prev + 1e-15
        assert step.slack == pytest.approx(f_prev - step.f_value - pen, abs=1e-12)
        prev = step.point


def test_budget_monotonicity(quad1d):
    f_at = {}
    for iters in (30, 60):
        cfg = EVPConfig(seed=4, max_iters=iters, grid_total=512)
        w = ekeland_search(quad1d, _abs_metric, _pt("X1", [1.0]), 2.0, 1.0, cfg)
        f_at[iters] = quad1d.value(w.point)
    assert f_at[60] <= f_at[30] + 1e-12


def test_witness_validity_independent_of_seed(quad1d):
    pen = PenaltySpec(kind="ekeland",
                      batch=lambda Y, xc: 2.0 * _abs_metric(Y, xc),
                      sigma=_abs_metric, params={"a": 2.0, "b": 1.0})
    for seed in range(10):
        w = ekeland_search(quad1d, _abs_metric, _pt("X1", [1.0]), 2.0, 1.0,
                           EVPConfig(seed=seed, grid_total=2048))
        assert w.valid
        rep = verify_witness(quad1d, w, pen)
        assert rep.valid and rep.min_margin >= -1e-9


def test_verify_witness_rejects_perturbed(quad1d):
    w = ekeland_search(quad1d, _abs_metric, _pt("X1", [1.0]), 2.0, 1.0,
                       EVPConfig(seed=5, grid_total=2048))
    pen = PenaltySpec(kind="ekeland",
                      batch=lambda Y, xc: 2.0 * _abs_metric(Y, xc),
                      sigma=_abs_metric, params={"a": 2.0, "b": 1.0})
    assert verify_witness(quad1d, w, pen).valid
    # shift the witness 0.5 toward higher f: domination must now fail
    bad = dataclasses.replace(w, point=_pt("X1", w.point.coords + 0.5))
    rep = verify_witness(quad1d, bad, pen)
    assert not rep.valid
    assert rep.margins["domination"] < 0


def test_verify_witness_minimizer_always_valid(quad1d):
    w = ekeland_search(quad1d, _abs_metric, _pt("X1", [0.5]), 2.0, 1.0,
                       EVPConfig(seed=6, grid_total=2048))
    forced = dataclasses.replace(w, point=_pt("X1", [0.0]))
    pen = PenaltySpec(kind="ekeland",
                      batch=lambda Y, xc: 2.0 * _abs_metric(Y, xc),
                      sigma=_abs_metric, params={"a": 2.0, "b": 1.0})
    assert verify_witness(quad1d, forced, pen).valid


def test_ekeland_preconditions(quad1d):
    with pytest.raises(PreconditionError):
        ekeland_search(quad1d, _abs_metric, _pt("X1", [1.0]), -1.0, 1.0)
    with pytest.raises(PreconditionError):
        # f(x) = 100 > inf + a = 2
        ekeland_search(quad1d, _abs_metric, _pt("X1", [10.0]), 2.0, 1.0)


def test_unbounded_below_detection():
    _fam1("XU")
    f = expression_functional("XU", "-x0**3", 1)
    cfg = EVPConfig(seed=7, unbounded_floor=-50.0, grid_total=256,
                    grid_half_width=8.0, inf_half_width=0.5, radius_init=4.0)
    with pytest.raises(EvaluationError):
        ekeland_search(f, _abs_metric, _pt("XU", [0.0]), 10.0, 1.0, cfg)


# ---------------------------------------------------------------------------
# Qiu form


def test_qiu_quadratic_witness(flat_fam, quad2):
    x0 = _pt(flat_fam.space_id, [0.1, 0.1])
    cfg = EVPConfig(seed=0, grid_total=10000, grid_half_width=3.0)
    w = qiu_search(quad2, flat_fam, x0, eta=0.04, lambdas=[0.2, 0.2, 0.2],
                   i=3, cfg=cfg)
    assert w.valid
    p = flat_fam.table((w.point.coords - x0.coords)[None, :])[0]
    assert np.all(p < 0.04 / 0.2)  # conclusion (2): p_j < eta / lambda_j
    fz = quad2.value(w.point)
    fx0 = quad2.value(x0)
    assert np.all(0.2 * p <= fx0 - fz + 1e-15)  # conclusion (1)
    # grid re-check of conclusion (3) with the sup penalty
    grid = np.stack(np.meshgrid(np.linspace(-2.9, 3.1, 100),
                                np.linspace(-2.9, 3.1, 100),
                                indexing="ij"), axis=-1).reshape(-1, 2)
    pen = qiu_penalty(flat_fam, np.array([0.2, 0.2, 0.2]))(grid, w.point.coords)
    margins = quad2.values(grid) + pen - fz
    keep = ~np.all(grid == w.point.coords, axis=1)
    assert margins[keep].min() >= -1e-9


def test_qiu_from_minimizer(flat_fam, quad2):
    x0 = _pt(flat_fam.space_id, [0.0, 0.0])
    w = qiu_search(quad2, flat_fam, x0, eta=0.1, lambdas=np.full(3, 0.3), i=2,
                   cfg=EVPConfig(seed=1, grid_total=1024))
    assert w.valid
    assert np.array_equal(w.point.coords, x0.coords)
    assert w.conclusions["chain"]["slack"] == pytest.approx(0.0)


def test_qiu_eta_scaling_bound(flat_fam, quad2):
    # conclusion (2) bound is eta / lambda_j: halving eta halves it
    for eta in (0.04, 0.02):
        x0 = _pt(flat_fam.space_id, [0.05, 0.05])
        w = qiu_search(quad2, flat_fam, x0, eta=eta, lambdas=np.full(3, 0.2),
                       i=3, cfg=EVPConfig(seed=2, grid_total=1024))
        p = flat_fam.table((w.point.coords - x0.coords)[None, :])[0]
        assert np.all(p < eta / 0.2)


def test_qiu_verify_witness_roundtrip(flat_fam, quad2):
    x0 = _pt(flat_fam.space_id, [0.1, -0.05])
    w = qiu_search(quad2, flat_fam, x0, eta=0.05, lambdas=np.full(3, 0.25),
                   i=3, cfg=EVPConfig(seed=8, grid_total=2048))
    pen = PenaltySpec(kind="qiu",
                      batch=qiu_penalty(flat_fam, np.full(3, 0.25)),
                      params={"family": flat_fam, "eta": 0.05,
                              "lambdas": np.full(3, 0.25), "i": 3})
    rep = verify_witness(quad2, w, pen)
    assert rep.valid == w.valid
    assert rep.margins["domination"] == pytest.approx(
        w.conclusions["domination"]["margin"])


def test_qiu_preconditions(flat_fam, quad2):
    x0 = _pt(flat_fam.space_id, [0.1, 0.1])
    with pytest.raises(PreconditionError):
        qiu_search(quad2, flat_fam, x0, eta=-1.0, lambdas=np.full(3, 0.2), i=2)
    with pytest.raises(PreconditionError):
        qiu_search(quad2, flat_fam, x0, eta=0.5, lambdas=[0.2, 0.2], i=2)
    with pytest.raises(PreconditionError):
        far = _pt(flat_fam.space_id, [3.0, 3.0])
        qiu_search(quad2, flat_fam, far, eta=0.01, lambdas=np.full(3, 0.1), i=2)
