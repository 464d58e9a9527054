import numpy as np
import pytest
from numpy.testing import assert_allclose

from gradedmin import (Bornology, DifferenceScheme, GradedPoint,
                       SeminormFamily, check_c1, differential, dual_seminorm,
                       gateaux_derivative, point)
from gradedmin.calculus import (C1Config, DifferentialRep,
                                dual_resolution_check, dual_seminorm_max)
from gradedmin.errors import (EvaluationError, IndexRangeError,
                              SpaceMismatchError)
from gradedmin.library import expression_functional, make_functional
from gradedmin.util import Box

FD = DifferenceScheme(mode="finite-difference")


def _pt(fam, coords):
    return GradedPoint(fam.space_id, np.asarray(coords, dtype=np.float64))


def test_gateaux_trivial_values(flat_fam):
    f = expression_functional(flat_fam.space_id, "x0**2 + x1**2", 2)
    x = _pt(flat_fam, [1.0, 0.0])
    h = _pt(flat_fam, [0.0, 1.0])
    assert gateaux_derivative(f, x, h, FD, flat_fam) == pytest.approx(0.0, abs=1e-9)
    x2 = _pt(flat_fam, [1.0, 2.0])
    e0 = _pt(flat_fam, [1.0, 0.0])
    assert gateaux_derivative(f, x2, e0, FD, flat_fam) == pytest.approx(2.0, abs=1e-8)

    fam1 = SeminormFamily.from_rule("A1", 1, 2, growth=0.0)
    g = expression_functional("A1", "atan(x0)", 1)
    assert gateaux_derivative(g, _pt(fam1, [0.0]), _pt(fam1, [1.0]), FD, fam1) \
        == pytest.approx(1.0, abs=1e-9)


def test_differential_examples(flat_fam):
    f = expression_functional(flat_fam.space_id, "x0**2 + 2*x1**2", 2)
    d = differential(f, _pt(flat_fam, [1.0, 1.0]), FD, flat_fam)
    assert_allclose(d.basis_values, [2.0, 4.0], atol=1e-8)

    const = expression_functional(flat_fam.space_id, "3", 2)
    d0 = differential(const, _pt(flat_fam, [0.3, -2.0]), FD, flat_fam)
    assert_allclose(d0.basis_values, [0.0, 0.0], atol=1e-12)

    bil = expression_functional(flat_fam.space_id, "x0*x1", 2)
    db = differential(bil, _pt(flat_fam, [3.0, 5.0]), FD, flat_fam)
    assert_allclose(db.basis_values, [5.0, 3.0], atol=1e-8)


def test_differential_linearity(flat_fam):
    f = expression_functional(flat_fam.space_id, "x0**2 + sin(x1)", 2)
    x = _pt(flat_fam, [0.4, 0.9])
    h1 = _pt(flat_fam, [0.3, -1.0])
    h2 = _pt(flat_fam, [-0.7, 0.2])
    combo = _pt(flat_fam, 2.0 * h1.coords - 0.5 * h2.coords)
    lhs = gateaux_derivative(f, x, combo, FD, flat_fam)
    rhs = (2.0 * gateaux_derivative(f, x, h1, FD, flat_fam)
           - 0.5 * gateaux_derivative(f, x, h2, FD, flat_fam))
    assert lhs == pytest.approx(rhs, abs=1e-8)


def test_fd_matches_analytic_gradient(flat_fam):
    f = make_functional(flat_fam.space_id, 2, name="quad2")
    rng = np.random.default_rng(0)
    for coords in rng.uniform(-2, 2, (100, 2)):
        x = _pt(flat_fam, coords)
        d_fd = differential(f, x, FD, flat_fam).basis_values
        d_an = differential(f, x).basis_values  # prefer-analytic default
        denom = np.maximum(np.abs(d_an), 1.0)
        assert np.all(np.abs(d_fd - d_an) / denom <= 1e-6)


def test_richardson_consistency(flat_fam):
    f = expression_functional(flat_fam.space_id, "x0**3 - 2*x0*x1 + x1**2", 2)
    x = _pt(flat_fam, [0.7, -0.4])
    h = _pt(flat_fam, [1.0, 1.0])
    g1 = gateaux_derivative(f, x, h, DifferenceScheme("finite-difference", 1e-4))
    g2 = gateaux_derivative(f, x, h, DifferenceScheme("finite-difference", 5e-5))
    assert abs(g1 - g2) <= 1e-8


def test_prefer_analytic_shortcircuit(flat_fam):
    calls = []

    def fn(X):
        calls.append(X.shape[0])
        return (X ** 2).sum(axis=1)

    from gradedmin.calculus import Functional
    f = Functional(flat_fam.space_id, "probe", fn,
                   gradient=lambda X: 2.0 * X)
    d = differential(f, _pt(flat_fam, [1.0, 2.0]))
    assert_allclose(d.basis_values, [2.0, 4.0])
    assert calls == []  # analytic path never touched fn


def test_nonfinite_reports_step(flat_fam):
    f = expression_functional(flat_fam.space_id, "log(x0)", 2)
    x = _pt(flat_fam, [1e-6, 0.0])
    h = _pt(flat_fam, [1.0, 0.0])
    with pytest.raises(EvaluationError) as err:
        gateaux_derivative(f, x, h, FD, flat_fam)
    assert err.value.offending_step is not None


# ---------------------------------------------------------------------------
# dual seminorms


def test_dual_seminorm_zero_functional(fam3):
    b = Bornology.spheres(fam3, radii=(1.0,), samples=16, seed=0)
    L = DifferentialRep(fam3.space_id, _pt(fam3, np.zeros(3)), np.zeros(3))
    for name in b.names():
        for n in (1, 2):
            assert dual_seminorm(L, b, name, n) == 0.0


def test_dual_seminorm_ball_sup_oracle():
    # p_1 weighted-sup with weights (1, 2); L(h) = h_0.
    # Analytic sup over the unit ball is 1; oracle is a dense grid sup.
    fam = SeminormFamily.from_table("B2", [[1.0, 2.0]])
    gx, gy = np.meshgrid(np.linspace(-1, 1, 201), np.linspace(-0.5, 0.5, 201))
    cloud = np.stack([gx.ravel(), gy.ravel()], axis=1)
    inside = fam.table(cloud)[:, 0] <= 1.0
    b = Bornology.from_clouds(fam, {"ball": cloud[inside]})
    L = DifferentialRep("B2", _pt(fam, np.zeros(2)), np.array([1.0, 0.0]))
    val = dual_seminorm(L, b, "ball", 1)
    oracle = np.max(np.abs(cloud[inside] @ np.array([1.0, 0.0])))
    assert val == pytest.approx(oracle)
    assert val == pytest.approx(1.0, abs=1e-12)


def test_dual_seminorm_homogeneity_subadditivity_monotone(fam3):
    b = Bornology.spheres(fam3, radii=(1.0,), samples=24, seed=5)
    rng = np.random.default_rng(9)
    base = _pt(fam3, np.zeros(3))
    L1 = DifferentialRep(fam3.space_id, base, rng.standard_normal(3))
    L2 = DifferentialRep(fam3.space_id, base, rng.standard_normal(3))
    name = b.names()[0]
    v1 = dual_seminorm(L1, b, name, 1)
    assert dual_seminorm(L1.scaled(-2.5), b, name, 1) == pytest.approx(2.5 * v1)
    Ls = DifferentialRep(fam3.space_id, base, L1.basis_values + L2.basis_values)
    assert dual_seminorm(Ls, b, name, 1) <= v1 + dual_seminorm(L2, b, name, 1)
    # monotone under pointwise cloud inclusion (exact finite sups)
    big = b.get(name).points
    small = big[::2]
    b2 = Bornology.from_clouds(fam3, {"small": small, "big": big})
    assert dual_seminorm(L1, b2, "small", 1) <= dual_seminorm(L1, b2, "big", 1)


def test_dual_seminorm_n_independent_and_validated(fam3):
    b = Bornology.spheres(fam3, radii=(1.0,), samples=16, seed=2)
    L = DifferentialRep(fam3.space_id, _pt(fam3, np.zeros(3)),
                        np.array([0.3, -1.0, 0.2]))
    name = b.names()[0]
    assert dual_seminorm(L, b, name, 1) == dual_seminorm(L, b, name, 2)
    with pytest.raises(IndexRangeError):
        dual_seminorm(L, b, name, 3)
    with pytest.raises(KeyError):
        dual_seminorm(L, b, "nope", 1)
    Lx = DifferentialRep("other", GradedPoint("other", np.zeros(3)), np.zeros(3))
    with pytest.raises(SpaceMismatchError):
        dual_seminorm(Lx, b, name, 1)
    assert dual_seminorm_max(L, b) >= dual_seminorm(L, b, name, 1)


def test_dual_resolution_self_test(fam3):
    L = DifferentialRep(fam3.space_id, _pt(fam3, np.zeros(3)),
                        np.array([1.0, 0.5, -0.25]))
    for n in (1, 2):
        assert dual_resolution_check(L, fam3, n, samples=32, seed=4) < 1e-6


# ---------------------------------------------------------------------------
# C1 checking


def test_check_c1_polynomial_jump_shrinks(flat_fam):
    f = make_functional(flat_fam.space_id, 2, name="quad2")
    rep = check_c1(f, Box.cube(2, 1.0), C1Config(pairs=120, seed=1),
                   family=flat_fam)
    assert rep.passed
    assert rep.worst_jumps[1] < rep.worst_jumps[0]
    assert rep.worst_jumps[2] < rep.worst_jumps[1]


def test_check_c1_flags_kink():
    fam = SeminormFamily.from_rule("K1", 1, 2, growth=0.0)
    f = make_functional("K1", 1, name="kink-abs")
    rep = check_c1(f, Box.from_pairs([[-0.02, 0.02]]),
                   C1Config(pairs=150, delta=0.02, seed=0), family=fam)
    assert not rep.passed
    assert rep.worst_jumps[-1] > 1.0  # directional derivative jumps by ~2


def test_check_c1_constant_passes(flat_fam):
    f = expression_functional(flat_fam.space_id, "7", 2)
    rep = check_c1(f, Box.cube(2, 1.0), C1Config(pairs=60, seed=3),
                   family=flat_fam)
    assert rep.passed
    assert max(rep.worst_jumps) <= 1e-10
