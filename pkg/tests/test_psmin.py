import math

import numpy as np
import pytest

from gradedmin import (Bornology, Box, DriverConfig, EVPConfig, FlatSetting,
                       GradedPoint, ManifoldSetting, SeminormFamily,
                       cluster_point, estimate_compatibility, frechet_min_step,
                       graded_metric, manifold_min_step,
                       minimizing_sequence_driver, ps_check)
from gradedmin.errors import PreconditionError
from gradedmin.finsler import CompatibilityConstants
from gradedmin.library import expression_functional, make_functional
from gradedmin.psmin import (PSTolerances, SequenceGenerator,
                             escaping_generator, library_generators,
                             oscillating_generator, shrinking_generator)
from conftest import conformal_structure, flat_structure


def _pt(sid, coords):
    return GradedPoint(sid, np.asarray(coords, dtype=np.float64))


def _metric(fam):
    return lambda Y, xc: fam.metric_batch(Y, xc)


# ---------------------------------------------------------------------------
# cluster detection


def test_cluster_convergent_sequence(fam3):
    idx = np.arange(1, 65)
    pts = np.array([1.0, 0.0, 0.0])[None, :] / idx[:, None]
    c = cluster_point(pts, _metric(fam3), radius=0.05)
    assert c is not None
    assert fam3.metric_batch(c[None, :], np.zeros(3))[0] <= 0.05


def test_cluster_divergent_sequence(fam3):
    idx = np.arange(1, 65)
    pts = np.array([1.0, 0.0, 0.0])[None, :] * idx[:, None]
    assert cluster_point(pts, _metric(fam3), radius=0.05) is None


def test_cluster_alternating_lexicographic(fam3):
    a = np.array([-1.0, 0.0, 0.0])
    b = np.array([1.0, 0.0, 0.0])
    pts = np.array([a if i % 2 else b for i in range(64)])
    c = cluster_point(pts, _metric(fam3), radius=0.05)
    assert np.array_equal(c, a)  # both cluster; smaller point wins


def test_cluster_needs_16_points(fam3):
    with pytest.raises(PreconditionError):
        cluster_point(np.zeros((8, 3)), _metric(fam3), radius=0.1)


# ---------------------------------------------------------------------------
# ps_check


def test_ps_check_arctan_fails_at_sup_level():
    fam = SeminormFamily.from_rule("arctan", 1, 2, growth=0.0)
    f = make_functional("arctan", 1, name="arctan-flat")
    b = Bornology.spheres(fam, radii=(1.0,), samples=16, seed=0)
    setting = FlatSetting(fam, b)
    gens = library_generators(f, 1, known_min=None, horizon=64, seed=0)
    rep = ps_check(f, gens, "PS_c", 64, setting, level=math.pi / 2)
    assert rep.verdict == "FAIL"
    assert "escape" in rep.failure_sequence
    failing = [s for s in rep.sequences if s.name == rep.failure_sequence][0]
    assert failing.qualifying and failing.cluster is None


def test_ps_check_coercive_quadratic_passes(flat_fam, quad2):
    b = Bornology.spheres(flat_fam, radii=(1.0,), samples=16, seed=0)
    setting = FlatSetting(flat_fam, b)
    gens = library_generators(quad2, 2, known_min=[0.0, 0.0], horizon=64, seed=3)
    rep = ps_check(quad2, gens, "PS", 64, setting)
    assert rep.verdict == "PASS"
    qualifying = [s for s in rep.sequences if s.qualifying]
    assert qualifying, "at least one sequence must qualify"
    assert all(s.cluster is not None for s in qualifying)
    escape = [s for s in rep.sequences if s.name.startswith("escape")]
    assert all(not s.qualifying for s in escape)  # f unbounded along them


def test_ps_check_unbounded_growth_excluded():
    fam = SeminormFamily.from_rule("lin", 1, 2, growth=0.0)
    f = expression_functional("lin", "x0", 1)
    b = Bornology.spheres(fam, radii=(1.0,), samples=16, seed=0)
    gen = escaping_generator("ramp", np.array([1.0]))  # f(x_i) = i
    rep = ps_check(f, [gen], "PS", 64, FlatSetting(fam, b))
    assert rep.sequences[0].qualifying is False
    assert "grow" in rep.sequences[0].reason or "cap" in rep.sequences[0].reason


def test_ps_check_validates_input(flat_fam, quad2):
    b = Bornology.spheres(flat_fam, radii=(1.0,), samples=8, seed=0)
    setting = FlatSetting(flat_fam, b)
    with pytest.raises(PreconditionError):
        ps_check(quad2, [], "PS", 8, setting)
    with pytest.raises(ValueError):
        ps_check(quad2, [], "PS_c", 32, setting)  # missing level
    bad = SequenceGenerator("bad", lambda i: np.full((i.shape[0], 2), np.nan))
    with pytest.raises(ValueError):
        ps_check(quad2, [bad], "PS", 32, setting)


def test_generator_library_shapes(flat_fam, quad2):
    gens = library_generators(quad2, 2, known_min=[0.0, 0.0], horizon=32, seed=1)
    names = [g.name for g in gens]
    assert "shrink-to-min" in names and "descent-driven" in names
    assert sum(1 for n in names if n.startswith("escape")) == 4
    idx = np.arange(1, 33)
    for g in gens:
        assert g.points(idx).shape == (32, 2)


def test_oscillating_and_shrinking_rules():
    a, b = np.array([1.0]), np.array([-1.0])
    osc = oscillating_generator("o", a, b)
    pts = osc.points(np.arange(1, 9))
    assert set(pts.ravel()) == {1.0, -1.0}
    shr = shrinking_generator("s", np.zeros(1), np.array([2.0]))
    assert shr.points(np.array([4]))[0, 0] == pytest.approx(0.5)


# ---------------------------------------------------------------------------
# near-critical steps


def test_manifold_step_flat_quadratic():
    fam = SeminormFamily.from_rule("m1", 1, 2, growth=0.0)
    f = expression_functional("m1", "x0**2", 1, lower_bound=0.0)
    S = flat_structure(fam)
    consts = CompatibilityConstants("chart0", alpha=1.0, beta=2.0,
                                    region=Box.cube(1, 1.0))
    cert = manifold_min_step(f, S, 1.1, _pt("m1", [0.5]), consts,
                             EVPConfig(seed=0, grid_total=801,
                                       grid_half_width=2.0))
    assert cert.dual_bound == pytest.approx(1.1 ** 2 * 2.0)  # 2.42
    assert cert.bound_ok
    # measured dual equals the analytic |2 z| under the flat sup rule
    z = cert.point.coords[0]
    assert cert.dual_norms[0] == pytest.approx(2.0 * abs(z), rel=1e-9, abs=1e-12)
    assert cert.notes["rho_distance"] <= 1.1


def test_manifold_step_from_minimizer():
    fam = SeminormFamily.from_rule("m2", 1, 2, growth=0.0)
    f = expression_functional("m2", "x0**2", 1, lower_bound=0.0)
    S = flat_structure(fam)
    consts = CompatibilityConstants("chart0", alpha=1.0, beta=2.0,
                                    region=Box.cube(1, 1.0))
    cert = manifold_min_step(f, S, 1.5, _pt("m2", [0.0]), consts,
                             EVPConfig(seed=1, grid_total=801))
    assert abs(cert.point.coords[0]) <= 1e-9
    assert max(cert.dual_norms) <= 1e-8


def test_manifold_step_bound_monotone_in_theta():
    consts = CompatibilityConstants("c", alpha=1.0, beta=2.0,
                                    region=Box.cube(1, 1.0))
    bounds = [t * t * consts.beta / consts.alpha for t in (1.5, 1.2, 1.01)]
    assert bounds[0] > bounds[1] > bounds[2]
    assert bounds[-1] == pytest.approx(consts.beta / consts.alpha, rel=0.03)


def test_frechet_step_duals_below_bound(flat_fam, quad2):
    b = Bornology.spheres(flat_fam, radii=(1.0,), samples=32, seed=0)
    x = _pt(flat_fam.space_id, [0.06, 0.03])  # f = 0.0054 <= 0.01
    cert = frechet_min_step(quad2, flat_fam, b, 0.01, x, 3,
                            EVPConfig(seed=2, grid_total=2048))
    assert cert.bound_ok
    assert max(cert.dual_norms) <= 0.1 + 1e-6
    assert cert.notes["witness_valid"]


def test_frechet_step_from_minimizer(flat_fam, quad2):
    b = Bornology.spheres(flat_fam, radii=(1.0,), samples=16, seed=0)
    x = _pt(flat_fam.space_id, [0.0, 0.0])
    cert = frechet_min_step(quad2, flat_fam, b, 0.04, x, 3,
                            EVPConfig(seed=3, grid_total=1024))
    assert np.array_equal(cert.point.coords, x.coords)
    assert cert.bound_ok


def test_frechet_step_radius_scales_with_eps(flat_fam, quad2):
    b = Bornology.spheres(flat_fam, radii=(1.0,), samples=16, seed=0)
    for eps in (1.0, 0.01):
        x = _pt(flat_fam.space_id, [0.05, 0.05])
        cert = frechet_min_step(quad2, flat_fam, b, eps, x, 3,
                                EVPConfig(seed=4, grid_total=1024))
        p = flat_fam.table((cert.point.coords - x.coords)[None, :])[0]
        assert np.all(p < math.sqrt(eps))  # conclusion (2), 10x tighter at 0.01


def test_frechet_step_nonsmooth_functional():
    # not C1 at the minimizer, but the derivative-free search still lands a
    # witness and the symmetric difference reports a vanishing dual there
    fam = SeminormFamily.from_rule("kinkf", 1, 2, growth=0.0)
    f = make_functional("kinkf", 1, name="kink-abs")
    b = Bornology.spheres(fam, radii=(1.0,), samples=16, seed=0)
    x = _pt("kinkf", [0.03])
    cert = frechet_min_step(f, fam, b, 0.04, x, 2,
                            EVPConfig(seed=6, grid_total=1024))
    assert cert.bound_ok
    assert abs(cert.point.coords[0]) <= 0.03


def test_driver_per_step_dual_decay(flat_fam, quad2):
    # the measured dual at step i stays within the 1/sqrt(i) scale that the
    # minimum-attainment argument consumes
    b = Bornology.spheres(flat_fam, radii=(1.0,), samples=32, seed=0)
    res = minimizing_sequence_driver(quad2, FlatSetting(flat_fam, b),
                                     _pt(flat_fam.space_id, [0.5, 0.5]),
                                     i_max=25, cfg=DriverConfig(seed=9))
    assert all(s.dual_max <= 1.0 / math.sqrt(s.i) + 1e-6 for s in res.trace)


def test_certificate_replayable(flat_fam, quad2):
    b = Bornology.spheres(flat_fam, radii=(1.0,), samples=32, seed=0)
    setting = FlatSetting(flat_fam, b)
    x = _pt(flat_fam.space_id, [0.06, 0.03])
    cert = frechet_min_step(quad2, flat_fam, b, 0.01, x, 3,
                            EVPConfig(seed=5, grid_total=1024))
    assert quad2.value(cert.point) == pytest.approx(cert.value, abs=1e-9)
    replay = setting.dual_norms(quad2, cert.point)
    assert np.max(np.abs(replay - np.array(cert.dual_norms))) <= 1e-9


# ---------------------------------------------------------------------------
# driver


def test_driver_flat_quadratic_sanity(flat_fam, quad2):
    b = Bornology.spheres(flat_fam, radii=(1.0,), samples=32, seed=0)
    setting = FlatSetting(flat_fam, b)
    res = minimizing_sequence_driver(quad2, setting,
                                     _pt(flat_fam.space_id, [0.5, 0.5]),
                                     i_max=12, cfg=DriverConfig(seed=1))
    assert res.failure is None and res.certificate is not None
    cert = res.certificate
    assert cert.bound_ok
    assert all(s.f_value <= res.c_estimate + 1.0 / s.i + 1e-12
               for s in res.trace)
    origin = _pt(flat_fam.space_id, np.zeros(2))
    assert graded_metric(flat_fam, cert.point, origin) <= 1e-3


def test_driver_arctan_reports_ps_failure():
    fam = SeminormFamily.from_rule("arc2", 1, 2, growth=0.0)
    f = make_functional("arc2", 1, name="arctan-flat")
    b = Bornology.spheres(fam, radii=(1.0,), samples=16, seed=0)
    setting = FlatSetting(fam, b)
    res = minimizing_sequence_driver(f, setting, _pt("arc2", [0.0]), i_max=10,
                                     cfg=DriverConfig(seed=2))
    assert res.certificate is None
    assert res.cluster is None
    assert "PS-failure" in res.failure
    # escaping evidence: iterates run away monotonically
    xs = [s.point[0] for s in res.trace]
    assert xs[-1] < xs[0]


def test_driver_constant_functional(flat_fam):
    f = expression_functional(flat_fam.space_id, "2", 2, lower_bound=2.0)
    b = Bornology.spheres(flat_fam, radii=(1.0,), samples=16, seed=0)
    res = minimizing_sequence_driver(f, FlatSetting(flat_fam, b),
                                     _pt(flat_fam.space_id, [0.3, -0.4]),
                                     i_max=6, cfg=DriverConfig(seed=3))
    cert = res.certificate
    assert cert is not None
    assert max(cert.dual_norms) == 0.0
    assert cert.value == pytest.approx(2.0)


def test_driver_manifold_conformal():
    fam = SeminormFamily.from_rule("mc", 1, 2, growth=0.0)
    f = expression_functional("mc", "x0**2", 1, lower_bound=0.0)
    S = conformal_structure(fam, c0=1.0, c1=1.0)
    setting = ManifoldSetting(S)
    consts = estimate_compatibility(S, S.atlas[0], Box.cube(1, 1.0))
    res = minimizing_sequence_driver(
        f, setting, _pt("mc", [0.5]), i_max=8,
        cfg=DriverConfig(seed=4, evp=EVPConfig(max_iters=120, grid_total=257,
                                               grid_half_width=2.0)),
        consts=consts)
    assert res.certificate is not None
    assert abs(res.certificate.point.coords[0]) <= 0.05
    assert all(s.f_value <= res.c_estimate + 1.0 / s.i + 1e-12
               for s in res.trace)


def test_ps_check_manifold_excludes_atlas_escapers():
    fam = SeminormFamily.from_rule("mps", 1, 2, growth=0.0)
    f = expression_functional("mps", "x0**2", 1, lower_bound=0.0)
    S = conformal_structure(fam, half_width=8.0)
    gens = library_generators(f, 1, known_min=[0.0], horizon=64, seed=0)
    rep = ps_check(f, gens, "PS", 64, ManifoldSetting(S))
    escapers = [s for s in rep.sequences if s.name.startswith("escape")]
    assert escapers and all("atlas" in s.reason for s in escapers)
    assert rep.verdict == "PASS"  # coercive quadratic on the chart


def test_generator_from_driver_trace(flat_fam, quad2):
    from gradedmin.psmin import generator_from_driver
    b = Bornology.spheres(flat_fam, radii=(1.0,), samples=16, seed=0)
    res = minimizing_sequence_driver(quad2, FlatSetting(flat_fam, b),
                                     _pt(flat_fam.space_id, [0.4, 0.4]),
                                     i_max=16, cfg=DriverConfig(seed=7))
    gen = generator_from_driver("driver-iterates", res, horizon=32)
    pts = gen.points(np.arange(1, 33))
    assert pts.shape == (32, 2)
    assert np.array_equal(pts[0], np.array(res.trace[0].point))
    # driver iterates feed back into ps_check as a qualifying sequence
    rep = ps_check(quad2, [gen], "PS", 32, FlatSetting(flat_fam, b))
    assert rep.verdict == "PASS"
    assert rep.sequences[0].qualifying


def test_driver_requires_consts_for_manifold():
    fam = SeminormFamily.from_rule("mm", 1, 2, growth=0.0)
    f = expression_functional("mm", "x0**2", 1, lower_bound=0.0)
    S = conformal_structure(fam)
    with pytest.raises(PreconditionError):
        minimizing_sequence_driver(f, ManifoldSetting(S), _pt("mm", [0.1]),
                                   i_max=4)
