"""Chart-based Finsler structures on truncated graded spaces.

The tangent rules are a small library: the flat rule reuses the space
seminorms on every tangent space, the conformal rule scales them by a
continuous positive factor c(x) = c0 + c1 * p_1(x)^2. Curve lengths are
per-segment Gauss quadrature over piecewise-linear curves; pseudometrics
minimize length over a refinable node budget (coordinate descent with
golden-section line search); the bounded metric combines the graded
pseudometrics exactly like the space metric combines seminorms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .backends import active as _kern
from .calculus import DifferentialRep
from .errors import DegenerateInputError, DomainError, SpaceMismatchError
from .space import GradedPoint, SeminormFamily
from .util import Box


@dataclass(frozen=True)
class Chart:
    """Coordinate chart with closed-form inverse and Jacobian action.

    Points and curves are stored in chart coordinates; ``forward`` maps
    them to the model representation, ``backward`` inverts it on the
    domain box.
    """

    chart_id: str
    domain: Box
    kind: str = "identity"
    matrix: np.ndarray | None = field(default=None, repr=False)
    offset: np.ndarray | None = field(default=None, repr=False)
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("identity", "affine", "sinh"):
            raise ValueError(f"unknown chart kind {self.kind!r}")
        if self.kind == "affine":
            A = np.asarray(self.matrix, dtype=np.float64)
            b = (np.zeros(self.domain.dim) if self.offset is None
                 else np.asarray(self.offset, dtype=np.float64))
            if A.shape != (self.domain.dim, self.domain.dim):
                raise ValueError("affine chart needs a square matrix")
            if abs(np.linalg.det(A)) < 1e-12:
                raise ValueError("affine chart matrix is singular")
            object.__setattr__(self, "matrix", A)
            object.__setattr__(self, "offset", b)
        if self.kind == "sinh" and self.scale <= 0:
            raise ValueError("sinh chart scale must be positive")

    def forward(self, U) -> np.ndarray:
        U = np.atleast_2d(np.asarray(U, dtype=np.float64))
        if self.kind == "identity":
            return U.copy()
        if self.kind == "affine":
            return U @ self.matrix.T + self.offset
        return self.scale * np.sinh(U / self.scale)

    def backward(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if self.kind == "identity":
            return X.copy()
        if self.kind == "affine":
            return np.linalg.solve(self.matrix, (X - self.offset).T).T
        return self.scale * np.arcsinh(X / self.scale)

    def jacobian_apply(self, u, v) -> np.ndarray:
        u = np.asarray(u, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        if self.kind == "identity":
            return v.copy()
        if self.kind == "affine":
            return v @ self.matrix.T
        return np.cosh(u / self.scale) * v

    def contains(self, coords, atol: float = 1e-12) -> bool:
        return self.domain.contains(coords, atol=atol)


@dataclass(frozen=True)
class TangentRule:
    """x-dependence of the tangent seminorms: flat or conformal."""

    kind: str = "flat"
    c0: float = 1.0
    c1: float = 0.0

    def __post_init__(self):
        if self.kind not in ("flat", "conformal"):
            raise ValueError(f"unknown tangent rule {self.kind!r}")
        if self.kind == "conformal" and (self.c0 <= 0 or self.c1 < 0):
            raise ValueError("conformal factor needs c0 > 0 and c1 >= 0")

    @property
    def conf_code(self) -> int:
        return 0 if self.kind == "flat" else 1


@dataclass(frozen=True)
class PathOptConfig:
    """Node budget and line-search budget for the length minimization."""

    nodes: int = 17
    sweeps: int = 3
    gs_iters: int = 25
    quad_order: int = 8

    def __post_init__(self):
        if self.nodes < 2 or self.sweeps < 0 or self.gs_iters < 1:
            raise ValueError("path budgets must be positive (nodes >= 2)")

    def quadrature(self):
        t, w = np.polynomial.legendre.leggauss(self.quad_order)
        return (t + 1.0) / 2.0, w / 2.0


DEFAULT_PATH = PathOptConfig()


@dataclass(frozen=True)
class FinslerStructure:
    family: SeminormFamily
    atlas: tuple
    rule: TangentRule = TangentRule()

    def __post_init__(self):
        if not self.atlas:
            raise ValueError("atlas must contain at least one chart")

    @property
    def space_id(self) -> str:
        return self.family.space_id

    def chart_of(self, coords) -> Chart:
        for chart in self.atlas:
            if chart.contains(coords):
                return chart
        raise DomainError(
            f"point {np.asarray(coords)} outside every chart of the atlas")

    def conformal_factor(self, coords) -> float:
        if self.rule.kind == "flat":
            return 1.0
        p1 = self.family.seminorm(1, coords)
        return self.rule.c0 + self.rule.c1 * p1 * p1

    def tangent_norms(self, x_coords, V) -> np.ndarray:
        """Graded tangent norms ||v||^n_x for rows of V, shape (m, N)."""
        return self.conformal_factor(x_coords) * self.family.table(V)


@dataclass(frozen=True)
class Curve:
    """Piecewise-linear curve in the coordinates of one chart."""

    chart_id: str
    nodes: np.ndarray = field(repr=False)

    def __post_init__(self):
        nodes = np.atleast_2d(np.asarray(self.nodes, dtype=np.float64))
        if nodes.shape[0] < 2:
            raise ValueError("curve needs at least 2 nodes")
        if not np.all(np.isfinite(nodes)):
            raise ValueError("curve nodes must be finite")
        nodes = nodes.copy()
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)


@dataclass(frozen=True)
class CompatibilityConstants:
    """Two-sided equivalence p_n(x - y) within [alpha, beta] * rho(x, y)."""

    chart_id: str
    alpha: float
    beta: float
    region: Box

    def __post_init__(self):
        if not (0 < self.alpha <= self.beta):
            raise ValueError("need 0 < alpha <= beta")


def finsler_norm(S: FinslerStructure, x: GradedPoint, v: GradedPoint, n: int) -> float:
    x.require_space(S.space_id)
    v.require_space(S.space_id)
    S.family.check_index(n)
    S.chart_of(x.coords)
    return float(S.tangent_norms(x.coords, v.coords[None, :])[0, n - 1])


def curve_length(S: FinslerStructure, curve: Curve, n: int,
                 cfg: PathOptConfig = DEFAULT_PATH) -> float:
    """Integral of the n-th tangent norm of the velocity along the curve."""
    S.family.check_index(n)
    chart = next((c for c in S.atlas if c.chart_id == curve.chart_id), None)
    if chart is None:
        raise DomainError(f"curve chart {curve.chart_id!r} not in atlas")
    for row in curve.nodes:
        if not chart.contains(row, atol=1e-9):
            raise DomainError(f"curve node {row} outside chart {chart.chart_id!r}")
    qx, qw = cfg.quadrature()
    return float(_kern.curve_length(
        S.family.weights, S.family.kind_code, n - 1, curve.nodes, qx, qw,
        S.rule.conf_code, S.rule.c0, S.rule.c1))


def _require_same_chart(S: FinslerStructure, x: GradedPoint, y: GradedPoint) -> Chart:
    x.require_space(S.space_id)
    y.require_space(S.space_id)
    cx = S.chart_of(x.coords)
    if not cx.contains(y.coords):
        cy = S.chart_of(y.coords)
        raise DomainError(
            f"endpoints in different charts ({cx.chart_id!r} vs {cy.chart_id!r}); "
            "multi-chart paths are out of scope")
    return cx


def pseudometric(S: FinslerStructure, x: GradedPoint, y: GradedPoint, n: int,
                 cfg: PathOptConfig = DEFAULT_PATH) -> float:
    """d^n(x, y): best curve length over the piecewise-linear family."""
    S.family.check_index(n)
    _require_same_chart(S, x, y)
    if np.array_equal(x.coords, y.coords):
        return 0.0
    qx, qw = cfg.quadrature()
    length, _ = _kern.optimize_path(
        S.family.weights, S.family.kind_code, n - 1, x.coords, y.coords,
        cfg.nodes, cfg.sweeps, cfg.gs_iters, qx, qw,
        S.rule.conf_code, S.rule.c0, S.rule.c1)
    return float(length)


def pseudometric_table(S: FinslerStructure, x_coords, Y,
                       cfg: PathOptConfig = DEFAULT_PATH) -> np.ndarray:
    """d^n(x, y) for rows y of Y and every n, shape (m, N)."""
    qx, qw = cfg.quadrature()
    return _kern.pseudometric_batch(
        S.family.weights, S.family.kind_code, np.asarray(x_coords, dtype=np.float64),
        Y, cfg.nodes, cfg.sweeps, cfg.gs_iters, qx, qw,
        S.rule.conf_code, S.rule.c0, S.rule.c1)


def rho_batch(S: FinslerStructure, x_coords, Y,
              cfg: PathOptConfig = DEFAULT_PATH) -> np.ndarray:
    return _kern.metric_combine(pseudometric_table(S, x_coords, Y, cfg))


def finsler_metric(S: FinslerStructure, x: GradedPoint, y: GradedPoint,
                   cfg: PathOptConfig = DEFAULT_PATH) -> float:
    """rho(x, y) = sum over n of 2^-n d^n / (1 + d^n)."""
    _require_same_chart(S, x, y)
    if np.array_equal(x.coords, y.coords):
        return 0.0
    return float(rho_batch(S, x.coords, y.coords[None, :], cfg)[0])


@dataclass(frozen=True)
class AxiomCheckConfig:
    points: int = 48
    directions: int = 12
    sample_halfwidth: float = 1.0
    bisect_iters: int = 24
    degenerate_tol: float = 1e-12
    seed: int = 0


@dataclass(frozen=True)
class AxiomReport:
    K: float
    radius: float
    worst_ratio: float
    holds_at_max_radius: bool
    max_radius_tested: float
    samples: int


def verify_finsler_axioms(S: FinslerStructure, chart: Chart, x0: GradedPoint,
                          K: float, cfg: AxiomCheckConfig = AxiomCheckConfig(),
                          path_cfg: PathOptConfig = DEFAULT_PATH) -> AxiomReport:
    """Largest tested radius where the two-sided K-comparison of tangent
    norms against the base point holds on sampled points and directions.

    Report-based: the radius found by bisection is the certificate, with
    the worst norm ratio observed inside it.
    """
    if K <= 1:
        raise ValueError("K must exceed 1")
    x0.require_space(S.space_id)
    if not chart.contains(x0.coords):
        raise DomainError("base point outside the chart domain")
    rng = np.random.default_rng(cfg.seed)
    D = S.family.dim
    lo_box = np.maximum(chart.domain.lo, x0.coords - cfg.sample_halfwidth)
    hi_box = np.minimum(chart.domain.hi, x0.coords + cfg.sample_halfwidth)
    pts = rng.uniform(lo_box, hi_box, size=(cfg.points, D))
    rho = rho_batch(S, x0.coords, pts, path_cfg)
    V = rng.standard_normal((cfg.directions, D))
    V = np.concatenate([V, np.eye(D)], axis=0)
    base = S.tangent_norms(x0.coords, V)
    ratios = np.ones(cfg.points)
    for i in range(cfg.points):
        here = S.tangent_norms(pts[i], V)
        ok = (base > cfg.degenerate_tol) & (here > cfg.degenerate_tol)
        if np.any(ok):
            r = np.maximum(here[ok] / base[ok], base[ok] / here[ok])
            ratios[i] = float(r.max())

    def worst_within(r: float) -> float:
        inside = rho <= r
        return float(ratios[inside].max()) if np.any(inside) else 1.0

    r_max = float(rho.max()) if rho.size else 0.0
    if worst_within(r_max) <= K:
        return AxiomReport(K=K, radius=r_max, worst_ratio=worst_within(r_max),
                           holds_at_max_radius=True, max_radius_tested=r_max,
                           samples=cfg.points)
    lo, hi = 0.0, r_max
    for _ in range(cfg.bisect_iters):
        mid = 0.5 * (lo + hi)
        if worst_within(mid) <= K:
            lo = mid
        else:
            hi = mid
    return AxiomReport(K=K, radius=lo, worst_ratio=worst_within(lo),
                       holds_at_max_radius=False, max_radius_tested=r_max,
                       samples=cfg.points)


@dataclass(frozen=True)
class CompatConfig:
    pairs: int = 48
    degenerate_tol: float = 1e-12
    seed: int = 0


def estimate_compatibility(S: FinslerStructure, chart: Chart, region: Box,
                           cfg: CompatConfig = CompatConfig(),
                           path_cfg: PathOptConfig = DEFAULT_PATH) -> CompatibilityConstants:
    """Sampled envelope of p_n(x - y) / rho(x, y) over the region.

    alpha is the smallest observed ratio and beta the largest, so
    alpha * rho <= p_n(x - y) <= beta * rho on the sample.
    """
    if not (chart.contains(region.lo) and chart.contains(region.hi)):
        raise DomainError("region must sit inside the chart domain")
    rng = np.random.default_rng(cfg.seed)
    X = region.sample(rng, cfg.pairs)
    Y = region.sample(rng, cfg.pairs)
    ratios = []
    for i in range(cfg.pairs):
        rho = float(rho_batch(S, X[i], Y[i][None, :], path_cfg)[0])
        if rho <= cfg.degenerate_tol:
            continue
        pn = S.family.table((X[i] - Y[i])[None, :])[0]
        ratios.append(pn / rho)
    if not ratios:
        raise DegenerateInputError(
            "all sampled pairs had degenerate distance; cannot estimate constants")
    ratios = np.concatenate(ratios)
    alpha = float(ratios.min())
    beta = float(ratios.max())
    if alpha <= 0:
        raise DegenerateInputError(
            "degenerate seminorm directions give alpha = 0 on this region")
    return CompatibilityConstants(chart_id=chart.chart_id, alpha=alpha,
                                  beta=beta, region=region)


@dataclass(frozen=True)
class DualSamplerConfig:
    directions: int = 128
    corner_dim_limit: int = 10
    degenerate_tol: float = 1e-12
    pairing_tol: float = 1e-10
    seed: int = 0


@dataclass(frozen=True)
class DualNorm:
    value: float
    excluded_directions: int
    infinite: bool

    def __float__(self) -> float:
        return self.value


def dual_finsler_norm(S: FinslerStructure, w: DifferentialRep, x: GradedPoint,
                      n: int, cfg: DualSamplerConfig = DualSamplerConfig()) -> DualNorm:
    """Sampled dual norm sup { w(v) : ||v||^n_x = 1 }.

    Directions with zero tangent norm are excluded from the sup and
    counted; if w pairs nontrivially with one of them the true sup is
    unbounded and the value is +inf.
    """
    if w.space_id != S.space_id:
        raise SpaceMismatchError(
            f"differential in {w.space_id!r}, structure in {S.space_id!r}")
    x.require_space(S.space_id)
    S.family.check_index(n)
    S.chart_of(x.coords)
    D = S.family.dim
    rng = np.random.default_rng(cfg.seed)
    dirs = [np.eye(D), -np.eye(D)]
    if D <= cfg.corner_dim_limit:
        corners = np.array(np.meshgrid(*([[-1.0, 1.0]] * D),
                                       indexing="ij")).reshape(D, -1).T
        dirs.append(corners)
        # extreme points of the graded sup ball: signs / effective weights
        w_eff = S.family.weights[:n].max(axis=0)
        if S.family.kind == "weighted-sup" and np.all(w_eff > 0):
            dirs.append(corners / w_eff[None, :])
    dirs.append(rng.standard_normal((cfg.directions, D)))
    V = np.concatenate(dirs, axis=0)
    norms = S.tangent_norms(x.coords, V)[:, n - 1]
    pair = V @ w.basis_values
    degenerate = norms <= cfg.degenerate_tol
    excluded = int(np.count_nonzero(degenerate))
    if np.any(np.abs(pair[degenerate]) > cfg.pairing_tol):
        return DualNorm(value=float("inf"), excluded_directions=excluded,
                        infinite=True)
    live = ~degenerate
    if not np.any(live):
        raise DegenerateInputError(
            f"every sampled direction is degenerate for ||.||^{n}_x")
    value = float(np.max(np.abs(pair[live]) / norms[live]))
    return DualNorm(value=value, excluded_directions=excluded, infinite=False)


def dual_finsler_norms_all(S: FinslerStructure, w: DifferentialRep,
                           x: GradedPoint,
                           cfg: DualSamplerConfig = DualSamplerConfig()) -> np.ndarray:
    return np.array([dual_finsler_norm(S, w, x, n, cfg).value
                     for n in range(1, S.family.count + 1)])
