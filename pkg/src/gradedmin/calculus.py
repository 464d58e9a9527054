"""Directional differentiation and bornology dual seminorms.

Functionals evaluate in batch (rows of coordinates in, values out), which
keeps the difference stencils, grid verifications, and search loops one
call each. The derivative at a point in a direction is the numerical
limit of (f(x+th) - f(x))/t, computed as a Richardson-extrapolated
central difference unless an analytic gradient is attached and preferred.

Dual seminorms follow the sup-over-a-bounded-set construction: for a
real-valued target the inner seminorm is absolute value for every index,
so the value is independent of n. The index argument is kept anyway so
the call shape matches the general vector-valued form.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import EvaluationError, IndexRangeError, SpaceMismatchError
from .space import Bornology, GradedPoint, SeminormFamily
from .util import Box


@dataclass(frozen=True)
class Functional:
    """Real-valued functional on one declared space.

    ``fn`` maps an (m, D) batch of coordinate rows to (m,) values;
    ``gradient`` (optional) maps the same batch to (m, D) analytic
    gradient rows.
    """

    space_id: str
    name: str
    fn: Callable = field(repr=False)
    gradient: Optional[Callable] = field(default=None, repr=False)
    lower_bound: Optional[float] = None

    def values(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out = np.asarray(self.fn(X), dtype=np.float64).reshape(X.shape[0])
        return out

    def value(self, x: GradedPoint) -> float:
        x.require_space(self.space_id)
        return float(self.values(x.coords[None, :])[0])

    def gradient_rows(self, X) -> np.ndarray:
        if self.gradient is None:
            raise ValueError(f"functional {self.name!r} has no analytic gradient")
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.asarray(self.gradient(X), dtype=np.float64).reshape(X.shape)


@dataclass(frozen=True)
class DifferentialRep:
    """Linear functional df(x) stored by its values on basis directions."""

    space_id: str
    base_point: GradedPoint
    basis_values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.basis_values, dtype=np.float64).copy()
        v.setflags(write=False)
        object.__setattr__(self, "basis_values", v)

    def __call__(self, h) -> float:
        h = h.coords if isinstance(h, GradedPoint) else np.asarray(h)
        return float(self.basis_values @ h)

    def apply_batch(self, H) -> np.ndarray:
        return np.atleast_2d(np.asarray(H)) @ self.basis_values

    def scaled(self, t: float) -> "DifferentialRep":
        return replace(self, basis_values=t * self.basis_values)


@dataclass(frozen=True)
class DifferenceScheme:
    """Central differences with one Richardson step.

    Base step is 1e-4 scaled by (1 + p_1(x)) when a family is supplied,
    else by (1 + max|x_k|). ``prefer-analytic`` short-circuits to the
    attached gradient when one exists.
    """

    mode: str = "prefer-analytic"
    base_step: float = 1e-4

    def __post_init__(self):
        if self.mode not in ("prefer-analytic", "finite-difference"):
            raise ValueError(f"unknown scheme mode {self.mode!r}")
        if self.base_step <= 0:
            raise ValueError("base_step must be positive")

    def step_at(self, coords, family: SeminormFamily | None) -> float:
        if family is not None:
            scale = family.seminorm(1, coords)
        else:
            scale = float(np.max(np.abs(coords), initial=0.0))
        return self.base_step * (1.0 + scale)


DEFAULT_SCHEME = DifferenceScheme()


def _check_spaces(f: Functional, *pts: GradedPoint) -> None:
    for p in pts:
        p.require_space(f.space_id)


def _finite_or_raise(vals: np.ndarray, steps) -> None:
    bad = ~np.isfinite(vals)
    if np.any(bad):
        t = steps[int(np.argmax(bad))]
        raise EvaluationError(
            f"non-finite functional value in difference stencil at t={t:g}",
            offending_step=t)


def gateaux_derivative(f: Functional, x: GradedPoint, h: GradedPoint,
                       scheme: DifferenceScheme = DEFAULT_SCHEME,
                       family: SeminormFamily | None = None) -> float:
    """Directional derivative of f at x along h."""
    _check_spaces(f, x, h)
    if f.gradient is not None and scheme.mode == "prefer-analytic":
        return float(f.gradient_rows(x.coords[None, :])[0] @ h.coords)
    t = scheme.step_at(x.coords, family)
    stencil = np.stack([
        x.coords + t * h.coords, x.coords - t * h.coords,
        x.coords + 0.5 * t * h.coords, x.coords - 0.5 * t * h.coords,
    ])
    vals = f.values(stencil)
    _finite_or_raise(vals, [t, t, 0.5 * t, 0.5 * t])
    d_t = (vals[0] - vals[1]) / (2.0 * t)
    d_half = (vals[2] - vals[3]) / t
    return float((4.0 * d_half - d_t) / 3.0)


def differential(f: Functional, x: GradedPoint,
                 scheme: DifferenceScheme = DEFAULT_SCHEME,
                 family: SeminormFamily | None = None) -> DifferentialRep:
    """Assemble df(x) on the basis directions; linearity extends it."""
    _check_spaces(f, x)
    D = x.coords.shape[0]
    if f.gradient is not None and scheme.mode == "prefer-analytic":
        g = f.gradient_rows(x.coords[None, :])[0]
        return DifferentialRep(f.space_id, x, g)
    t = scheme.step_at(x.coords, family)
    eye = np.eye(D)
    stencil = np.concatenate([
        x.coords[None, :] + t * eye, x.coords[None, :] - t * eye,
        x.coords[None, :] + 0.5 * t * eye, x.coords[None, :] - 0.5 * t * eye,
    ])
    vals = f.values(stencil)
    _finite_or_raise(vals, [t] * (2 * D) + [0.5 * t] * (2 * D))
    vp, vm, hp, hm = vals[:D], vals[D:2 * D], vals[2 * D:3 * D], vals[3 * D:]
    d_t = (vp - vm) / (2.0 * t)
    d_half = (hp - hm) / t
    return DifferentialRep(f.space_id, x, (4.0 * d_half - d_t) / 3.0)


def dual_seminorm(L: DifferentialRep, b: Bornology, set_name: str, n: int) -> float:
    """P_B^n(L): sup of |L(e)| over the named catalog cloud.

    For the real-valued target every inner seminorm is absolute value, so
    the result does not depend on n; the index is validated and accepted
    for call-shape fidelity.
    """
    if L.space_id != b.space_id:
        raise SpaceMismatchError(
            f"differential in {L.space_id!r}, bornology in {b.space_id!r}")
    if not 1 <= n <= b.count:
        raise IndexRangeError(f"seminorm index {n} outside 1..{b.count}")
    cloud = b.get(set_name).points
    if cloud.shape[0] == 0:
        return 0.0
    return float(np.max(np.abs(cloud @ L.basis_values)))


def dual_seminorm_max(L: DifferentialRep, b: Bornology) -> float:
    """Max of P_B^n(L) over every catalog set (the dual-decay scalar)."""
    return max(dual_seminorm(L, b, name, 1) for name in b.names())


def dual_resolution_check(L: DifferentialRep, family: SeminormFamily, n: int,
                          samples: int = 48, seed: int = 0) -> float:
    """Convergence self-test for the cloud-resolution knob.

    Returns |sup at resolution 2*samples - sup at samples| for the unit
    sphere cloud of p_n; the deterministic extreme points keep this at
    zero for linear functionals under the sup rule.
    """
    outs = []
    for s in (samples, 2 * samples):
        b = Bornology.spheres(family, radii=(1.0,), samples=s, seed=seed)
        outs.append(dual_seminorm(L, b, f"sphere-p{n}-r1", n))
    return abs(outs[1] - outs[0])


@dataclass(frozen=True)
class C1Config:
    pairs: int = 200
    delta: float = 0.05
    refinements: int = 2
    shrink_factor: float = 0.75
    abs_tol: float = 1e-8
    seed: int = 0


@dataclass(frozen=True)
class C1Report:
    deltas: tuple
    worst_jumps: tuple
    worst_pair: tuple
    passed: bool
    note: str


def check_c1(f: Functional, region: Box, cfg: C1Config = C1Config(),
             scheme: DifferenceScheme = DEFAULT_SCHEME,
             family: SeminormFamily | None = None) -> C1Report:
    """Sampled surrogate for joint continuity of (x, h) -> df(x)(h).

    Perturbs base point and direction together by delta and records the
    worst observed jump of the directional derivative, then refines delta.
    Passing means the worst jump shrinks under refinement (or is already
    below ``abs_tol``); a kink keeps the jump pinned and is flagged.
    """
    rng = np.random.default_rng(cfg.seed)
    D = region.dim
    fd = DifferenceScheme(mode="finite-difference", base_step=scheme.base_step)
    mids = np.vstack([0.5 * (region.lo + region.hi),
                      region.sample(rng, cfg.pairs - 1)])
    dirs_h = rng.uniform(-1.0, 1.0, size=(cfg.pairs, D))
    dirs_u = rng.uniform(-1.0, 1.0, size=(cfg.pairs, D))
    dirs_w = rng.uniform(-1.0, 1.0, size=(cfg.pairs, D))

    def one_level(delta: float):
        worst = 0.0
        worst_pair = None
        for i in range(cfg.pairs):
            xa = GradedPoint(f.space_id, mids[i] - 0.5 * delta * dirs_u[i])
            xb = GradedPoint(f.space_id, mids[i] + 0.5 * delta * dirs_u[i])
            ha = GradedPoint(f.space_id, dirs_h[i] - 0.5 * delta * dirs_w[i])
            hb = GradedPoint(f.space_id, dirs_h[i] + 0.5 * delta * dirs_w[i])
            ga = gateaux_derivative(f, xa, ha, fd, family)
            gb = gateaux_derivative(f, xb, hb, fd, family)
            jump = abs(gb - ga)
            if jump > worst:
                worst = jump
                worst_pair = (mids[i].copy(), dirs_h[i].copy(), jump)
        return worst, worst_pair

    deltas = [cfg.delta * (0.5 ** r) for r in range(cfg.refinements + 1)]
    jumps = []
    worst_pair = None
    for d in deltas:
        w, pair = one_level(d)
        jumps.append(w)
        if worst_pair is None or (pair is not None and pair[2] > worst_pair[2]):
            worst_pair = pair
    shrinks = all(jumps[r + 1] <= max(cfg.shrink_factor * jumps[r], cfg.abs_tol)
                  for r in range(len(jumps) - 1))
    passed = shrinks or jumps[-1] <= cfg.abs_tol
    return C1Report(
        deltas=tuple(deltas), worst_jumps=tuple(jumps),
        worst_pair=worst_pair, passed=passed,
        note="sampled modulus-of-continuity surrogate; jumps should shrink "
             "with the mesh for a jointly continuous differential")
