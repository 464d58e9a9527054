"""Algorithmic variational principles with a-posteriori witness checks.

Both search procedures (the classical penalized form and the graded
sup-penalty form) share one engine:

  1. shrinking-radius sampling descent, where every accepted move y from
     x must satisfy the membership inequality f(y) + pen(y, x) <= f(x);
  2. a fixpoint polish on a fixed verification grid: while some grid
     point strictly dominates the current iterate in penalized value,
     jump to it (membership is preserved, f strictly decreases, so the
     loop terminates with every grid margin nonnegative);
  3. an optional direction polish along caller-supplied directions with
     shrinking steps, used to tighten the stall along bornology clouds.

The returned witness records the conclusion slacks actually measured,
never a claim of exactness: the domination conclusion ideally quantifies
over the whole space and is only grid-verified here, with the grid spec
embedded in the witness.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .calculus import Functional
from .errors import EvaluationError, PreconditionError
from .space import GradedPoint, SeminormFamily
from .util import Box, lexicographic_argmin

VALIDITY_MARGIN = -1e-9


@dataclass(frozen=True)
class EVPConfig:
    """Budgets for the penalized descent and its verification grid."""

    max_iters: int = 400
    samples: Optional[int] = None        # default 2*D + 32
    shrink: float = 0.7
    radius_init: float = 1.0
    radius_floor: float = 1e-9
    improve_tol: float = 1e-12
    seed: int = 0
    grid_half_width: float = 3.0
    grid_total: int = 10000
    polish_rounds: int = 12
    inf_half_width: float = 4.0
    inf_samples: int = 4096
    unbounded_floor: float = -1e12

    def __post_init__(self):
        if self.max_iters < 1 or (self.samples is not None and self.samples < 1):
            raise ValueError("budgets must be positive")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink factor must lie in (0, 1)")
        if self.improve_tol < 0 or self.radius_init <= 0:
            raise ValueError("bad tolerance/radius configuration")


@dataclass(frozen=True)
class TraceStep:
    kind: str            # "sample" | "grid" | "direction"
    radius: float
    point: np.ndarray
    f_value: float
    penalty_value: float
    slack: float         # f_before - f_after - penalty, >= 0 at acceptance


@dataclass(frozen=True)
class EkelandWitness:
    point: GradedPoint
    start: GradedPoint
    valid: bool
    conclusions: dict
    trace: tuple
    grid_center: np.ndarray
    grid_half_width: float
    grid_total: int
    inf_estimate: float
    params: dict


@dataclass(frozen=True)
class PenaltySpec:
    """Penalty used by a search, reusable by verify_witness."""

    kind: str                         # "ekeland" | "qiu"
    batch: Callable = field(repr=False)          # (Y, x_coords) -> (m,)
    sigma: Optional[Callable] = field(default=None, repr=False)
    params: dict = field(default_factory=dict)


def grid_points(center: np.ndarray, half_width: float, total: int) -> np.ndarray:
    return Box.cube(center.shape[0], half_width, center).grid(total)


def estimate_inf(f: Functional, center: np.ndarray, cfg: EVPConfig,
                 rng: np.random.Generator) -> float:
    """min(lower_bound, best sampled value) over the configured box."""
    box = Box.cube(center.shape[0], cfg.inf_half_width, center)
    vals = f.values(np.vstack([center[None, :], box.sample(rng, cfg.inf_samples)]))
    best = float(np.min(vals[np.isfinite(vals)]))
    if f.lower_bound is not None:
        return min(f.lower_bound, best)
    return best


def _guard_values(fy: np.ndarray, cfg: EVPConfig) -> np.ndarray:
    if np.any(fy < cfg.unbounded_floor):
        raise EvaluationError(
            f"functional decreased past the configured floor {cfg.unbounded_floor:g}; "
            "treating it as unbounded below")
    return np.isfinite(fy)


def _sample_descent(f, penalty, x, fx, cfg, rng, trace, stop_when=None):
    D = x.shape[0]
    n_samples = cfg.samples if cfg.samples is not None else 2 * D + 32
    axes = np.concatenate([np.eye(D), -np.eye(D)], axis=0)
    radius = cfg.radius_init
    for _ in range(cfg.max_iters):
        if radius < cfg.radius_floor:
            break
        if stop_when is not None and stop_when(fx):
            break
        cand = np.vstack([x + radius * rng.uniform(-1.0, 1.0, (n_samples, D)),
                          x + radius * axes])
        fy = f.values(cand)
        finite = _guard_values(fy, cfg)
        pen = penalty(cand, x)
        member = finite & (fy + pen <= fx) & (fy < fx - cfg.improve_tol)
        if np.any(member):
            j = lexicographic_argmin(cand[member], fy[member])
            idx = np.flatnonzero(member)[j]
            slack = fx - fy[idx] - pen[idx]
            x = cand[idx].copy()
            fx = float(fy[idx])
            trace.append(TraceStep("sample", radius, x.copy(), fx,
                                   float(pen[idx]), float(slack)))
        else:
            radius *= cfg.shrink
    return x, fx


def _grid_polish(f, penalty, x, fx, grid, fgrid, cfg, trace, visited):
    moved = False
    for _ in range(grid.shape[0]):
        pen = penalty(grid, x)
        margins = fgrid + pen - fx
        viol = (margins < 0) & np.isfinite(margins)
        viol &= ~np.all(grid == x, axis=1)
        if visited:
            viol[list(visited)] = False
        if not np.any(viol):
            break
        j = lexicographic_argmin(grid[viol], fgrid[viol])
        idx = int(np.flatnonzero(viol)[j])
        visited.add(idx)
        slack = fx - fgrid[idx] - pen[idx]
        x = grid[idx].copy()
        fx = float(fgrid[idx])
        trace.append(TraceStep("grid", 0.0, x.copy(), fx,
                               float(pen[idx]), float(slack)))
        moved = True
    return x, fx, moved


def _direction_polish(f, penalty, x, fx, dirs, cfg, trace):
    if dirs is None or len(dirs) == 0:
        return x, fx, False
    dirs = np.vstack([dirs, -np.asarray(dirs)])
    moved = False
    s = cfg.radius_init
    while s >= cfg.radius_floor:
        for _ in range(cfg.max_iters):
            cand = x + s * dirs
            fy = f.values(cand)
            finite = _guard_values(fy, cfg)
            pen = penalty(cand, x)
            member = finite & (fy + pen <= fx) & (fy < fx - cfg.improve_tol)
            if not np.any(member):
                break
            j = lexicographic_argmin(cand[member], fy[member])
            idx = np.flatnonzero(member)[j]
            slack = fx - fy[idx] - pen[idx]
            x = cand[idx].copy()
            fx = float(fy[idx])
            trace.append(TraceStep("direction", s, x.copy(), fx,
                                   float(pen[idx]), float(slack)))
            moved = True
        s *= cfg.shrink
    return x, fx, moved


def _run_engine(f: Functional, penalty, start: np.ndarray, cfg: EVPConfig,
                polish_directions=None):
    rng = np.random.default_rng(cfg.seed)
    trace = []
    fx0 = float(f.values(start[None, :])[0])
    x, fx = _sample_descent(f, penalty, start.copy(), fx0, cfg, rng, trace)
    grid = grid_points(start, cfg.grid_half_width, cfg.grid_total)
    fgrid = f.values(grid)
    _guard_values(fgrid, cfg)
    visited = set()
    for _ in range(cfg.polish_rounds):
        x, fx, moved_g = _grid_polish(f, penalty, x, fx, grid, fgrid, cfg,
                                      trace, visited)
        x, fx, moved_d = _direction_polish(f, penalty, x, fx,
                                           polish_directions, cfg, trace)
        if not (moved_g or moved_d):
            break
    return x, fx, fx0, grid, fgrid, trace


def _domination_margin(fgrid, pen_grid, grid, z, fz):
    margins = fgrid + pen_grid - fz
    not_self = ~np.all(grid == z, axis=1)
    live = not_self & np.isfinite(margins)
    if not np.any(live):
        return float("inf")
    return float(np.min(margins[live]))


def ekeland_search(f: Functional, metric_batch: Callable, x: GradedPoint,
                   a: float, b: float, cfg: EVPConfig = EVPConfig(),
                   polish_directions=None) -> EkelandWitness:
    """Search for a point dominating all others up to the ab * sigma penalty.

    Conclusions certified on return: (1) the value never increased,
    (2) sigma(witness, start) <= 1/b, (3) no grid point has
    f(y) + ab sigma(y, witness) <= f(witness). Classically a exceeds 1;
    anything positive is accepted because the manifold step drives it
    with a = theta^2 < 1.
    """
    x.require_space(f.space_id)
    if a <= 0 or b <= 0:
        raise PreconditionError("need a > 0 and b > 0")
    rng = np.random.default_rng(cfg.seed + 104729)
    inf_est = estimate_inf(f, x.coords, cfg, rng)
    fx0 = f.value(x)
    if fx0 > inf_est + a + 1e-12:
        raise PreconditionError(
            f"f(x) = {fx0:.6g} exceeds inf estimate {inf_est:.6g} + a = {a:g}")

    def penalty(Y, xc):
        return (a * b) * np.asarray(metric_batch(Y, xc))

    z, fz, _, grid, fgrid, trace = _run_engine(f, penalty, x.coords, cfg,
                                               polish_directions)
    sigma_zx = float(np.asarray(metric_batch(z[None, :], x.coords))[0])
    dom = _domination_margin(fgrid, penalty(grid, z), grid, z, fz)
    conclusions = {
        "value_decrease": {"slack": fx0 - fz, "ok": fx0 - fz >= VALIDITY_MARGIN},
        "distance": {"slack": 1.0 / b - sigma_zx, "sigma": sigma_zx,
                     "ok": 1.0 / b - sigma_zx >= VALIDITY_MARGIN},
        "domination": {"margin": dom, "ok": dom >= VALIDITY_MARGIN},
    }
    return EkelandWitness(
        point=GradedPoint(f.space_id, z), start=x,
        valid=all(c["ok"] for c in conclusions.values()),
        conclusions=conclusions, trace=tuple(trace), grid_center=x.coords.copy(),
        grid_half_width=cfg.grid_half_width, grid_total=cfg.grid_total,
        inf_estimate=inf_est,
        params={"kind": "ekeland", "a": float(a), "b": float(b)})


def qiu_penalty(family: SeminormFamily, lambdas: np.ndarray) -> Callable:
    lam = np.asarray(lambdas, dtype=np.float64)[:family.count]

    def penalty(Y, xc):
        return (family.table(np.atleast_2d(Y) - xc) * lam[None, :]).max(axis=1)

    return penalty


def qiu_search(f: Functional, family: SeminormFamily, x0: GradedPoint,
               eta: float, lambdas, i: int, cfg: EVPConfig = EVPConfig(),
               polish_directions=None) -> EkelandWitness:
    """Graded form: penalty sup_j lambda_j p_j, conclusions per index.

    Certifies (1) lambda_j p_j(z - x0) <= f(x0) - f(z) for j <= i,
    (2) p_j(z - x0) < eta / lambda_j strictly for j <= i, and (3) the
    grid form of: every x != z has some m with
    lambda_m p_m(x - z) + f(x) > f(z), via the sup over j <= N.
    """
    x0.require_space(f.space_id)
    lambdas = np.asarray(lambdas, dtype=np.float64)
    if eta <= 0 or np.any(lambdas <= 0):
        raise PreconditionError("eta and every lambda_j must be positive")
    if lambdas.shape[0] < family.count:
        raise PreconditionError(
            f"need at least N = {family.count} lambdas, got {lambdas.shape[0]}")
    family.check_index(i)
    rng = np.random.default_rng(cfg.seed + 104729)
    inf_est = estimate_inf(f, x0.coords, cfg, rng)
    fx0 = f.value(x0)
    if fx0 > inf_est + eta + 1e-12:
        raise PreconditionError(
            f"f(x0) = {fx0:.6g} exceeds inf estimate {inf_est:.6g} + eta = {eta:g}")

    penalty = qiu_penalty(family, lambdas)
    z, fz, _, grid, fgrid, trace = _run_engine(f, penalty, x0.coords, cfg,
                                               polish_directions)
    lam = lambdas[:family.count]
    p = family.table((z - x0.coords)[None, :])[0]
    chain_slack = float(np.min((fx0 - fz) - lam[:i] * p[:i]))
    prox_margin = float(np.min(eta / lam[:i] - p[:i]))
    dom = _domination_margin(fgrid, penalty(grid, z), grid, z, fz)
    conclusions = {
        "chain": {"slack": chain_slack, "ok": chain_slack >= VALIDITY_MARGIN},
        "proximity": {"margin": prox_margin, "ok": prox_margin > 0.0},
        "domination": {"margin": dom, "ok": dom >= VALIDITY_MARGIN},
    }
    return EkelandWitness(
        point=GradedPoint(f.space_id, z), start=x0,
        valid=all(c["ok"] for c in conclusions.values()),
        conclusions=conclusions, trace=tuple(trace), grid_center=x0.coords.copy(),
        grid_half_width=cfg.grid_half_width, grid_total=cfg.grid_total,
        inf_estimate=inf_est,
        params={"kind": "qiu", "eta": float(eta),
                "lambdas": [float(v) for v in lam], "i": int(i)})


@dataclass(frozen=True)
class VerificationReport:
    margins: dict
    min_margin: float
    valid: bool
    grid_points_used: int


def verify_witness(f: Functional, witness: EkelandWitness,
                   penalty: PenaltySpec, grid_half_width: float | None = None,
                   grid_total: int | None = None) -> VerificationReport:
    """Re-evaluate every conclusion inequality on the verification grid.

    The default grid is the one embedded in the witness, so a freshly
    returned witness verifies reproducibly; a caller may widen or refine
    the grid, in which case this is a new (stricter) surrogate check.
    """
    z = witness.point.coords
    start = witness.start.coords
    fz = f.value(witness.point)
    fstart = f.value(witness.start)
    grid = grid_points(witness.grid_center,
                       grid_half_width or witness.grid_half_width,
                       grid_total or witness.grid_total)
    fgrid = f.values(grid)
    dom = _domination_margin(fgrid, penalty.batch(grid, z), grid, z, fz)
    margins = {"domination": dom, "value_decrease": fstart - fz}
    if penalty.kind == "ekeland":
        b = penalty.params["b"]
        sigma = float(np.asarray(penalty.sigma(z[None, :], start))[0])
        margins["distance"] = 1.0 / b - sigma
        strict_ok = True
    else:
        family: SeminormFamily = penalty.params["family"]
        lam = np.asarray(penalty.params["lambdas"])[:family.count]
        eta = penalty.params["eta"]
        i = penalty.params["i"]
        p = family.table((z - start)[None, :])[0]
        margins["chain"] = float(np.min((fstart - fz) - lam[:i] * p[:i]))
        margins["proximity"] = float(np.min(eta / lam[:i] - p[:i]))
        strict_ok = margins["proximity"] > 0.0
    min_margin = min(margins.values())
    valid = min_margin >= VALIDITY_MARGIN and strict_ok
    return VerificationReport(margins=margins, min_margin=min_margin,
                              valid=valid, grid_points_used=grid.shape[0])
