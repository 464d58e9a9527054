"""Palais-Smale checking and certified minimizing-sequence drivers.

The PS hypotheses quantify over all sequences; here they are tested
against a library of sequence generators, and "has a convergent
subsequence" is operationalized as tail covering: a candidate point
whose metric ball captures at least half of the sequence tail, persisting
when the radius is halved. Verdicts are therefore finite-horizon
surrogates and say so.

The near-critical constructions chain the variational searches with dual
norm measurements: the manifold step certifies the theta^2 * beta/alpha
dual bound from the estimated compatibility constants, the graded-space
step certifies the sqrt(eps) dual bound over every bornology catalog set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .calculus import (DEFAULT_SCHEME, DifferenceScheme, Functional,
                       differential, dual_seminorm)
from .ekeland import (EVPConfig, EkelandWitness, _sample_descent, ekeland_search,
                      estimate_inf, qiu_search)
from .errors import PreconditionError
from .finsler import (DEFAULT_PATH, CompatibilityConstants, DualSamplerConfig,
                      FinslerStructure, PathOptConfig, dual_finsler_norms_all,
                      rho_batch)
from .space import Bornology, GradedPoint, SeminormFamily
from .util import check_finite

FD_TOLERANCE = 1e-6


# ---------------------------------------------------------------------------
# settings: where distances and dual norms come from


@dataclass(frozen=True)
class FlatSetting:
    """Graded-space setting: metric from the seminorms, duals from Eq-style
    sups over the bornology catalog."""

    family: SeminormFamily
    bornology: Bornology
    scheme: DifferenceScheme = DEFAULT_SCHEME

    @property
    def space_id(self) -> str:
        return self.family.space_id

    def metric_batch(self, Y, x_coords) -> np.ndarray:
        return self.family.metric_batch(Y, x_coords)

    def dual_norms(self, f: Functional, x: GradedPoint) -> np.ndarray:
        d = differential(f, x, self.scheme, self.family)
        val = max(dual_seminorm(d, self.bornology, name, 1)
                  for name in self.bornology.names())
        return np.full(self.family.count, val)

    def covers(self, X) -> bool:
        return True


@dataclass(frozen=True)
class ManifoldSetting:
    """Chart-based setting: metric is the path-optimized rho, duals are the
    sampled dual Finsler norms."""

    structure: FinslerStructure
    path_cfg: PathOptConfig = DEFAULT_PATH
    dual_cfg: DualSamplerConfig = DualSamplerConfig()
    scheme: DifferenceScheme = DEFAULT_SCHEME

    @property
    def family(self) -> SeminormFamily:
        return self.structure.family

    @property
    def space_id(self) -> str:
        return self.structure.space_id

    def metric_batch(self, Y, x_coords) -> np.ndarray:
        return rho_batch(self.structure, x_coords, Y, self.path_cfg)

    def dual_norms(self, f: Functional, x: GradedPoint) -> np.ndarray:
        d = differential(f, x, self.scheme, self.family)
        return dual_finsler_norms_all(self.structure, d, x, self.dual_cfg)

    def covers(self, X) -> bool:
        return all(any(c.contains(row) for c in self.structure.atlas)
                   for row in np.atleast_2d(X))


# ---------------------------------------------------------------------------
# sequence generators


@dataclass(frozen=True)
class SequenceGenerator:
    name: str
    rule: Callable = field(repr=False)   # (indices,) -> (m, D)

    def points(self, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.float64)
        pts = np.atleast_2d(np.asarray(self.rule(idx), dtype=np.float64))
        if pts.shape[0] != idx.shape[0]:
            raise ValueError(f"generator {self.name!r} returned a bad batch shape")
        return check_finite(pts, f"generator {self.name!r} points")


def shrinking_generator(name: str, target, direction) -> SequenceGenerator:
    target = np.asarray(target, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)
    return SequenceGenerator(name, lambda i: target[None, :]
                             + direction[None, :] / i[:, None])


def escaping_generator(name: str, direction) -> SequenceGenerator:
    direction = np.asarray(direction, dtype=np.float64)
    return SequenceGenerator(name, lambda i: i[:, None] * direction[None, :])


def oscillating_generator(name: str, a, b) -> SequenceGenerator:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)

    def rule(i):
        pts = np.where((i.astype(np.int64) % 2 == 0)[:, None], a[None, :], b[None, :])
        return pts

    return SequenceGenerator(name, rule)


def descent_generator(name: str, f: Functional, start, horizon: int,
                      seed: int = 0) -> SequenceGenerator:
    """Driver-style generator: iterates of a plain shrinking-radius descent,
    padded with the final point once the descent has converged."""
    start = np.asarray(start, dtype=np.float64)
    cfg = EVPConfig(max_iters=max(horizon, 64), seed=seed)
    rng = np.random.default_rng(seed)
    trace = []
    zero_pen = lambda Y, xc: np.zeros(np.atleast_2d(Y).shape[0])
    fx = float(f.values(start[None, :])[0])
    _sample_descent(f, zero_pen, start.copy(), fx, cfg, rng, trace)
    pts = [start] + [step.point for step in trace]
    pts = np.array(pts[:horizon] + [pts[-1]] * max(0, horizon - len(pts)))

    def rule(i):
        idx = np.clip(i.astype(np.int64) - 1, 0, pts.shape[0] - 1)
        return pts[idx]

    return SequenceGenerator(name, rule)


def generator_from_driver(name: str, result: "DriverResult",
                          horizon: int) -> SequenceGenerator:
    """Sequence generator backed by a driver run's iterates."""
    pts = np.array([s.point for s in result.trace])
    if pts.shape[0] == 0:
        raise ValueError("driver result has an empty trace")
    pts = np.vstack([pts, np.repeat(pts[-1][None, :],
                                    max(0, horizon - pts.shape[0]), axis=0)])

    def rule(i):
        idx = np.clip(i.astype(np.int64) - 1, 0, pts.shape[0] - 1)
        return pts[idx]

    return SequenceGenerator(name, rule)


def library_generators(f: Functional, dim: int, known_min=None,
                       horizon: int = 64, seed: int = 0) -> list:
    """Standard bundle: shrinking, per-axis escaping, oscillating, descent."""
    rng = np.random.default_rng(seed)
    target = (np.zeros(dim) if known_min is None
              else np.asarray(known_min, dtype=np.float64))
    u = rng.uniform(-1.0, 1.0, dim)
    u /= max(np.abs(u).max(), 1e-12)
    gens = [shrinking_generator("shrink-to-min", target, u)]
    for k in range(dim):
        e = np.zeros(dim)
        e[k] = 1.0
        gens.append(escaping_generator(f"escape+e{k}", e))
        gens.append(escaping_generator(f"escape-e{k}", -e))
    a = target + rng.uniform(0.5, 1.5, dim)
    b = target - rng.uniform(0.5, 1.5, dim)
    gens.append(oscillating_generator("oscillate", a, b))
    start = target + rng.uniform(0.5, 1.5, dim)
    gens.append(descent_generator("descent-driven", f, start, horizon, seed=seed))
    return gens


# ---------------------------------------------------------------------------
# cluster detection


def cluster_point(points: np.ndarray, metric_batch: Callable,
                  radius: float, min_points: int = 16) -> Optional[np.ndarray]:
    """Tail-covering cluster surrogate.

    Returns a sequence member whose radius ball (and half-radius ball,
    the persistence refinement) captures at least half of the sequence
    tail; lexicographically smallest such member wins. None when no ball
    of the given radius captures a tail majority. Callers with shorter
    sequences (the driver allows i_max >= 4) may lower ``min_points``.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if points.shape[0] < min_points:
        raise PreconditionError(
            f"cluster detection needs at least {min_points} points")
    tail = points[points.shape[0] // 2:]
    need = math.ceil(tail.shape[0] / 2)
    hits = []
    for cand in tail:
        d = np.asarray(metric_batch(tail, cand))
        if np.count_nonzero(d <= radius) >= need \
                and np.count_nonzero(d <= radius / 2) >= need:
            hits.append(cand)
    if not hits:
        return None
    hits = np.array(hits)
    order = np.lexsort(hits.T[::-1])
    return hits[order[0]].copy()


# ---------------------------------------------------------------------------
# PS condition checking


@dataclass(frozen=True)
class PSTolerances:
    value_cap: float = 1e3
    growth_tol: float = 0.05
    level_tol: float = 0.1
    decay_tol: float = 0.3
    cluster_radius: float = 0.05


@dataclass(frozen=True)
class SequenceVerdict:
    name: str
    qualifying: bool
    reason: str
    f_last: float
    dual_last: float
    cluster: Optional[tuple]


@dataclass(frozen=True)
class PSReport:
    mode: str
    level: Optional[float]
    verdict: str
    failure_sequence: Optional[str]
    sequences: tuple
    horizon: int
    note: str

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"


def _values_bounded(fvals: np.ndarray, tol: PSTolerances):
    if np.max(np.abs(fvals)) > tol.value_cap:
        return False, "f exceeds the configured cap"
    tail = fvals[3 * fvals.shape[0] // 4:]
    growth = fvals[-1] - tail[0]
    if growth > 0 and np.all(np.diff(tail) >= -1e-12) \
            and growth / (1.0 + abs(fvals[-1])) > tol.growth_tol:
        return False, "f grows monotonically through the tail"
    return True, ""


def ps_check(f: Functional, gens, mode: str, horizon: int,
             setting, tol: PSTolerances = PSTolerances(),
             level: Optional[float] = None) -> PSReport:
    """Test the PS / PS_c hypotheses on each generator and cluster the
    qualifying sequences.

    mode "PS": f bounded along the sequence and dual norms decaying.
    mode "PS_c": f approaching the given level and dual norms decaying.
    Non-qualifying sequences are excluded from the verdict; a qualifying
    sequence without a cluster point is the explicit failure witness.
    """
    if horizon < 16:
        raise PreconditionError("horizon must be at least 16")
    if mode not in ("PS", "PS_c"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "PS_c" and level is None:
        raise ValueError("PS_c mode needs a level c")
    idx = np.arange(1, horizon + 1)
    verdicts = []
    failure = None
    for gen in gens:
        pts = gen.points(idx)
        if not setting.covers(pts):
            # the PS hypotheses quantify over sequences inside the manifold;
            # a generator leaving the atlas cannot qualify
            verdicts.append(SequenceVerdict(
                name=gen.name, qualifying=False,
                reason="sequence leaves the atlas",
                f_last=float(f.values(pts[-1][None, :])[0]),
                dual_last=float("nan"), cluster=None))
            continue
        fvals = f.values(pts)
        duals = np.array([
            float(np.max(setting.dual_norms(f, GradedPoint(f.space_id, p))))
            for p in pts
        ])
        qualifying = True
        reason = ""
        if mode == "PS":
            qualifying, reason = _values_bounded(fvals, tol)
        else:
            err = np.abs(fvals - level)
            if err[-1] > tol.level_tol:
                qualifying, reason = False, "f does not reach the level"
            elif err[-1] > err[err.shape[0] // 2] + 1e-12:
                qualifying, reason = False, "f moves away from the level"
        if qualifying and duals[-1] > tol.decay_tol:
            qualifying, reason = False, "dual norms do not decay"
        cluster = None
        if qualifying:
            cluster = cluster_point(pts, setting.metric_batch, tol.cluster_radius)
            if cluster is None and failure is None:
                failure = gen.name
        verdicts.append(SequenceVerdict(
            name=gen.name, qualifying=qualifying,
            reason=reason or ("qualifying" if qualifying else ""),
            f_last=float(fvals[-1]), dual_last=float(duals[-1]),
            cluster=None if cluster is None else tuple(float(v) for v in cluster)))
    verdict = "FAIL" if failure is not None else "PASS"
    return PSReport(mode=mode, level=level, verdict=verdict,
                    failure_sequence=failure, sequences=tuple(verdicts),
                    horizon=horizon,
                    note="finite-horizon surrogate: boundedness, decay and "
                         "subsequence convergence are tested on generated "
                         "sequences only")


# ---------------------------------------------------------------------------
# near-critical steps


@dataclass(frozen=True)
class CriticalCertificate:
    point: GradedPoint
    level: float
    value: float
    value_gap: float
    dual_norms: tuple
    dual_bound: float
    bound_ok: bool
    inf_estimate: float
    notes: dict
    witness: Optional[EkelandWitness] = field(default=None, repr=False,
                                              compare=False)


def manifold_min_step(f: Functional, S: FinslerStructure, theta: float,
                      m: GradedPoint, consts: CompatibilityConstants,
                      cfg: EVPConfig = EVPConfig(),
                      path_cfg: PathOptConfig = DEFAULT_PATH,
                      dual_cfg: DualSamplerConfig = DualSamplerConfig(),
                      scheme: DifferenceScheme = DEFAULT_SCHEME) -> CriticalCertificate:
    """Near-critical point at scale theta on a chart-based structure.

    Runs the penalized search with a = theta^2 and b = 1/theta under the
    Finsler metric, then certifies value decrease, rho-distance <= theta,
    and dual norms <= eps_theta = theta^2 * beta / alpha for all n.
    Classically theta exceeds 1; any positive theta is accepted because
    the minimizing-sequence driver instantiates theta^2 = 1/i.
    """
    if theta <= 0:
        raise PreconditionError("theta must be positive")
    m.require_space(S.space_id)

    def metric(Y, xc):
        return rho_batch(S, xc, Y, path_cfg)

    witness = ekeland_search(f, metric, m, a=theta * theta, b=1.0 / theta,
                             cfg=cfg)
    z = witness.point
    d = differential(f, z, scheme, S.family)
    duals = dual_finsler_norms_all(S, d, z, dual_cfg)
    eps_theta = theta * theta * consts.beta / consts.alpha
    in_region = consts.region.contains(z.coords)
    return CriticalCertificate(
        point=z, level=witness.inf_estimate, value=f.value(z),
        value_gap=f.value(z) - witness.inf_estimate,
        dual_norms=tuple(float(v) for v in duals),
        dual_bound=eps_theta,
        bound_ok=bool(np.all(duals <= eps_theta + FD_TOLERANCE)),
        inf_estimate=witness.inf_estimate,
        notes={"theta": float(theta), "alpha": consts.alpha, "beta": consts.beta,
               "rho_distance": witness.conclusions["distance"]["sigma"],
               "rho_bound": theta, "witness_valid": witness.valid,
               "point_in_compat_region": bool(in_region)},
        witness=witness)


def frechet_min_step(f: Functional, family: SeminormFamily, b: Bornology,
                     eps: float, x: GradedPoint, i: int,
                     cfg: EVPConfig = EVPConfig(),
                     scheme: DifferenceScheme = DEFAULT_SCHEME) -> CriticalCertificate:
    """Near-critical point at scale sqrt(eps) on the graded space.

    Runs the sup-penalty search with eta = eps and every lambda_j =
    sqrt(eps), polishing along the bornology cloud directions, then
    certifies the chain and proximity conclusions plus the dual bound
    sup over every catalog set <= sqrt(eps) + the difference tolerance.
    """
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    x.require_space(f.space_id)
    root = math.sqrt(eps)
    lambdas = np.full(family.count, root)
    dirs = b.all_points()
    if dirs.shape[0] > 1024:
        dirs = dirs[:1024]
    witness = qiu_search(f, family, x, eta=eps, lambdas=lambdas, i=i, cfg=cfg,
                         polish_directions=dirs)
    z = witness.point
    d = differential(f, z, scheme, family)
    per_set = {name: dual_seminorm(d, b, name, 1) for name in b.names()}
    worst = max(per_set.values()) if per_set else 0.0
    bound = root + FD_TOLERANCE
    return CriticalCertificate(
        point=z, level=witness.inf_estimate, value=f.value(z),
        value_gap=f.value(z) - witness.inf_estimate,
        dual_norms=tuple([worst] * family.count),
        dual_bound=bound, bound_ok=bool(worst <= bound),
        inf_estimate=witness.inf_estimate,
        notes={"eps": float(eps), "sqrt_eps": root, "per_set_duals": per_set,
               "witness_valid": witness.valid,
               "chain_slack": witness.conclusions["chain"]["slack"],
               "proximity_margin": witness.conclusions["proximity"]["margin"]},
        witness=witness)


# ---------------------------------------------------------------------------
# minimizing-sequence driver


@dataclass(frozen=True)
class DriverConfig:
    i_max: int = 100
    evp: EVPConfig = EVPConfig(max_iters=200, grid_total=4096)
    cluster_radius: float = 0.05
    final_dual_tol: float = 5e-3
    final_rho_tol: float = 1e-3
    refine_max_iters: int = 800
    seed: int = 0

    def __post_init__(self):
        if self.i_max < 4:
            raise ValueError("i_max must be at least 4")


@dataclass(frozen=True)
class DriverStep:
    i: int
    eps: float
    f_value: float
    dual_max: float
    point: tuple


@dataclass(frozen=True)
class DriverResult:
    certificate: Optional[CriticalCertificate]
    trace: tuple
    cluster: Optional[tuple]
    c_estimate: float
    failure: Optional[str]
    setting_kind: str
    iterates_outside_region: int = 0


def _plain_descent_until(f, x, cfg, rng, predicate, trace):
    zero = lambda Y, xc: np.zeros(np.atleast_2d(Y).shape[0])
    fx = float(f.values(x[None, :])[0])
    if predicate(fx):
        return x, fx
    steps = []
    x, fx = _sample_descent(f, zero, x.copy(), fx, cfg, rng, steps,
                            stop_when=predicate)
    trace.extend(steps)
    if not predicate(fx):
        raise PreconditionError(
            "warm-up descent could not reach the level needed by the next step")
    return x, fx


def minimizing_sequence_driver(f: Functional, setting, start: GradedPoint,
                               i_max: int = 100,
                               cfg: DriverConfig = DriverConfig(),
                               consts: CompatibilityConstants | None = None
                               ) -> DriverResult:
    """Drive eps = 1/i (flat) or theta^2 = 1/i (manifold) step operations,
    then cluster the iterates and certify the cluster representative.

    The raw iterates stall at the sqrt(eps_i) dual scale by construction
    (that is all the step operations guarantee), so the representative of
    a detected cluster is refined by an unpenalized descent before the
    membership-in-K_c certificate is measured at the final tolerances.
    With no cluster, the result reports the escaping trace as PS-failure
    evidence instead of a certificate.
    """
    start.require_space(f.space_id)
    flat = isinstance(setting, FlatSetting)
    if not flat and consts is None:
        raise PreconditionError("manifold driver needs compatibility constants")
    rng = np.random.default_rng(cfg.seed + 7919)
    c_est = estimate_inf(f, start.coords, cfg.evp, rng)
    warm_trace = []
    x, _ = _plain_descent_until(
        f, start.coords.copy(), cfg.evp, rng,
        lambda v: v <= c_est + 1.0 + 1e-12, warm_trace)
    trace = []
    pts = []
    outside = 0
    for i in range(1, i_max + 1):
        eps = 1.0 / i
        fx = float(f.values(x[None, :])[0])
        if fx > c_est + eps + 1e-12:
            x, fx = _plain_descent_until(
                f, x, replace(cfg.evp, seed=cfg.seed + 31 * i), rng,
                lambda v: v <= c_est + eps + 1e-12, warm_trace)
        step_cfg = replace(cfg.evp, seed=cfg.seed + 31 * i)
        xp = GradedPoint(f.space_id, x)
        if flat:
            cert = frechet_min_step(f, setting.family, setting.bornology,
                                    eps, xp, setting.family.count, step_cfg,
                                    setting.scheme)
        else:
            cert = manifold_min_step(f, setting.structure, math.sqrt(eps), xp,
                                     consts, step_cfg, setting.path_cfg,
                                     setting.dual_cfg, setting.scheme)
            outside += int(not cert.notes["point_in_compat_region"])
        x = cert.point.coords.copy()
        pts.append(x.copy())
        trace.append(DriverStep(
            i=i, eps=eps, f_value=cert.value,
            dual_max=float(max(cert.dual_norms)),
            point=tuple(float(v) for v in x)))
    pts = np.array(pts)
    cluster = cluster_point(pts, setting.metric_batch, cfg.cluster_radius,
                            min_points=min(16, i_max))
    if cluster is None:
        return DriverResult(certificate=None, trace=tuple(trace), cluster=None,
                            c_estimate=c_est,
                            failure="no cluster point at the configured radius; "
                                    "the iterate sequence is PS-failure evidence",
                            setting_kind="flat" if flat else "manifold",
                            iterates_outside_region=outside)
    refine_cfg = replace(cfg.evp, max_iters=cfg.refine_max_iters,
                         radius_init=max(cfg.cluster_radius, 1e-3),
                         radius_floor=1e-9, seed=cfg.seed + 104729)
    refine_trace = []
    zero = lambda Y, xc: np.zeros(np.atleast_2d(Y).shape[0])
    fx = float(f.values(cluster[None, :])[0])
    xstar, fstar = _sample_descent(f, zero, cluster.copy(), fx, refine_cfg,
                                   np.random.default_rng(cfg.seed + 104729),
                                   refine_trace)
    zstar = GradedPoint(f.space_id, xstar)
    duals = setting.dual_norms(f, zstar)
    cert = CriticalCertificate(
        point=zstar, level=c_est, value=fstar, value_gap=fstar - c_est,
        dual_norms=tuple(float(v) for v in duals),
        dual_bound=cfg.final_dual_tol,
        bound_ok=bool(np.all(duals <= cfg.final_dual_tol)),
        inf_estimate=c_est,
        notes={"i_max": i_max, "cluster_radius": cfg.cluster_radius,
               "final_rho_tol": cfg.final_rho_tol,
               "refined_from_cluster": True,
               "trace_bound": "f(x_i) <= c_est + 1/i enforced per step"})
    return DriverResult(certificate=cert, trace=tuple(trace),
                        cluster=tuple(float(v) for v in cluster),
                        c_estimate=c_est, failure=None,
                        setting_kind="flat" if flat else "manifold",
                        iterates_outside_region=outside)
