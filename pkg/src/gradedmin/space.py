"""Finite truncations of graded seminorm spaces.

A space is a D-dimensional coordinate truncation carrying an increasing
family p_1 <= p_2 <= ... <= p_N of seminorms. Two weight-table rules are
provided (weighted-sup and weighted-sum); any non-monotone table is wrapped
by a cumulative max so the grading always holds exactly. Bornologies are
finite catalogs of named point clouds standing in for the covering family
of bounded sets; the compact-set hypothesis is modeled by unit-sphere
sample clouds of each seminorm (a convention, flagged in reports).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .backends import active as _kern
from .errors import IndexRangeError, SpaceMismatchError
from .util import check_finite

_KINDS = {"weighted-sup": 0, "weighted-sum": 1}


@dataclass(frozen=True)
class SeminormFamily:
    """Increasing family of N seminorms on a D-dimensional truncation.

    ``weights[n, k]`` is the weight of coordinate k in the n-th raw
    seminorm; evaluation applies a cumulative max over n, so the graded
    values are monotone in n even for arbitrary nonnegative tables.
    """

    space_id: str
    dim: int
    count: int
    kind: str
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.dim < 1 or self.count < 1:
            raise ValueError("dim and count must be positive")
        if self.kind not in _KINDS:
            raise ValueError(f"unknown seminorm rule {self.kind!r}")
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (self.count, self.dim):
            raise ValueError(f"weights must have shape ({self.count}, {self.dim})")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_rule(cls, space_id: str, dim: int, count: int,
                  rule: str = "weighted-sup", growth: float = 1.0) -> "SeminormFamily":
        """Named rule with weights w_n(k) = (1 + growth*k)^n.

        growth=1 gives the standard (1+k)^n table; growth=0 collapses every
        seminorm onto the same unweighted norm.
        """
        n = np.arange(1, count + 1)[:, None]
        k = np.arange(dim)[None, :]
        return cls(space_id, dim, count, rule, (1.0 + growth * k) ** n)

    @classmethod
    def from_table(cls, space_id: str, weights, rule: str = "weighted-sup") -> "SeminormFamily":
        w = np.asarray(weights, dtype=np.float64)
        return cls(space_id, w.shape[1], w.shape[0], rule, w)

    @property
    def kind_code(self) -> int:
        return _KINDS[self.kind]

    def check_index(self, n: int) -> int:
        if not 1 <= n <= self.count:
            raise IndexRangeError(
                f"seminorm index {n} outside 1..{self.count} for space {self.space_id!r}")
        return n

    def table(self, X) -> np.ndarray:
        """Graded values for a batch of coordinate rows, shape (m, N)."""
        return _kern.seminorm_table(self.weights, self.kind_code, X)

    def seminorm(self, n: int, coords) -> float:
        self.check_index(n)
        return float(self.table(np.atleast_2d(coords))[0, n - 1])

    def metric_batch(self, X, y) -> np.ndarray:
        return _kern.graded_metric_batch(self.weights, self.kind_code,
                                         np.atleast_2d(X), y)


@dataclass(frozen=True)
class GradedPoint:
    """Coordinate vector tagged with the identity of its space."""

    space_id: str
    coords: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = check_finite(self.coords, "point coords")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    def require_space(self, space_id: str) -> None:
        if self.space_id != space_id:
            raise SpaceMismatchError(
                f"point in space {self.space_id!r}, expected {space_id!r}")

    def minus(self, other: "GradedPoint") -> np.ndarray:
        other.require_space(self.space_id)
        return self.coords - other.coords


def point(family: SeminormFamily, coords) -> GradedPoint:
    coords = np.asarray(coords, dtype=np.float64)
    if coords.shape != (family.dim,):
        raise ValueError(f"expected {family.dim} coordinates, got {coords.shape}")
    return GradedPoint(family.space_id, coords)


def eval_seminorm(family: SeminormFamily, n: int, x: GradedPoint) -> float:
    x.require_space(family.space_id)
    return family.seminorm(n, x.coords)


def graded_metric(family: SeminormFamily, x: GradedPoint, y: GradedPoint) -> float:
    """Bounded metric sum(2^-n * p_n(x-y) / (1 + p_n(x-y))), always < 1."""
    x.require_space(family.space_id)
    y.require_space(family.space_id)
    return float(family.metric_batch(x.coords[None, :], y.coords)[0])


# ---------------------------------------------------------------------------
# Bornology


@dataclass(frozen=True)
class BornologySet:
    name: str
    points: np.ndarray
    base: str
    radius: float


@dataclass(frozen=True)
class Bornology:
    """Finite catalog of named bounded point clouds.

    The scaling rule maps (set, r) to the same base cloud at the smallest
    catalog radius >= |r|, when one exists. Validation is report-based;
    see :func:`validate_bornology`.
    """

    space_id: str
    dim: int
    count: int
    sets: tuple

    def __post_init__(self):
        names = [s.name for s in self.sets]
        if len(set(names)) != len(names):
            raise ValueError("duplicate bornology set names")
        for s in self.sets:
            if s.points.ndim != 2 or s.points.shape[1] != self.dim:
                raise ValueError(f"set {s.name!r} has wrong point shape")

    def names(self) -> list:
        return [s.name for s in self.sets]

    def get(self, name: str) -> BornologySet:
        for s in self.sets:
            if s.name == name:
                return s
        raise KeyError(f"unknown bornology set {name!r}; have {self.names()}")

    def radii(self) -> list:
        return sorted({s.radius for s in self.sets})

    def scale_superset(self, name: str, r: float):
        """Designated catalog superset covering r * (the named set), or None."""
        base = self.get(name).base
        candidates = sorted(
            (s for s in self.sets if s.base == base and s.radius >= abs(r) - 1e-12),
            key=lambda s: s.radius)
        return candidates[0] if candidates else None

    def all_points(self) -> np.ndarray:
        return np.concatenate([s.points for s in self.sets], axis=0)

    @classmethod
    def spheres(cls, family: SeminormFamily, radii=(1.0,), samples: int = 48,
                seed: int = 0) -> "Bornology":
        """Default catalog: p_n-unit-sphere sample clouds plus scaled copies.

        Each sphere cloud contains the +-axis points, the sign-pattern
        corners of the unit ball (exact extreme points for both rules, so
        finite sups over the cloud match the analytic dual norm), and
        seeded random directions normalized onto the sphere. A cumulative
        hull set per radius keeps the catalog directed by inclusion.
        """
        rng = np.random.default_rng(seed)
        D, N = family.dim, family.count
        sets = []
        base_clouds = []
        for n in range(1, N + 1):
            dirs = []
            for k in range(D):
                e = np.zeros(D)
                e[k] = 1.0
                pn = family.seminorm(n, e)
                if pn > 0:
                    dirs.append(e / pn)
                    dirs.append(-e / pn)
            if D <= 8:
                # corners of the sup ball / vertices already covered for sum
                w = family.weights[:n].max(axis=0)
                if np.all(w > 0) and family.kind == "weighted-sup":
                    signs = np.array(
                        np.meshgrid(*([[-1.0, 1.0]] * D), indexing="ij")
                    ).reshape(D, -1).T
                    corners = signs / w[None, :]
                    # rescale exactly onto the graded unit sphere
                    pn = family.table(corners)[:, n - 1]
                    corners = corners / pn[:, None]
                    dirs.extend(list(corners))
            raw = rng.standard_normal((samples, D))
            pn = family.table(raw)[:, n - 1]
            keep = pn > 1e-12
            dirs.extend(list(raw[keep] / pn[keep, None]))
            base_clouds.append(np.array(dirs) if dirs else np.zeros((0, D)))
        for r in sorted(radii):
            for n in range(1, N + 1):
                sets.append(BornologySet(
                    name=f"sphere-p{n}-r{r:g}", points=r * base_clouds[n - 1],
                    base=f"sphere-p{n}", radius=float(r)))
            hull = np.concatenate(
                [s.points for s in sets if s.radius <= r and s.base.startswith("sphere")],
                axis=0)
            sets.append(BornologySet(
                name=f"hull-r{r:g}", points=hull, base="hull", radius=float(r)))
        return cls(family.space_id, D, N, tuple(sets))

    @classmethod
    def from_clouds(cls, family: SeminormFamily, clouds: dict) -> "Bornology":
        sets = tuple(BornologySet(name, np.atleast_2d(np.asarray(p, dtype=np.float64)),
                                  base=name, radius=1.0)
                     for name, p in clouds.items())
        return cls(family.space_id, family.dim, family.count, sets)


@dataclass(frozen=True)
class BornologyReport:
    covering_ok: bool
    uncovered_directions: tuple
    directed_ok: bool
    directedness_counterexample: tuple | None
    scaling: dict
    scaling_ok: bool
    surrogates_ok: bool
    missing_surrogates: tuple
    note: str

    @property
    def all_ok(self) -> bool:
        return (self.covering_ok and self.directed_ok and self.scaling_ok
                and self.surrogates_ok)


def _contained(A: np.ndarray, C: np.ndarray, tol: float) -> bool:
    """Every point of A within max-coordinate distance tol of some point of C."""
    if A.shape[0] == 0:
        return True
    if C.shape[0] == 0:
        return False
    d = np.abs(A[:, None, :] - C[None, :, :]).max(axis=2).min(axis=1)
    return bool(np.all(d <= tol))


def validate_bornology(b: Bornology, family: SeminormFamily,
                       tol: float = 1e-9) -> BornologyReport:
    """Report-based check of the bornology axioms at truncation scale.

    Covering asks that every basis direction appear (up to scaling) in some
    cloud; directedness that each pair of catalog sets have a catalog
    superset (pointwise, within tol); scaling closure that each catalog
    radius r map every set to an existing designated superset whose
    seminorm hull dominates the scaled set. Failures are entries in the
    report, never exceptions.
    """
    if b.space_id != family.space_id:
        raise SpaceMismatchError(
            f"bornology for {b.space_id!r}, family for {family.space_id!r}")
    D = family.dim
    uncovered = []
    for k in range(D):
        found = False
        for s in b.sets:
            p = s.points
            if p.shape[0] == 0:
                continue
            on_axis = np.abs(p[:, k]) > 1e-12
            if np.any(on_axis):
                others = np.delete(p[on_axis], k, axis=1) if D > 1 else None
                if D == 1:
                    found = True
                    break
                ratio = np.abs(others).max(axis=1) / np.abs(p[on_axis, k])
                if np.any(ratio <= tol):
                    found = True
                    break
        if not found:
            uncovered.append(f"e{k}")

    directed_ok = True
    counterexample = None
    for i, A in enumerate(b.sets):
        for Bset in b.sets[i + 1:]:
            union = np.concatenate([A.points, Bset.points], axis=0)
            if not any(_contained(union, C.points, tol) for C in b.sets):
                directed_ok = False
                counterexample = (A.name, Bset.name)
                break
        if not directed_ok:
            break

    # the scale rule acts on the base (radius-1) cloud of each set: r times
    # the base cloud must land inside the designated superset's seminorm hull
    scaling = {}
    scaling_ok = True
    for s in b.sets:
        for r in b.radii():
            sup = b.scale_superset(s.name, r)
            key = f"{s.name}@r={r:g}"
            if sup is None:
                scaling[key] = "no designated superset"
                scaling_ok = False
                continue
            if s.points.shape[0] == 0:
                scaling[key] = f"ok -> {sup.name}"
                continue
            hull_scaled = family.table((r / s.radius) * s.points).max(axis=0)
            hull_sup = family.table(sup.points).max(axis=0)
            if np.all(hull_scaled <= hull_sup + tol):
                scaling[key] = f"ok -> {sup.name}"
            else:
                scaling[key] = f"hull of {sup.name} does not dominate"
                scaling_ok = False

    missing = []
    for n in range(1, family.count + 1):
        hit = False
        for s in b.sets:
            if s.points.shape[0] == 0:
                continue
            vals = family.table(s.points)[:, n - 1]
            if np.all(np.abs(vals - 1.0) <= 1e-6):
                hit = True
                break
        if not hit:
            missing.append(n)

    return BornologyReport(
        covering_ok=not uncovered,
        uncovered_directions=tuple(uncovered),
        directed_ok=directed_ok,
        directedness_counterexample=counterexample,
        scaling=scaling,
        scaling_ok=scaling_ok,
        surrogates_ok=not missing,
        missing_surrogates=tuple(missing),
        note=("compact sets are represented by unit-sphere sample clouds; "
              "this surrogate convention is a truncation-scale choice"),
    )
