"""Small shared helpers: boxes, grids, deterministic tie-breaking."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class Box:
    """Axis-aligned box, the only region shape used by the toolkit."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=np.float64)
        hi = np.asarray(self.hi, dtype=np.float64)
        if lo.ndim != 1 or lo.shape != hi.shape:
            raise ConfigError("box lo/hi must be equal-length vectors", field="box")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ConfigError("box bounds must be finite", field="box")
        if np.any(hi < lo):
            raise ConfigError("box has hi < lo", field="box")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @classmethod
    def cube(cls, dim: int, half_width: float, center=None) -> "Box":
        c = np.zeros(dim) if center is None else np.asarray(center, dtype=np.float64)
        return cls(c - half_width, c + half_width)

    @classmethod
    def from_pairs(cls, pairs) -> "Box":
        arr = np.asarray(pairs, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ConfigError("box must be a list of [lo, hi] pairs", field="box")
        return cls(arr[:, 0], arr[:, 1])

    def contains(self, x, atol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=np.float64)
        return bool(np.all(x >= self.lo - atol) and np.all(x <= self.hi + atol))

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(count, self.dim))

    def grid(self, total: int) -> np.ndarray:
        """Regular grid with about ``total`` points, same count per axis."""
        per_dim = max(2, int(np.ceil(total ** (1.0 / self.dim))))
        axes = [np.linspace(self.lo[k], self.hi[k], per_dim) for k in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def as_pairs(self) -> list:
        return [[float(a), float(b)] for a, b in zip(self.lo, self.hi)]


def lexicographic_argmin(points: np.ndarray, values: np.ndarray, tol: float = 0.0) -> int:
    """Index of the minimal value; ties broken by lexicographically smallest point."""
    values = np.asarray(values)
    best = np.min(values)
    tied = np.flatnonzero(values <= best + tol)
    if tied.size == 1:
        return int(tied[0])
    order = np.lexsort(points[tied].T[::-1])
    return int(tied[order[0]])


def check_finite(arr: np.ndarray, what: str) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains non-finite entries")
    return arr
