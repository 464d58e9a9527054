"""Built-in problems and expression-defined functionals.

Every library entry is a plain config dict, expanded by the config
module through the same builder path as user files. The quadratic
problems deliberately use an n-independent weight table and a radius-1
catalog: the sqrt(eps) dual bound of the graded-space step is measured
over every catalog set, and sets leaving the p_N unit ball scale that
bound away (see the estimates in the test suite). The graded stress
problem keeps the standard (1+k)^n table.
"""

from __future__ import annotations

import difflib
import math

import numpy as np

from .calculus import Functional
from .errors import ConfigError


def _quad_builder(coeffs):
    a = np.asarray(coeffs, dtype=np.float64)

    def make(space_id: str, dim: int) -> Functional:
        if dim != a.shape[0]:
            raise ConfigError(
                f"functional needs dim {a.shape[0]}, space has dim {dim}",
                field="functional")
        return Functional(
            space_id, f"quad{dim}",
            fn=lambda X: (a[None, :] * X * X).sum(axis=1),
            gradient=lambda X: 2.0 * a[None, :] * X,
            lower_bound=0.0)

    return make


def _arctan_builder(space_id: str, dim: int) -> Functional:
    def grad(X):
        out = np.zeros_like(X)
        out[:, 0] = 1.0 / (1.0 + X[:, 0] ** 2)
        return out

    return Functional(space_id, "arctan-flat",
                      fn=lambda X: np.arctan(X[:, 0]),
                      gradient=grad, lower_bound=-math.pi / 2)


def _abs_builder(space_id: str, dim: int) -> Functional:
    return Functional(space_id, "kink-abs",
                      fn=lambda X: np.abs(X[:, 0]),
                      gradient=None, lower_bound=0.0)


def _rosen_builder(space_id: str, dim: int) -> Functional:
    if dim != 2:
        raise ConfigError("rosen-graded needs dim 2", field="functional")

    def fn(X):
        return (1.0 - X[:, 0]) ** 2 + 100.0 * (X[:, 1] - X[:, 0] ** 2) ** 2

    def grad(X):
        g = np.empty_like(X)
        g[:, 0] = (-2.0 * (1.0 - X[:, 0])
                   - 400.0 * X[:, 0] * (X[:, 1] - X[:, 0] ** 2))
        g[:, 1] = 200.0 * (X[:, 1] - X[:, 0] ** 2)
        return g

    return Functional(space_id, "rosen-graded", fn=fn, gradient=grad,
                      lower_bound=0.0)


def _conformal_quad_builder(space_id: str, dim: int) -> Functional:
    return _quad_builder(np.ones(dim))(space_id, dim)


FUNCTIONALS = {
    "quad1": _quad_builder([1.0]),
    "quad2": _quad_builder([1.0, 2.0]),
    "quad3": _quad_builder([1.0, 2.0, 3.0]),
    "arctan-flat": _arctan_builder,
    "kink-abs": _abs_builder,
    "rosen-graded": _rosen_builder,
    "conformal-1d": _conformal_quad_builder,
}


def make_functional(space_id: str, dim: int, name: str | None = None,
                    expr: str | None = None,
                    lower_bound: float | None = None) -> Functional:
    if (name is None) == (expr is None):
        raise ConfigError("give exactly one of functional name or expr",
                          field="functional")
    if expr is not None:
        return expression_functional(space_id, expr, dim,
                                     lower_bound=lower_bound)
    if name not in FUNCTIONALS:
        close = difflib.get_close_matches(name, FUNCTIONALS, n=3, cutoff=0.3)
        hint = f"; did you mean {close}" if close else ""
        raise ConfigError(f"unknown functional {name!r}{hint}",
                          field="functional")
    f = FUNCTIONALS[name](space_id, dim)
    if lower_bound is not None:
        f = Functional(f.space_id, f.name, f.fn, f.gradient, lower_bound)
    return f


def expression_functional(space_id: str, expr: str, dim: int,
                          name: str | None = None,
                          lower_bound: float | None = None) -> Functional:
    """Functional from an expression in x0..x{D-1}.

    Polynomials and composed elementary functions; the symbolic gradient
    is attached automatically.
    """
    import sympy
    from sympy.parsing.sympy_parser import parse_expr

    syms = sympy.symbols(f"x0:{dim}")
    local = {f"x{k}": syms[k] for k in range(dim)}
    try:
        parsed = parse_expr(expr, local_dict=local)
    except Exception as exc:
        raise ConfigError(f"cannot parse expression {expr!r}: {exc}",
                          field="functional.expr")
    extra = parsed.free_symbols - set(syms)
    if extra:
        raise ConfigError(
            f"expression uses unknown symbols {sorted(map(str, extra))}",
            field="functional.expr")
    f_l = sympy.lambdify(syms, parsed, modules="numpy")
    g_l = sympy.lambdify(syms, [sympy.diff(parsed, s) for s in syms],
                         modules="numpy")

    def fn(X):
        cols = [X[:, k] for k in range(dim)]
        v = np.asarray(f_l(*cols), dtype=np.float64)
        return np.broadcast_to(v, (X.shape[0],)).copy()

    def gradient(X):
        cols = [X[:, k] for k in range(dim)]
        parts = g_l(*cols)
        out = np.empty_like(X)
        for k in range(dim):
            out[:, k] = np.broadcast_to(
                np.asarray(parts[k], dtype=np.float64), (X.shape[0],))
        return out

    return Functional(space_id, name or f"expr:{expr}", fn=fn,
                      gradient=gradient, lower_bound=lower_bound)


def _box(dim, half):
    return [[-half, half]] * dim


def _quad_config(dim):
    return {
        "space": {"id": f"quad{dim}", "dim": dim, "count": 3,
                  "rule": "weighted-sup", "growth": 0.0},
        "functional": {"name": f"quad{dim}"},
        "bornology": {"radii": [1.0], "samples": 48, "seed": 0},
        "structure": {"rule": "flat"},
        "chart": {"kind": "identity", "box": _box(dim, 6.0)},
        "region": _box(dim, 1.0),
        # f(start) stays below the default search slacks (a = 2, eta = 0.5)
        "start": [0.25] * dim,
        "known_min": [0.0] * dim,
    }


LIBRARY_CONFIGS = {
    "quad1": _quad_config(1),
    "quad2": _quad_config(2),
    "quad3": _quad_config(3),
    "arctan-flat": {
        "space": {"id": "arctan", "dim": 1, "count": 2,
                  "rule": "weighted-sup", "growth": 0.0},
        "functional": {"name": "arctan-flat"},
        "bornology": {"radii": [1.0], "samples": 32, "seed": 0},
        "structure": {"rule": "flat"},
        "chart": {"kind": "identity", "box": _box(1, 200.0)},
        "region": _box(1, 1.0),
        "start": [0.0],
    },
    "kink-abs": {
        "space": {"id": "kink", "dim": 1, "count": 2,
                  "rule": "weighted-sup", "growth": 0.0},
        "functional": {"name": "kink-abs"},
        "bornology": {"radii": [1.0], "samples": 32, "seed": 0},
        "structure": {"rule": "flat"},
        "chart": {"kind": "identity", "box": _box(1, 6.0)},
        "region": [[-0.02, 0.02]],
        "start": [0.5],
        "known_min": [0.0],
    },
    "conformal-1d": {
        "space": {"id": "conf1", "dim": 1, "count": 2,
                  "rule": "weighted-sup", "growth": 0.0},
        "functional": {"name": "conformal-1d"},
        "bornology": {"radii": [1.0], "samples": 32, "seed": 0},
        "structure": {"rule": "conformal", "c0": 1.0, "c1": 1.0},
        "chart": {"kind": "identity", "box": _box(1, 8.0)},
        "region": _box(1, 1.0),
        "start": [0.5],
        "known_min": [0.0],
    },
    "rosen-graded": {
        "space": {"id": "rosen", "dim": 2, "count": 3,
                  "rule": "weighted-sup", "growth": 1.0},
        "functional": {"name": "rosen-graded"},
        "bornology": {"radii": [1.0, 2.0], "samples": 48, "seed": 0},
        "structure": {"rule": "flat"},
        "chart": {"kind": "identity", "box": _box(2, 6.0)},
        "region": _box(2, 1.0),
        "start": [-1.2, 1.0],
        "known_min": [1.0, 1.0],
    },
}


def library_config(name: str) -> dict:
    if name not in LIBRARY_CONFIGS:
        close = difflib.get_close_matches(name, LIBRARY_CONFIGS, n=3, cutoff=0.3)
        hint = f"; did you mean {close}" if close else ""
        raise ConfigError(f"unknown library problem {name!r}{hint}",
                          field="problem")
    import copy
    return copy.deepcopy(LIBRARY_CONFIGS[name])
