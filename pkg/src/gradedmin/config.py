"""Problem-config ingestion.

One human-editable YAML file declares the space, functional, bornology,
structure, budgets, tolerances, and command parameters. A ``problem:``
key starts from a library entry and user keys override it; defaults fill
everything else. The fully merged dict is kept as the config echo, so a
report can be re-run without the original file.
"""

from __future__ import annotations

import copy
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .calculus import DifferenceScheme
from .ekeland import EVPConfig
from .errors import ConfigError
from .finsler import (Chart, DualSamplerConfig, FinslerStructure, PathOptConfig,
                      TangentRule)
from .library import library_config, make_functional
from .psmin import DriverConfig, PSTolerances
from .space import Bornology, GradedPoint, SeminormFamily
from .util import Box

_GLOBAL_DEFAULTS = {
    "seed": 0,
    "bornology": {"radii": [1.0], "samples": 48, "seed": 0},
    "structure": {"rule": "flat", "c0": 1.0, "c1": 0.0},
    "budgets": {"evp": {}, "path": {}, "driver": {}},
    "tolerances": {"ps": {}, "dual_sampler": {}, "scheme": {}},
    "params": {},
}


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _build_dataclass(cls, payload: dict, where: str, **extra):
    payload = dict(payload or {})
    payload.update(extra)
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(payload) - known
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in {where}",
                          field=where)
    try:
        return cls(**payload)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {where}: {exc}", field=where)


@dataclass
class ResolvedProblem:
    echo: dict
    family: SeminormFamily
    functional: object
    bornology: Bornology
    structure: FinslerStructure
    chart: Chart
    region: Box
    start: GradedPoint
    known_min: np.ndarray | None
    evp: EVPConfig
    path: PathOptConfig
    driver: DriverConfig
    ps_tol: PSTolerances
    dual_sampler: DualSamplerConfig
    scheme: DifferenceScheme
    seed: int
    params: dict = field(default_factory=dict)


def _build_space(spec: dict) -> SeminormFamily:
    if not isinstance(spec, dict):
        raise ConfigError("space must be a mapping", field="space")
    sid = spec.get("id", "space")
    dim = spec.get("dim")
    count = spec.get("count")
    if not isinstance(dim, int) or dim < 1:
        raise ConfigError("dim must be a positive integer", field="space.dim")
    if not isinstance(count, int) or count < 1:
        raise ConfigError("count must be a positive integer", field="space.count")
    rule = spec.get("rule", "weighted-sup")
    if rule == "table":
        if "weights" not in spec:
            raise ConfigError("table rule needs a weights table",
                              field="space.weights")
        kind = spec.get("kind", "weighted-sup")
        fam = SeminormFamily.from_table(sid, spec["weights"], rule=kind)
        if fam.dim != dim or fam.count != count:
            raise ConfigError("weights table shape disagrees with dim/count",
                              field="space.weights")
        return fam
    if rule not in ("weighted-sup", "weighted-sum"):
        raise ConfigError(f"unknown seminorm rule {rule!r}", field="space.rule")
    growth = float(spec.get("growth", 1.0))
    if growth < 0:
        raise ConfigError("growth must be nonnegative", field="space.growth")
    return SeminormFamily.from_rule(sid, dim, count, rule=rule, growth=growth)


def _build_chart(spec: dict, dim: int) -> Chart:
    spec = spec or {}
    kind = spec.get("kind", "identity")
    box = Box.from_pairs(spec.get("box", [[-8.0, 8.0]] * dim))
    if box.dim != dim:
        raise ConfigError("chart box dimension disagrees with space",
                          field="chart.box")
    try:
        return Chart(chart_id=spec.get("id", "chart0"), domain=box, kind=kind,
                     matrix=np.asarray(spec["matrix"], dtype=np.float64)
                     if "matrix" in spec else None,
                     offset=np.asarray(spec["offset"], dtype=np.float64)
                     if "offset" in spec else None,
                     scale=float(spec.get("scale", 1.0)))
    except ValueError as exc:
        raise ConfigError(f"bad chart: {exc}", field="chart")


def resolve_config(raw: dict, seed_override: int | None = None) -> ResolvedProblem:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    merged = raw
    if "problem" in raw:
        merged = _deep_merge(library_config(raw["problem"]), raw)
    merged = _deep_merge(_GLOBAL_DEFAULTS, merged)
    if seed_override is not None:
        merged["seed"] = int(seed_override)
    if "space" not in merged:
        raise ConfigError("config needs a space declaration (or a problem name)",
                          field="space")
    if "functional" not in merged:
        raise ConfigError("config needs a functional declaration",
                          field="functional")

    family = _build_space(merged["space"])
    fspec = merged["functional"]
    functional = make_functional(
        family.space_id, family.dim, name=fspec.get("name"),
        expr=fspec.get("expr"),
        lower_bound=fspec.get("lower_bound"))

    bspec = merged["bornology"]
    bornology = Bornology.spheres(
        family, radii=tuple(float(r) for r in bspec.get("radii", [1.0])),
        samples=int(bspec.get("samples", 48)), seed=int(bspec.get("seed", 0)))

    chart = _build_chart(merged.get("chart"), family.dim)
    sspec = merged["structure"]
    rule = TangentRule(kind=sspec.get("rule", "flat"),
                       c0=float(sspec.get("c0", 1.0)),
                       c1=float(sspec.get("c1", 0.0 if sspec.get("rule", "flat") == "flat" else 1.0)))
    structure = FinslerStructure(family=family, atlas=(chart,), rule=rule)

    region = Box.from_pairs(merged.get("region", [[-1.0, 1.0]] * family.dim))
    if region.dim != family.dim:
        raise ConfigError("region dimension disagrees with space", field="region")

    start_coords = np.asarray(merged.get("start", [0.0] * family.dim),
                              dtype=np.float64)
    if start_coords.shape != (family.dim,):
        raise ConfigError("start must have one coordinate per dimension",
                          field="start")
    start = GradedPoint(family.space_id, start_coords)
    known_min = (np.asarray(merged["known_min"], dtype=np.float64)
                 if merged.get("known_min") is not None else None)

    seed = int(merged.get("seed", 0))
    budgets = merged["budgets"]
    evp = _build_dataclass(EVPConfig, {"seed": seed, **(budgets.get("evp") or {})},
                           "budgets.evp")
    path = _build_dataclass(PathOptConfig, budgets.get("path"), "budgets.path")
    driver_spec = dict(budgets.get("driver") or {})
    driver = _build_dataclass(DriverConfig, driver_spec, "budgets.driver",
                              evp=evp, seed=seed)
    tol = merged["tolerances"]
    ps_tol = _build_dataclass(PSTolerances, tol.get("ps"), "tolerances.ps")
    dual_sampler = _build_dataclass(DualSamplerConfig, tol.get("dual_sampler"),
                                    "tolerances.dual_sampler")
    scheme = _build_dataclass(DifferenceScheme, tol.get("scheme"),
                              "tolerances.scheme")

    return ResolvedProblem(
        echo=merged, family=family, functional=functional, bornology=bornology,
        structure=structure, chart=chart, region=region, start=start,
        known_min=known_min, evp=evp, path=path, driver=driver, ps_tol=ps_tol,
        dual_sampler=dual_sampler, scheme=scheme, seed=seed,
        params=dict(merged.get("params") or {}))


def load_problem(path, seed_override: int | None = None) -> ResolvedProblem:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {p} does not exist")
    try:
        raw = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {p}: {exc}")
    if raw is None:
        raise ConfigError(f"config file {p} is empty")
    return resolve_config(raw, seed_override=seed_override)
