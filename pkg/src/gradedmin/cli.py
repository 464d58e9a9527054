"""Command dispatch: graded-min <cmd> --config <path> [options].

Commands
  metric    rho between two declared points plus the per-n pseudometric table
  compat    estimate local compatibility constants on the declared region
  ekeland   penalized search witness (classical form)
  qiu       penalized search witness (graded sup form)
  ps-check  Palais-Smale verdict over the generator library
  minimize  minimizing-sequence driver with a K_c-surrogate certificate
  report    re-emit a stored structured report in another format

Exit codes: 0 completed run (negative verdicts included), 2 config error,
3 execution error. GRADEDMIN_THREADS sets the default thread count;
GRADEDMIN_BACKEND selects the kernel backend (numba or numpy).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time

import numpy as np
import yaml

from .config import ResolvedProblem, load_problem
from .ekeland import ekeland_search, qiu_search
from .errors import ConfigError, GradedMinError
from .finsler import estimate_compatibility, pseudometric_table
from .psmin import (FlatSetting, ManifoldSetting, library_generators,
                    minimizing_sequence_driver)
from .report import (RunReport, driver_dict, emit_report, parse_report,
                     ps_report_dict, witness_dict)
from .space import GradedPoint, graded_metric

_ENV_THREADS = "GRADEDMIN_THREADS"


def _set_threads(count: int | None) -> None:
    if count is None:
        env = os.environ.get(_ENV_THREADS, "").strip()
        count = int(env) if env else None
    if count is None:
        return
    try:
        import numba
        numba.set_num_threads(max(1, count))
    except ImportError:
        pass


def _point(cfg: ResolvedProblem, value, what: str) -> GradedPoint:
    if value is None:
        raise ConfigError(f"command needs params.{what}", field=f"params.{what}")
    coords = np.asarray(value, dtype=np.float64)
    if coords.shape != (cfg.family.dim,):
        raise ConfigError(f"params.{what} must have {cfg.family.dim} coordinates",
                          field=f"params.{what}")
    return GradedPoint(cfg.family.space_id, coords)


def _metric_oracle(cfg: ResolvedProblem):
    if cfg.structure.rule.kind == "flat":
        return lambda Y, xc: cfg.family.metric_batch(Y, xc)
    from .finsler import rho_batch
    return lambda Y, xc: rho_batch(cfg.structure, xc, Y, cfg.path)


def _setting(cfg: ResolvedProblem):
    which = cfg.params.get("setting")
    if which is None:
        which = "manifold" if cfg.structure.rule.kind == "conformal" else "flat"
    if which == "flat":
        return FlatSetting(cfg.family, cfg.bornology, cfg.scheme)
    if which == "manifold":
        return ManifoldSetting(cfg.structure, cfg.path, cfg.dual_sampler,
                               cfg.scheme)
    raise ConfigError(f"unknown setting {which!r}", field="params.setting")


def _cmd_metric(cfg: ResolvedProblem) -> dict:
    x = _point(cfg, cfg.params.get("x", list(cfg.start.coords)), "x")
    y = _point(cfg, cfg.params.get("y"), "y")
    table = pseudometric_table(cfg.structure, x.coords, y.coords[None, :],
                               cfg.path)[0]
    rho = float(sum((0.5 ** n) * d / (1.0 + d)
                    for n, d in enumerate(table, start=1)))
    return {
        "x": list(x.coords), "y": list(y.coords),
        "d_n": [float(v) for v in table],
        "rho": rho,
        "graded_metric": graded_metric(cfg.family, x, y),
        "path_budget": {"nodes": cfg.path.nodes, "sweeps": cfg.path.sweeps,
                        "gs_iters": cfg.path.gs_iters},
    }


def _cmd_compat(cfg: ResolvedProblem) -> dict:
    consts = estimate_compatibility(cfg.structure, cfg.chart, cfg.region,
                                    path_cfg=cfg.path)
    return {"chart": consts.chart_id, "alpha": consts.alpha,
            "beta": consts.beta, "region": consts.region.as_pairs(),
            "note": "sampled envelope; alpha*rho <= p_n(x-y) <= beta*rho "
                    "on the sample"}


def _cmd_ekeland(cfg: ResolvedProblem) -> dict:
    a = float(cfg.params.get("a", 2.0))
    b = float(cfg.params.get("b", 1.0))
    witness = ekeland_search(cfg.functional, _metric_oracle(cfg), cfg.start,
                             a, b, cfg.evp)
    return {"witness": witness_dict(witness)}


def _cmd_qiu(cfg: ResolvedProblem) -> dict:
    eta = float(cfg.params.get("eta", 0.5))
    if "lambdas" in cfg.params:
        lambdas = [float(v) for v in cfg.params["lambdas"]]
    else:
        lam = float(cfg.params.get("lambda", math.sqrt(eta)))
        lambdas = [lam] * cfg.family.count
    i = int(cfg.params.get("i", cfg.family.count))
    witness = qiu_search(cfg.functional, cfg.family, cfg.start, eta, lambdas,
                         i, cfg.evp)
    return {"witness": witness_dict(witness)}


def _cmd_ps_check(cfg: ResolvedProblem) -> dict:
    mode = cfg.params.get("mode", "PS")
    level = cfg.params.get("level")
    horizon = int(cfg.params.get("horizon", 64))
    gens = library_generators(cfg.functional, cfg.family.dim, cfg.known_min,
                              horizon=horizon, seed=cfg.seed)
    report = ps_check_dispatch(cfg, gens, mode, horizon, level)
    out = ps_report_dict(report)
    out["tolerances"] = {
        "value_cap": cfg.ps_tol.value_cap, "growth_tol": cfg.ps_tol.growth_tol,
        "level_tol": cfg.ps_tol.level_tol, "decay_tol": cfg.ps_tol.decay_tol,
        "cluster_radius": cfg.ps_tol.cluster_radius,
    }
    return out


def ps_check_dispatch(cfg: ResolvedProblem, gens, mode, horizon, level):
    from .psmin import ps_check
    return ps_check(cfg.functional, gens, mode, horizon, _setting(cfg),
                    cfg.ps_tol, level=None if level is None else float(level))


def _cmd_minimize(cfg: ResolvedProblem) -> dict:
    setting = _setting(cfg)
    i_max = int(cfg.params.get("i_max", cfg.driver.i_max))
    consts = None
    if isinstance(setting, ManifoldSetting):
        consts = estimate_compatibility(cfg.structure, cfg.chart, cfg.region,
                                        path_cfg=cfg.path)
    result = minimizing_sequence_driver(cfg.functional, setting, cfg.start,
                                        i_max=i_max, cfg=cfg.driver,
                                        consts=consts)
    return driver_dict(result)


_COMMANDS = {
    "metric": _cmd_metric,
    "compat": _cmd_compat,
    "ekeland": _cmd_ekeland,
    "qiu": _cmd_qiu,
    "ps-check": _cmd_ps_check,
    "minimize": _cmd_minimize,
}


def run(command: str, cfg: ResolvedProblem) -> RunReport:
    """Dispatch one command against a resolved config."""
    if command not in _COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    results = _COMMANDS[command](cfg)
    return RunReport(command=command, config_echo=cfg.echo, results=results,
                     seed=cfg.seed)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graded-min",
        description="variational certificates on graded seminorm spaces")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--out", default=None)
        sp.add_argument("--format", choices=("structured", "tabular"),
                        default="structured")
        sp.add_argument("--param", action="append", default=[],
                        metavar="KEY=VALUE",
                        help="override a params entry (e.g. --param a=2.0)")
    rp = sub.add_parser("report")
    rp.add_argument("--in", dest="in_path", required=True)
    rp.add_argument("--out", default=None)
    rp.add_argument("--format", choices=("structured", "tabular"),
                    default="tabular")
    return parser


def _write(data: bytes, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            with open(args.in_path, "rb") as fh:
                report = parse_report(fh.read())
            _write(emit_report(report, args.format), args.out)
            return 0
        _set_threads(args.threads)
        cfg = load_problem(args.config, seed_override=args.seed)
        for item in args.param:
            key, _, value = item.partition("=")
            if not key or not value:
                raise ConfigError(f"bad --param {item!r}; expected KEY=VALUE")
            cfg.params[key] = yaml.safe_load(value)
            cfg.echo.setdefault("params", {})[key] = cfg.params[key]
        t0 = time.perf_counter()
        report = run(args.command, cfg)
        report.timing_seconds = time.perf_counter() - t0
        _write(emit_report(report, args.format), args.out)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (GradedMinError, OSError, ValueError) as exc:
        print(f"execution error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
