"""Run reports: structured (canonical JSON) and tabular emission.

The structured payload is deterministic for a fixed config echo and
seed: keys are sorted, floats use repr, and wall-clock timing is carried
in memory only (serialized as null) so that replaying a run reproduces
the bytes exactly. Timing shows up on the tabular/human path instead.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__

SCHEMA = "gradedmin-report/1"


def plain(obj):
    """Recursively convert results to JSON-friendly python values."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return plain(dataclasses.asdict(obj))
    return obj


@dataclass
class RunReport:
    command: str
    config_echo: dict
    results: dict
    seed: int
    schema: str = SCHEMA
    timing_seconds: Optional[float] = field(default=None, compare=False)

    def payload(self) -> dict:
        return {
            "schema": self.schema,
            "version": __version__,
            "command": self.command,
            "seed": self.seed,
            "config": plain(self.config_echo),
            "results": plain(self.results),
            "empty": not self.results,
            "timing_seconds": None,
        }


def emit_report(report: RunReport, fmt: str = "structured") -> bytes:
    if fmt == "structured":
        text = json.dumps(report.payload(), sort_keys=True,
                          separators=(",", ":"))
        return (text + "\n").encode("utf-8")
    if fmt == "tabular":
        rows = [("command", report.command, "-"), ("seed", report.seed, "-")]
        if report.timing_seconds is not None:
            rows.append(("timing_seconds", f"{report.timing_seconds:.3f}", "-"))
        flat = _flatten(plain(report.results))
        if not flat:
            rows.append(("results", "(empty)", "-"))
        tolerances = {k[:-4]: v for k, v in flat.items() if k.endswith("_tol")}
        for key, val in flat.items():
            tol = tolerances.get(key, "-")
            rows.append((key, _fmt(val), _fmt(tol)))
        width = max(len(r[0]) for r in rows)
        lines = [f"{'quantity'.ljust(width)}  value  tolerance"]
        lines += [f"{k.ljust(width)}  {v}  {t}" for k, v, t in rows]
        return ("\n".join(lines) + "\n").encode("utf-8")
    raise ValueError(f"unknown report format {fmt!r}")


def parse_report(data: bytes) -> RunReport:
    payload = json.loads(data.decode("utf-8"))
    if payload.get("schema") != SCHEMA:
        raise ValueError(f"unknown report schema {payload.get('schema')!r}")
    return RunReport(command=payload["command"],
                     config_echo=payload["config"],
                     results=payload["results"],
                     seed=payload["seed"])


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _flatten(obj, prefix="") -> dict:
    out = {}
    if isinstance(obj, dict):
        for k, v in obj.items():
            out.update(_flatten(v, f"{prefix}{k}."))
    elif isinstance(obj, list) and obj and all(
            isinstance(v, (int, float, bool)) for v in obj):
        out[prefix[:-1]] = "[" + ", ".join(_fmt(v) for v in obj) + "]"
    elif isinstance(obj, list):
        for idx, v in enumerate(obj):
            out.update(_flatten(v, f"{prefix}{idx}."))
    else:
        out[prefix[:-1]] = obj
    return out


# ---------------------------------------------------------------------------
# serializers for module results


def witness_dict(w) -> dict:
    return {
        "point": list(w.point.coords),
        "valid": bool(w.valid),
        "validity_margin_tol": -1e-9,
        "conclusions": plain(w.conclusions),
        "inf_estimate": w.inf_estimate,
        "params": plain(w.params),
        "grid": {"center": list(w.grid_center),
                 "half_width": w.grid_half_width, "total": w.grid_total,
                 "note": "domination is verified on this finite grid only"},
        "trace_steps": len(w.trace),
        "final_value": w.trace[-1].f_value if w.trace else None,
    }


def certificate_dict(c) -> dict:
    return {
        "point": list(c.point.coords),
        "level": c.level,
        "value": c.value,
        "value_gap": c.value_gap,
        "dual_norms": list(c.dual_norms),
        "dual_bound": c.dual_bound,
        "bound_ok": bool(c.bound_ok),
        "inf_estimate": c.inf_estimate,
        "notes": plain(c.notes),
    }


def ps_report_dict(r) -> dict:
    return {
        "mode": r.mode,
        "level": r.level,
        "verdict": r.verdict,
        "failure_sequence": r.failure_sequence,
        "horizon": r.horizon,
        "note": r.note,
        "sequences": [plain(s) for s in r.sequences],
    }


def driver_dict(res) -> dict:
    return {
        "setting": res.setting_kind,
        "c_estimate": res.c_estimate,
        "cluster": res.cluster,
        "failure": res.failure,
        "iterates_outside_region": res.iterates_outside_region,
        "certificate": certificate_dict(res.certificate)
        if res.certificate is not None else None,
        "trace": [{"i": s.i, "eps": s.eps, "f": s.f_value,
                   "dual_max": s.dual_max} for s in res.trace],
    }
