"""The pipelines behind each CLI subcommand.

Each ``run_*`` function takes a :class:`Scenario` and returns ``(payload,
exit_code, files)`` where ``files`` maps output file names to their text.
Nothing here touches the filesystem or stdout.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Optional

import numpy as np

from . import __version__
from .dynamics import sample_segments
from .errors import BoundViolated, PreconditionError, SearchError
from .exits import validate_tau_asymptotics, exit_time
from .geometry import check_boundary_inequality, check_derivatives, check_initial_field
from .models import PendulumModel, RotatingRodModel, cone_bound, energy_bound_check
from .scenario import Scenario, build_model
from .search import bisect_survivor_1d

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_HYPOTHESIS = 2
EXIT_SEARCH = 3


def fmt(v: float) -> str:
    return format(float(v), ".17g")


def to_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _time_limit(model) -> float:
    if isinstance(model, PendulumModel):
        p = model.profile
    elif isinstance(model, RotatingRodModel):
        p = model.rotation
    else:
        return math.inf
    return math.inf if p.period is not None else p.t_max


def verification(sc: Scenario, model) -> dict:
    """Boundary inequality, initial-field condition and derivative consistency for ``model``."""
    dom, system, grid = model.domain, model.system, model.grid
    vs = sc.verify
    ineq = check_boundary_inequality(dom, system, grid, vs.times(_time_limit(model)), vs.xi_radius,
                                     vs.xi_samples, vs.seed)
    field = check_initial_field(dom, model.v_field, grid)
    lo, hi = model.endpoints
    inner = np.linspace(lo, hi, 102)[1:-1]
    deriv = check_derivatives(dom, inner.reshape(-1, 1))
    out = {
        "inequality": ineq.to_dict(),
        "initial_field": field.to_dict(),
        "derivatives": deriv,
    }
    passed = ineq.passed and field.passed and deriv["passed"]
    if isinstance(model, PendulumModel):
        out["profile"] = model.profile.check()
        passed = passed and out["profile"]["fd_ok"] and out["profile"]["sup_bound_ok"]
        if sc.pendulum.cone:
            out["cone"] = cone_bound(model.profile.sup_accel, sc.pendulum.cone_epsilon).to_dict()
    out["passed"] = bool(passed)
    return out


def run_verify(sc: Scenario):
    model = build_model(sc)
    rep = verification(sc, model)
    return rep, (EXIT_OK if rep["passed"] else EXIT_HYPOTHESIS), {}


def trajectory_csv(dom, states) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "x", "xdot", "F"])
    for s in states:
        w.writerow([fmt(s.t), fmt(s.x[0]), fmt(s.xdot[0]), fmt(dom.value(s.x))])
    return buf.getvalue()


def _energy(model, states) -> Optional[dict]:
    if not isinstance(model, PendulumModel):
        return None
    try:
        return energy_bound_check(model.profile, states).to_dict()
    except BoundViolated as exc:
        return {"passed": False, "violation": {"t": exc.t, "lhs": exc.lhs, "bound": exc.rhs}}


def run_exit(sc: Scenario, y: Optional[float] = None, horizon: Optional[float] = None, trace: bool = False):
    model = build_model(sc)
    y = sc.exit.y if y is None else y
    if y is None:
        raise PreconditionError("no initial condition: pass --y or set [exit] y")
    horizon = sc.exit.horizon if horizon is None else horizon
    y_arr = np.atleast_1d(float(y))
    v0 = model.v_field(y_arr) if sc.exit.v0 is None else np.atleast_1d(sc.exit.v0)
    cfg = sc.integrator.build()
    out = exit_time(model.system, model.domain, y_arr, v0, horizon, cfg, record=True)
    t_stop = None if out.survived else out.tau
    states = sample_segments(out.segments, cfg.samples_per_step, t_stop) if out.segments else [
        out.exit_state if not out.survived else out.final_state]
    payload = {"y": float(y), "v0": np.asarray(v0).tolist(), "horizon": horizon, **out.to_dict()}
    energy = _energy(model, states)
    if energy is not None:
        payload["energy"] = energy
    files = {"trajectory.csv": trajectory_csv(model.domain, states)} if trace else {}
    return payload, EXIT_OK, files


def run_search(sc: Scenario):
    lambdas = sc.search.lambdas if (sc.search.lambdas and sc.model == "pendulum") else [None]
    cfg = sc.integrator.build()
    scfg = sc.search.build()
    certs, files = [], {}
    code = EXIT_OK
    for lam in lambdas:
        model = build_model(sc, lam)
        ver = verification(sc, model)
        tag = "" if lam is None else f"_lam{lam:+g}"
        entry = {"lambda": getattr(model, "lam", None), "verification": ver}
        try:
            cert = bisect_survivor_1d(model.system, model.domain, model.v_field, scfg, cfg, model.endpoints)
        except SearchError as exc:
            entry["error"] = {"type": type(exc).__name__, "message": str(exc),
                              "trace": [p.to_dict() for p in exc.trace]}
            files[f"search_trace{tag}.json"] = to_json(entry["error"])
            certs.append(entry)
            code = EXIT_SEARCH
            continue
        cert.hypotheses_verified = ver["passed"]
        states = sample_segments(cert.witness_record.segments, cfg.samples_per_step)
        cd = cert.to_dict()
        cd["max_abs_x"] = max(abs(float(s.x[0])) for s in states)
        energy = _energy(model, states)
        if energy is not None:
            cd["energy"] = energy
        entry["certificate"] = cd
        files[f"certificate{tag}.json"] = to_json(cd)
        files[f"witness{tag}.csv"] = trajectory_csv(model.domain, states)
        certs.append(entry)
    return {"runs": certs}, code, files


def run_sweep(sc: Scenario, horizon: Optional[float] = None):
    if sc.sweep is None:
        raise PreconditionError("scenario has no [sweep] section")
    model = build_model(sc)
    horizon = sc.sweep.horizon if horizon is None else horizon
    grid = sc.sweep.grid()
    dom = model.domain
    for y in grid:
        if dom.value(np.atleast_1d(y)) - dom.c > 1e-10:
            raise PreconditionError(f"sweep point {y!r} lies outside the closed domain")
    cfg = sc.integrator.build()
    rows = []
    for y in grid:
        ya = np.atleast_1d(y)
        out = exit_time(model.system, dom, ya, model.v_field(ya), horizon, cfg)
        rows.append({
            "y": float(y),
            "outcome": "survived" if out.survived else "exit",
            "value": out.clearance if out.survived else out.tau,
            "exit_side": out.side.value if out.side else "",
        })
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["y", "outcome", "tau_or_clearance", "exit_side"])
    for r in rows:
        w.writerow([fmt(r["y"]), r["outcome"], fmt(r["value"]), r["exit_side"]])
    return {"horizon": horizon, "rows": rows}, EXIT_OK, {"sweep.csv": buf.getvalue()}


def run_asymptotics(sc: Scenario):
    model = build_model(sc)
    a = sc.asymptotics
    point = model.endpoints[1] if a.boundary == "upper" else model.endpoints[0]
    table = validate_tau_asymptotics(model.system, model.domain, model.v_field, [point], a.distances,
                                     a.branch, a.horizon, sc.integrator.build())
    rep = table.to_dict()
    return rep, (EXIT_OK if rep["passed"] else EXIT_HYPOTHESIS), {}


def run_report(command: str, sc: Scenario, payload, code: int, timings: dict) -> dict:
    return {
        "tool": "wazewski",
        "version": __version__,
        "command": command,
        "scenario": sc.echo(),
        "result": payload,
        "exit_code": code,
        "timings": timings,
    }
