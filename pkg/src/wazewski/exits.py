"""First-exit times, the exit (retraction) map and near-boundary asymptotics of the exit time."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .dynamics import IntegratorConfig, SecondOrderSystem, TrajectoryState, integrate_until
from .errors import DegenerateCase, NoExit, NotApplicable, PreconditionError
from .geometry import BOUNDARY_TOL, SublevelDomain

EXIT_TIME_TOL = 1e-12
GRAZING_TOL = 1e-8


class Side(enum.Enum):
    LOWER = "lower"
    UPPER = "upper"
    SURVIVED = "survived"


def _side_at(dom: SublevelDomain, x) -> Optional[Side]:
    if dom.dimension != 1:
        return None
    return Side.UPPER if dom.gradient(x)[0] > 0 else Side.LOWER


@dataclass
class ExitRecord:
    tau: float
    exit_state: TrajectoryState
    transversality: float
    exit_side: Optional[Side]
    bracket: tuple = (0.0, 0.0)
    bracket_values: tuple = (0.0, 0.0)
    on_boundary: bool = False
    segments: list = field(default_factory=list, repr=False)

    survived = False

    @property
    def bracket_width(self) -> float:
        return self.bracket[1] - self.bracket[0]

    @property
    def anomaly(self) -> bool:
        """dF[x'(tau)] <= 0 at an exit from the interior, impossible under the hypotheses."""
        return not self.on_boundary and self.transversality <= 0

    @property
    def grazing(self) -> bool:
        return not self.on_boundary and abs(self.transversality) < GRAZING_TOL

    @property
    def side(self) -> Optional[Side]:
        return self.exit_side

    def to_dict(self) -> dict:
        s = self.exit_state
        return {
            "outcome": "exit",
            "tau": self.tau,
            "exit_x": s.x.tolist(),
            "exit_xdot": s.xdot.tolist(),
            "transversality": self.transversality,
            "exit_side": self.exit_side.value if self.exit_side else None,
            "bracket_width": self.bracket_width,
            "on_boundary": self.on_boundary,
            "anomaly": self.anomaly,
            "grazing": self.grazing,
        }


@dataclass
class SurvivalRecord:
    horizon: float
    final_state: TrajectoryState
    clearance: float  # min over sampled states of c - F(x); a lower-bound estimate
    segments: list = field(default_factory=list, repr=False)

    survived = True
    side = Side.SURVIVED

    def to_dict(self) -> dict:
        s = self.final_state
        return {
            "outcome": "survived",
            "horizon": self.horizon,
            "final_x": s.x.tolist(),
            "final_xdot": s.xdot.tolist(),
            "clearance": self.clearance,
        }


ExitOutcome = Union[ExitRecord, SurvivalRecord]


def exit_time(system: SecondOrderSystem, dom: SublevelDomain, y, v0, horizon: float,
              cfg: IntegratorConfig = IntegratorConfig(), record: bool = False) -> ExitOutcome:
    """First time the solution with x(0) = y, x'(0) = v0 meets {F = c}; tau = 0 for y on the boundary."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    v0 = np.atleast_1d(np.asarray(v0, dtype=float))
    if not horizon > 0:
        raise PreconditionError("horizon must be positive")
    gap = dom.value(y) - dom.c
    if gap > BOUNDARY_TOL:
        raise PreconditionError(f"initial point {y.tolist()!r} lies outside the closed domain (F - c = {gap:.3e})")
    start = TrajectoryState(0.0, y, v0)
    if abs(gap) <= BOUNDARY_TOL:
        return ExitRecord(0.0, start, float(dom.gradient(y) @ v0), _side_at(dom, y),
                          bracket_values=(gap, gap), on_boundary=True)

    g = lambda s: dom.value(s.x) - dom.c  # noqa: E731
    res = integrate_until(system, start, horizon, g, cfg, record=record)
    if not res.crossed:
        return SurvivalRecord(horizon, res.state, -res.predicate_max, res.segments)

    seg = res.bracket
    lo, hi = res.bracket_times
    g_lo = dom.value(seg.position(lo)) - dom.c if lo != seg.t_a else g(seg.start)
    g_hi = dom.value(seg.position(hi)) - dom.c if hi != seg.t_b else g(seg.end)
    while hi - lo > EXIT_TIME_TOL:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        gm = dom.value(seg.position(mid)) - dom.c
        if gm >= 0:
            hi, g_hi = mid, gm
        else:
            lo, g_lo = mid, gm
    lo, hi = float(lo), float(hi)
    tau = 0.5 * (lo + hi)
    state = seg.state(tau)
    segments = res.segments
    if record and segments:
        segments = segments[:-1] + [seg]
    return ExitRecord(tau, state, float(dom.gradient(state.x) @ state.xdot), _side_at(dom, state.x),
                      (lo, hi), (g_lo, g_hi), False, segments)


def retraction_point(system: SecondOrderSystem, dom: SublevelDomain, y, v_field: Callable, horizon: float,
                     cfg: IntegratorConfig = IntegratorConfig()) -> np.ndarray:
    """The exit point x(tau(y), y); identity on the boundary."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    out = exit_time(system, dom, y, v_field(y), horizon, cfg)
    if out.survived:
        raise NoExit(out)
    if out.on_boundary:
        return y.copy()
    return out.exit_state.x


def tau_linear_asymptotic(dom: SublevelDomain, y, v0) -> float:
    """Leading term (c - F(y)) / dF(y)[v0] of the exit time near a boundary point where dF[v] > 0."""
    b = float(dom.gradient(y) @ np.atleast_1d(np.asarray(v0, dtype=float)))
    if b <= 1e-12:
        raise NotApplicable(f"dF(y)[v0] = {b:.3e} is not positive")
    return (dom.c - dom.value(y)) / b


@dataclass(frozen=True)
class QuadraticExitCoefficients:
    A: float
    B: float
    C: float


def quadratic_coefficients(system: SecondOrderSystem, dom: SublevelDomain, y, v0) -> QuadraticExitCoefficients:
    """Taylor coefficients of F(x(t)) - c = A t^2 + B t + C + O(t^3)."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    v0 = np.atleast_1d(np.asarray(v0, dtype=float))
    g = dom.gradient(y)
    A = 0.5 * (float(g @ system.accel(0.0, y, v0)) + float(v0 @ dom.hessian(y) @ v0))
    return QuadraticExitCoefficients(A, float(g @ v0), dom.value(y) - dom.c)


def tau_quadratic_asymptotic(coeffs: QuadraticExitCoefficients) -> float:
    """Positive root u = (-B + sqrt(B^2 - 4AC)) / (2A) of A u^2 + B u + C = 0."""
    A, B, C = coeffs.A, coeffs.B, coeffs.C
    if A <= 1e-12:
        raise DegenerateCase(f"A = {A:.3e}; use the linear asymptotic")
    if C > 0:
        raise PreconditionError("C = F(y) - c must be <= 0")
    root = math.sqrt(B * B - 4.0 * A * C)
    if B > 0:
        return -2.0 * C / (B + root)  # same root, no cancellation
    return (root - B) / (2.0 * A)


@dataclass
class AsymptoticsRow:
    distance: float
    y: list
    tau: float
    prediction: float
    rel_error: float


@dataclass
class AsymptoticsTable:
    branch: str
    boundary_point: list
    rows: list

    @property
    def errors_decreasing(self) -> bool:
        errs = [r.rel_error for r in self.rows if r.distance > 0]
        return all(b < a for a, b in zip(errs, errs[1:]))

    @property
    def final_error(self) -> float:
        pos = [r for r in self.rows if r.distance > 0]
        return min(pos, key=lambda r: r.distance).rel_error if pos else 0.0

    @property
    def passed(self) -> bool:
        pos = [r for r in self.rows if r.distance > 0]
        zero_ok = all(r.tau == 0.0 and r.prediction == 0.0 for r in self.rows if r.distance == 0)
        if not pos:
            return zero_ok
        small_enough = min(r.distance for r in pos) <= 1e-3
        return zero_ok and self.errors_decreasing and small_enough and self.final_error < 0.05

    def to_dict(self) -> dict:
        return {
            "branch": self.branch,
            "boundary_point": self.boundary_point,
            "rows": [r.__dict__ for r in self.rows],
            "errors_decreasing": self.errors_decreasing,
            "final_error": self.final_error,
            "passed": self.passed,
        }


def validate_tau_asymptotics(system: SecondOrderSystem, dom: SublevelDomain, v_field: Callable, boundary_point,
                             distances: Sequence[float], branch: str = "auto", horizon: float = 50.0,
                             cfg: IntegratorConfig = IntegratorConfig()) -> AsymptoticsTable:
    """Compare numeric tau at points moved inward from ``boundary_point`` with the leading-order formula.

    ``branch`` is "linear", "quadratic" or "auto" (linear iff dF[v] > 0 at the boundary point).
    """
    yb = np.atleast_1d(np.asarray(boundary_point, dtype=float))
    if abs(dom.value(yb) - dom.c) > BOUNDARY_TOL:
        raise PreconditionError("boundary_point is not on the boundary")
    n = dom.gradient(yb)
    n = n / np.linalg.norm(n)
    if branch == "auto":
        branch = "linear" if float(dom.gradient(yb) @ np.atleast_1d(v_field(yb))) > 1e-12 else "quadratic"
    if branch not in ("linear", "quadratic"):
        raise PreconditionError(f"unknown branch {branch!r}")
    rows = []
    for d in distances:
        d = float(d)
        if d < 0:
            raise PreconditionError("distances must be nonnegative")
        y = yb - d * n
        v0 = np.atleast_1d(np.asarray(v_field(y), dtype=float))
        if d == 0:
            out = exit_time(system, dom, yb, v0, horizon, cfg)
            rows.append(AsymptoticsRow(0.0, yb.tolist(), out.tau, 0.0, 0.0))
            continue
        if dom.value(y) >= dom.c:
            raise PreconditionError(f"point at distance {d!r} is not inside the domain")
        out = exit_time(system, dom, y, v0, horizon, cfg)
        if out.survived:
            raise NoExit(out)
        if branch == "linear":
            pred = tau_linear_asymptotic(dom, y, v0)
        else:
            pred = tau_quadratic_asymptotic(quadratic_coefficients(system, dom, y, v0))
        rows.append(AsymptoticsRow(d, y.tolist(), out.tau, pred, abs(out.tau - pred) / out.tau))
    return AsymptoticsTable(branch, yb.tolist(), rows)
