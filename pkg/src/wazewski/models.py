"""Concrete systems: the Whitney pendulum on a moving train and a ring on a rotating rod.

Units are chosen so that g = l = m = 1.  The pendulum angle phi is measured
from the upward vertical and obeys  phi'' = sin(phi) - w''(t) cos(phi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .dynamics import BoundedForcing, SecondOrderSystem, TrajectoryState
from .errors import BoundViolated, PreconditionError
from .geometry import BoundaryGrid, SublevelDomain, ball, interval_endpoints
from .profiles import Profile, polynomial

HALF_PI = 0.5 * math.pi


def pendulum_rhs(profile: Profile) -> SecondOrderSystem:
    """phi'' = sin(phi) - w''(t) cos(phi); velocity independent."""
    accel = profile.accel

    def rhs(t, x, xdot):
        return math.sin(x[0]) - accel(t) * math.cos(x[0])

    forcing = None
    if profile.sup_accel is not None:
        C = profile.sup_accel
        forcing = BoundedForcing(
            base=lambda x, xi: np.sin(x),
            terms=((lambda x, xi: -np.cos(x), -C, C),),
        )
    return SecondOrderSystem(1, rhs, name=f"pendulum[{profile.name}]", forcing=forcing)


@dataclass(frozen=True)
class PendulumModel:
    profile: Profile
    lam: float = 0.0
    half_width: float = HALF_PI

    @property
    def system(self) -> SecondOrderSystem:
        return pendulum_rhs(self.profile)

    @property
    def domain(self) -> SublevelDomain:
        return ball(self.half_width, 1, name=f"|phi| < {self.half_width!r}")

    @property
    def endpoints(self) -> tuple[float, float]:
        return (-self.half_width, self.half_width)

    @property
    def grid(self) -> BoundaryGrid:
        return BoundaryGrid.from_points(self.domain, [[-self.half_width], [self.half_width]])

    def initial_velocity(self, psi) -> np.ndarray:
        """lam * (c - psi^2): vanishes on the boundary, so dF[v] = 0 there."""
        psi = np.atleast_1d(np.asarray(psi, dtype=float))
        return self.lam * (self.half_width**2 - psi * psi)

    @property
    def v_field(self) -> Callable:
        return self.initial_velocity


@dataclass(frozen=True)
class RotatingRodModel:
    """Ring sliding on a rod rotating about its midpoint: r'' = phi'(t)^2 r - sin(phi(t))."""

    rotation: Profile
    r_star: float
    C: float
    field: Optional[Callable] = None

    def __post_init__(self):
        if not self.C > 0:
            raise PreconditionError(f"need phi'^2 >= C > 0, got C = {self.C!r}")
        if not self.r_star * self.C > 1:
            raise PreconditionError(f"rod too short: r* C = {self.r_star * self.C!r} must exceed 1")
        hi = self.rotation.t_max if math.isfinite(self.rotation.t_max) else self.rotation.t_min + 100.0
        for t in np.linspace(self.rotation.t_min, hi, 1001):
            if self.rotation.velocity(t) ** 2 < self.C - 1e-12:
                raise PreconditionError(f"phi'(t)^2 < C at t = {t!r}")

    @classmethod
    def uniform(cls, omega: float, r_star: float, phase: float = 0.0, field: Optional[Callable] = None):
        """phi(t) = omega t + phase, so C = omega^2."""
        rot = polynomial([phase, omega])
        rot = replace(rot, name="uniform-rotation",
                      params={"family": "uniform-rotation", "omega": float(omega), "phase": float(phase)})
        return cls(rot, r_star, float(omega) ** 2, field)

    @property
    def system(self) -> SecondOrderSystem:
        return rod_rhs(self)

    @property
    def domain(self) -> SublevelDomain:
        return ball(self.r_star, 1, name=f"|r| < {self.r_star!r}")

    @property
    def endpoints(self) -> tuple[float, float]:
        return (-self.r_star, self.r_star)

    @property
    def grid(self) -> BoundaryGrid:
        return BoundaryGrid.from_points(self.domain, [[-self.r_star], [self.r_star]])

    @property
    def v_field(self) -> Callable:
        if self.field is not None:
            return self.field
        return lambda r: np.zeros_like(np.atleast_1d(np.asarray(r, dtype=float)))


def rod_rhs(model: RotatingRodModel) -> SecondOrderSystem:
    rot = model.rotation

    def rhs(t, x, xdot):
        return rot.velocity(t) ** 2 * x[0] - math.sin(rot.position(t))

    forcing = BoundedForcing(
        base=lambda x, xi: np.zeros_like(x),
        terms=(
            (lambda x, xi: np.asarray(x, dtype=float), model.C, math.inf),
            (lambda x, xi: -np.ones_like(x), -1.0, 1.0),
        ),
    )
    return SecondOrderSystem(1, rhs, name=f"rod[{rot.name}]", forcing=forcing)


@dataclass(frozen=True)
class ConeBound:
    C: float
    phi0: float
    epsilon: float
    half_width: float
    worst_case_margin: Optional[float]

    @property
    def domain(self) -> Optional[SublevelDomain]:
        if self.half_width <= 0:
            return None
        return ball(self.half_width, 1, name=f"cone |phi| < {self.half_width!r}")

    def to_dict(self) -> dict:
        return {
            "C": self.C,
            "phi0": self.phi0,
            "epsilon": self.epsilon,
            "half_width": self.half_width,
            "worst_case_margin": self.worst_case_margin,
        }


def cone_worst_margin(C: float, h: float) -> float:
    """min over |w''| <= C of dF[f] at |phi| = h, i.e. 2h (sin h - C cos h)."""
    return 2.0 * h * (math.sin(h) - C * math.cos(h))


def cone_bound(C: float, epsilon: float = 1e-3) -> ConeBound:
    """phi0 = arctan(C) and the domain |phi| < phi0 - epsilon used for the refined search.

    The worst-case boundary margin is reported for the shrunken half-width.
    It is negative there (tan(h) < C for h < phi0), so searches in the cone
    run with the boundary hypothesis flagged as unverified.
    """
    if C < 0:
        raise PreconditionError("C must be nonnegative")
    phi0 = math.atan(C)
    h = phi0 - epsilon
    return ConeBound(float(C), phi0, float(epsilon), h, cone_worst_margin(C, h) if h > 0 else None)


@dataclass
class EnergyReport:
    K0: float
    min_slack: float
    at_t: float
    n_samples: int

    @property
    def passed(self) -> bool:
        return self.min_slack >= 0

    def to_dict(self) -> dict:
        return {"K0": self.K0, "min_slack": self.min_slack, "at_t": self.at_t,
                "n_samples": self.n_samples, "passed": self.passed}


def energy_constant(profile: Profile, start: TrajectoryState) -> float:
    """K0 = phi'(0)^2 + 4 + 2|w''(0)|."""
    return float(start.xdot[0]) ** 2 + 4.0 + 2.0 * abs(profile.accel(start.t))


def energy_bound_check(profile: Profile, trajectory: Sequence[TrajectoryState], tol: float = 1e-9) -> EnergyReport:
    """Check phi'(t)^2 <= K0 + 2 (int_0^t |w'''| + |w''(t)|) at every sample.

    Multiplying the equation by phi' and integrating by parts gives
    phi'^2/2 = phi'(0)^2/2 + cos phi(0) - cos phi - w'' sin phi + w''(0) sin phi(0) + int w''' sin phi,
    and bounding |sin|, |cos| by 1 gives the estimate with K0 as above.
    """
    if not trajectory:
        raise PreconditionError("empty trajectory")
    K0 = energy_constant(profile, trajectory[0])
    w3_0 = profile.jerk_variation(trajectory[0].t)
    best, at = math.inf, trajectory[0].t
    for s in trajectory:
        bound = K0 + 2.0 * (profile.jerk_variation(s.t) - w3_0 + abs(profile.accel(s.t)))
        lhs = float(s.xdot[0]) ** 2
        slack = bound - lhs
        if slack < best:
            best, at = slack, s.t
        if slack < -tol * max(1.0, bound):
            raise BoundViolated(s.t, lhs, bound)
    return EnergyReport(K0, best, at, len(trajectory))


@dataclass(frozen=True)
class Custom1DModel:
    """A user-supplied 1-D system given as expressions in t, x, xdot (rhs), x (F, field)."""

    rhs_expr: str
    F_expr: str
    c: float
    field_expr: str = "0"
    endpoints_hint: Optional[tuple] = None
    _compiled: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        import sympy as sp

        t, x, xd = sp.symbols("t x xdot", real=True)
        names = {"t": t, "x": x, "xdot": xd}
        try:
            rhs = sp.sympify(self.rhs_expr, locals=names)
            F = sp.sympify(self.F_expr, locals=names)
            v = sp.sympify(self.field_expr, locals=names)
        except (sp.SympifyError, SyntaxError, TypeError) as exc:
            raise PreconditionError(f"cannot parse custom model expression: {exc}") from exc
        if not rhs.free_symbols <= {t, x, xd}:
            raise PreconditionError(f"rhs may only use t, x, xdot: {rhs}")
        if not F.free_symbols <= {x} or not v.free_symbols <= {x}:
            raise PreconditionError("F and field may only use x")
        self._compiled.update(
            rhs=sp.lambdify((t, x, xd), rhs, "math"),
            F=sp.lambdify(x, F, "math"),
            dF=sp.lambdify(x, sp.diff(F, x), "math"),
            d2F=sp.lambdify(x, sp.diff(F, x, 2), "math"),
        )

    @property
    def system(self) -> SecondOrderSystem:
        f = self._compiled["rhs"]
        return SecondOrderSystem(1, lambda t, x, xd: float(f(t, x[0], xd[0])), name="custom-1d")

    @property
    def domain(self) -> SublevelDomain:
        F, dF, d2F = self._compiled["F"], self._compiled["dF"], self._compiled["d2F"]
        return SublevelDomain(
            1,
            lambda x: float(F(x[0])),
            lambda x: np.array([float(dF(x[0]))]),
            lambda x: np.array([[float(d2F(x[0]))]]),
            float(self.c),
            name=f"{self.F_expr} < {self.c!r}",
        )

    @property
    def endpoints(self) -> tuple[float, float]:
        if self.endpoints_hint is not None:
            return tuple(self.endpoints_hint)
        return interval_endpoints(self.domain)

    @property
    def grid(self) -> BoundaryGrid:
        return BoundaryGrid.from_points(self.domain, np.reshape(self.endpoints, (-1, 1)))

    @property
    def v_field(self) -> Callable:
        return expression_field(self.field_expr)


def expression_field(expr: str) -> Callable:
    """Compile a 1-D initial-velocity field given as an expression in x."""
    import sympy as sp

    x = sp.Symbol("x", real=True)
    try:
        e = sp.sympify(expr, locals={"x": x})
    except (sp.SympifyError, SyntaxError, TypeError) as exc:
        raise PreconditionError(f"cannot parse field expression {expr!r}: {exc}") from exc
    if not e.free_symbols <= {x}:
        raise PreconditionError(f"field may only use x: {expr!r}")
    f = sp.lambdify(x, e, "math")
    return lambda y: np.array([float(f(np.atleast_1d(np.asarray(y, dtype=float))[0]))])
