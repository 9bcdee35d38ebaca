"""Known-in-advance motion laws: the train position w(t) or a rod angle phi(t).

Every profile exposes w, w', w'', w''' and the cumulative jerk integral
W3(t) = int_0^t |w'''(s)| ds, which the pendulum energy estimate needs.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy.interpolate import CubicSpline, PPoly

from .errors import InsufficientSamples, NonMonotoneTimes, PreconditionError, TimeOutOfDomain

__all__ = [
    "Profile",
    "TrainProfile",
    "zero",
    "constant_acceleration",
    "sinusoid",
    "polynomial",
    "piecewise_polynomial",
    "profile_from_samples",
    "load_timetable",
]

_EDGE = 1e-12


@dataclass(frozen=True)
class Profile:
    w: Callable[[float], float]
    wd: Callable[[float], float]
    wdd: Callable[[float], float]
    wddd: Callable[[float], float]
    jerk_integral: Callable[[float], float]
    t_min: float = 0.0
    t_max: float = math.inf
    period: Optional[float] = None
    sup_accel: Optional[float] = None
    name: str = "profile"
    params: dict = field(default_factory=dict, compare=False)
    breaks: tuple = ()  # where w''' may jump

    def _wrap(self, t: float) -> float:
        if self.t_min - _EDGE <= t <= self.t_max + _EDGE:
            return min(max(t, self.t_min), self.t_max)
        if self.period is not None:
            return self.t_min + (t - self.t_min) % self.period
        raise TimeOutOfDomain(
            f"profile {self.name!r} queried at t={t!r} outside [{self.t_min!r}, {self.t_max!r}]"
        )

    def position(self, t):
        return float(self.w(self._wrap(t)))

    def velocity(self, t):
        return float(self.wd(self._wrap(t)))

    def accel(self, t):
        return float(self.wdd(self._wrap(t)))

    def jerk(self, t):
        return float(self.wddd(self._wrap(t)))

    def jerk_variation(self, t: float) -> float:
        """int_0^t |w'''(s)| ds (0 is the start of the declared domain)."""
        if t <= self.t_max + _EDGE:
            return float(self.jerk_integral(min(t, self.t_max)))
        if self.period is None:
            raise TimeOutOfDomain(f"profile {self.name!r} jerk integral requested at t={t!r}")
        n, r = divmod(t - self.t_min, self.period)
        return n * float(self.jerk_integral(self.t_min + self.period)) + float(self.jerk_integral(self.t_min + r))

    def check(self, n: int = 100, rel: float = 1e-4, seed: int = 0) -> dict:
        """Finite-difference consistency of w'' with w, and the declared sup-bound, at ``n`` samples."""
        rng = np.random.default_rng(seed)
        hi = self.t_max if math.isfinite(self.t_max) else self.t_min + (self.period or 10.0)
        h = 1e-3 * min(1.0, (hi - self.t_min) / 10)
        ts = rng.uniform(self.t_min + 2 * h, hi - 2 * h, n)
        if self.breaks:
            # a stencil straddling a break sees the jump in w''', not w''
            gap = np.min(np.abs(np.asarray(self.breaks)[:, None] - ts), axis=0)
            ts = ts[gap > 2 * h]
        acc = np.array([self.accel(t) for t in ts])
        fd = np.array([(self.position(t + h) - 2 * self.position(t) + self.position(t - h)) / h**2 for t in ts])
        scale = max(float(np.max(np.abs(acc))), 1e-8)
        fd_err = float(np.max(np.abs(fd - acc))) / scale
        ok = fd_err < rel
        sup_ok = True
        if self.sup_accel is not None:
            sup_ok = bool(np.max(np.abs(acc)) <= self.sup_accel + 1e-9)
        return {"fd_relative_error": fd_err, "fd_ok": ok, "sup_bound_ok": sup_ok}


TrainProfile = Profile


def _abs_integral(jerk_antideriv: Callable[[float], float], knots: Sequence[float], t0: float):
    """Cumulative int_t0^t |j| from an antiderivative J of j and the points where j may change sign."""
    knots = np.unique(np.asarray([t0, *[k for k in knots if k > t0]], dtype=float))
    vals = np.array([jerk_antideriv(k) for k in knots])
    cum = np.concatenate(([0.0], np.cumsum(np.abs(np.diff(vals)))))

    def integral(t: float) -> float:
        if t <= t0:
            return 0.0
        i = int(np.searchsorted(knots, t, side="right")) - 1
        return float(cum[i] + abs(jerk_antideriv(t) - vals[i]))

    return integral


def zero() -> Profile:
    f = lambda t: 0.0  # noqa: E731
    return Profile(f, f, f, f, f, sup_accel=0.0, name="zero", params={"family": "zero"})


def constant_acceleration(a: float) -> Profile:
    """w = a t^2 / 2."""
    a = float(a)
    return Profile(
        lambda t: 0.5 * a * t * t,
        lambda t: a * t,
        lambda t: a,
        lambda t: 0.0,
        lambda t: 0.0,
        sup_accel=abs(a),
        name="constant-acceleration",
        params={"family": "constant-acceleration", "a": a},
    )


def _abs_cos_antideriv(u: float) -> float:
    k = math.floor((u + 0.5 * math.pi) / math.pi)
    return 2.0 * k + (-1.0) ** k * math.sin(u)


def sinusoid(amplitude: float, omega: float = 1.0, phase: float = 0.0) -> Profile:
    """w = A sin(omega t + phase); |w''| <= |A| omega^2."""
    A, om, ph = float(amplitude), float(omega), float(phase)
    if om <= 0:
        raise PreconditionError("sinusoid omega must be positive")
    h0 = _abs_cos_antideriv(ph)
    return Profile(
        lambda t: A * math.sin(om * t + ph),
        lambda t: A * om * math.cos(om * t + ph),
        lambda t: -A * om**2 * math.sin(om * t + ph),
        lambda t: -A * om**3 * math.cos(om * t + ph),
        lambda t: abs(A) * om**2 * (_abs_cos_antideriv(om * t + ph) - h0),
        period=2 * math.pi / om,
        sup_accel=abs(A) * om**2,
        name="sinusoid",
        params={"family": "sinusoid", "amplitude": A, "omega": om, "phase": ph},
    )


def polynomial(coeffs: Sequence[float], sup_accel: Optional[float] = None) -> Profile:
    """w = sum coeffs[k] t^k on [0, inf)."""
    p = Polynomial([float(c) for c in coeffs])
    d1, d2, d3 = p.deriv(1), p.deriv(2), p.deriv(3)
    if sup_accel is None and d2.degree() <= 0:
        sup_accel = abs(float(d2(0.0)))
    roots = [r.real for r in np.atleast_1d(d3.roots()) if abs(r.imag) < 1e-12 and r.real > 0] if d3.degree() > 0 else []
    return Profile(
        lambda t: float(p(t)),
        lambda t: float(d1(t)),
        lambda t: float(d2(t)),
        lambda t: float(d3(t)),
        _abs_integral(lambda t: float(d2(t)), roots, 0.0),
        sup_accel=sup_accel,
        name="polynomial",
        params={"family": "polynomial", "coeffs": [float(c) for c in coeffs]},
    )


def _from_ppoly(pp: PPoly, *, name: str, params: dict, period=None, sup_accel=None) -> Profile:
    d1, d2, d3 = pp.derivative(1), pp.derivative(2), pp.derivative(3)
    breaks = pp.x
    knots = list(breaks)
    if pp.c.shape[0] > 4:  # jerk is not piecewise constant, add its zeros
        knots += [float(r) for r in d3.roots(extrapolate=False) if np.isfinite(r)]
    return Profile(
        lambda t: float(pp(t)),
        lambda t: float(d1(t)),
        lambda t: float(d2(t)),
        lambda t: float(d3(t)),
        _abs_integral(lambda t: float(d2(t)), knots, float(breaks[0])),
        t_min=float(breaks[0]),
        t_max=float(breaks[-1]),
        period=period,
        sup_accel=sup_accel,
        name=name,
        params=params,
        breaks=tuple(float(b) for b in breaks),
    )


def piecewise_polynomial(breaks: Sequence[float], pieces: Sequence[Sequence[float]],
                         period: Optional[float] = None, sup_accel: Optional[float] = None) -> Profile:
    """Piece i is sum pieces[i][k] (t - breaks[i])^k on [breaks[i], breaks[i+1]]."""
    breaks = np.asarray(breaks, dtype=float)
    if len(pieces) != len(breaks) - 1:
        raise PreconditionError("need len(breaks) - 1 pieces")
    if np.any(np.diff(breaks) <= 0):
        raise NonMonotoneTimes("breaks must be strictly increasing")
    deg = max(len(p) for p in pieces) - 1
    c = np.zeros((max(deg, 3) + 1, len(pieces)))
    for i, p in enumerate(pieces):
        for k, a in enumerate(p):
            c[-1 - k, i] = a
    params = {"family": "piecewise-polynomial", "breaks": breaks.tolist(), "pieces": [list(map(float, p)) for p in pieces]}
    return _from_ppoly(PPoly(c, breaks), name="piecewise-polynomial", params=params, period=period, sup_accel=sup_accel)


def profile_from_samples(times: Sequence[float], positions: Sequence[float], *, period: Optional[float] = None,
                         sup_accel: Optional[float] = None) -> Profile:
    """Natural cubic spline through tabulated (t, w); w'' is piecewise linear, w''' piecewise constant."""
    t = np.asarray(times, dtype=float)
    w = np.asarray(positions, dtype=float)
    if t.shape != w.shape or t.ndim != 1:
        raise PreconditionError("times and positions must be 1-D and of equal length")
    if len(t) < 4:
        raise InsufficientSamples(f"need at least 4 samples, got {len(t)}")
    if np.any(np.diff(t) <= 0):
        raise NonMonotoneTimes("sample times must be strictly increasing")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(w))):
        raise PreconditionError("samples must be finite")
    spline = CubicSpline(t, w, bc_type="natural")
    params = {"family": "timetable", "n_samples": int(len(t))}
    return _from_ppoly(spline, name="timetable", params=params, period=period, sup_accel=sup_accel)


def load_timetable(path, **kwargs) -> Profile:
    """Read a CSV with header ``t,w`` and build its spline profile."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["t", "w"]:
            raise PreconditionError(f"{path}: expected header 't,w', got {reader.fieldnames!r}")
        rows = []
        for r in reader:
            try:
                rows.append((float(r["t"]), float(r["w"])))
            except (TypeError, ValueError) as exc:
                raise PreconditionError(f"{path}, line {reader.line_num}: {exc}") from exc
    if not rows:
        raise InsufficientSamples(f"{path}: no samples")
    t, w = zip(*rows)
    prof = profile_from_samples(t, w, **kwargs)
    return replace(prof, params={**prof.params, "path": str(path)})
