"""Adaptive integration of second-order systems  x'' = f(t, x, x').

The stepper is the Dormand-Prince 5(4) pair applied to the first-order
system (x, x').  Each accepted step carries a quintic Hermite interpolant for
x built from x, x' and x'' at both step ends (x'' is free thanks to FSAL), so
position is interpolated to fifth order and velocity to fourth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import IntegrationBreakdown, NonFiniteRhs, PreconditionError, StepUnderflow

__all__ = [
    "BoundedForcing",
    "DenseSegment",
    "IntegrationResult",
    "IntegratorConfig",
    "SecondOrderSystem",
    "TrajectoryState",
    "integrate_until",
    "sample_segments",
    "step_adaptive",
]


@dataclass(frozen=True)
class BoundedForcing:
    """Decomposition f = base(x, xi) + sum_k u_k(t) * terms_k(x, xi) with u_k in [lo_k, hi_k].

    Lets the boundary checker take the worst case over all admissible times
    without sampling t.  Bounds may be infinite.
    """

    base: Callable[[np.ndarray, np.ndarray], np.ndarray]
    terms: tuple = ()  # of (callable(x, xi) -> ndarray, lo, hi)


@dataclass(frozen=True)
class SecondOrderSystem:
    dimension: int
    rhs: Callable[[float, np.ndarray, np.ndarray], np.ndarray]
    name: str = "system"
    forcing: Optional[BoundedForcing] = None

    def __post_init__(self):
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise PreconditionError(f"dimension must be a positive integer, got {self.dimension!r}")

    def accel(self, t: float, x: np.ndarray, xdot: np.ndarray) -> np.ndarray:
        a = np.asarray(self.rhs(t, x, xdot), dtype=float).reshape(self.dimension)
        return a


@dataclass(frozen=True)
class TrajectoryState:
    t: float
    x: np.ndarray
    xdot: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)))
        object.__setattr__(self, "xdot", np.atleast_1d(np.asarray(self.xdot, dtype=float)))
        if self.x.shape != self.xdot.shape or self.x.ndim != 1:
            raise PreconditionError("x and xdot must be 1-D arrays of equal length")

    @property
    def dimension(self) -> int:
        return self.x.shape[0]

    def is_finite(self) -> bool:
        return math.isfinite(self.t) and bool(np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.xdot)))


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-10
    atol: float = 1e-12
    initial_step: float = 1e-3
    min_step: float = 1e-14
    max_step: float = 0.1
    samples_per_step: int = 8

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise PreconditionError("tolerances must be positive")
        if not (0 < self.min_step <= self.initial_step <= self.max_step):
            raise PreconditionError("need 0 < min_step <= initial_step <= max_step")
        if self.samples_per_step < 0:
            raise PreconditionError("samples_per_step must be >= 0")


@dataclass(frozen=True)
class DenseSegment:
    """One accepted step [t_a, t_b] with a quintic Hermite interpolant for x."""

    t_a: float
    t_b: float
    coeffs: np.ndarray  # shape (6, m), x(s) = sum coeffs[k] s**k, s = (t - t_a) / h
    start: TrajectoryState
    end: TrajectoryState
    h_next: float = field(default=0.0, compare=False)

    @property
    def h(self) -> float:
        return self.t_b - self.t_a

    @classmethod
    def hermite(cls, start, end, a_start, a_end, h_next=0.0):
        h = end.t - start.t
        c0 = start.x
        c1 = h * start.xdot
        c2 = 0.5 * h * h * a_start
        r0 = end.x - (c0 + c1 + c2)
        r1 = h * end.xdot - (c1 + 2.0 * c2)
        r2 = h * h * a_end - 2.0 * c2
        c3 = 10.0 * r0 - 4.0 * r1 + 0.5 * r2
        c4 = -15.0 * r0 + 7.0 * r1 - r2
        c5 = 6.0 * r0 - 3.0 * r1 + 0.5 * r2
        return cls(start.t, end.t, np.array([c0, c1, c2, c3, c4, c5]), start, end, h_next)

    def _s(self, t):
        return (np.asarray(t, dtype=float) - self.t_a) / self.h

    def position(self, t):
        """x at time(s) t; scalar t gives shape (m,), array t gives (len(t), m)."""
        s = self._s(t)[..., None]
        c = self.coeffs
        out = c[5]
        for k in (4, 3, 2, 1, 0):
            out = out * s + c[k]
        return out

    def velocity(self, t):
        s = self._s(t)[..., None]
        c = self.coeffs
        out = 5.0 * c[5]
        for k in (4, 3, 2, 1):
            out = out * s + k * c[k]
        return out / self.h

    def state(self, t: float) -> TrajectoryState:
        if t == self.t_b:
            return self.end
        if t == self.t_a:
            return self.start
        return TrajectoryState(t, self.position(t), self.velocity(t))

    def contains(self, t: float) -> bool:
        return self.t_a <= t <= self.t_b


# Dormand-Prince 5(4)
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


def _deriv(system, t, y, m):
    a = system.accel(t, y[:m], y[m:])
    return np.concatenate((y[m:], a))


def _attempt(system, t, y, k1, h, m):
    """One Dormand-Prince trial; returns (y_new, k7, err_vector) or None if a stage was non-finite."""
    ks = [k1]
    for i in range(1, 7):
        yi = y + h * sum(a * k for a, k in zip(_A[i], ks) if a != 0.0)
        ki = _deriv(system, t + _C[i] * h, yi, m)
        if not np.all(np.isfinite(ki)):
            return None
        ks.append(ki)
    y_new = y + h * sum(a * k for a, k in zip(_A[6], ks) if a != 0.0)
    err = h * (np.array(ks).T @ _E)
    return y_new, ks[6], err


def _steps(system, state, cfg, t_end=math.inf, h=None):
    """Yield accepted DenseSegments from ``state`` toward ``t_end``."""
    m = system.dimension
    if state.dimension != m:
        raise PreconditionError(f"state dimension {state.dimension} != system dimension {m}")
    if not state.is_finite():
        raise PreconditionError("initial state must be finite")
    t = state.t
    y = np.concatenate((state.x, state.xdot))
    k1 = _deriv(system, t, y, m)
    if not np.all(np.isfinite(k1)):
        raise NonFiniteRhs(t)
    h = min(cfg.initial_step if h is None else h, cfg.max_step)
    current = state
    while t < t_end:
        nonfinite = False
        while True:
            last = False
            if t + h >= t_end:
                h = t_end - t
                last = True
            if h < cfg.min_step and not last:
                if nonfinite:
                    raise NonFiniteRhs(t, f"right-hand side non-finite for every step down to {h:.3e} at t={t!r}")
                raise StepUnderflow(t, h)
            trial = _attempt(system, t, y, k1, h, m)
            if trial is None:
                nonfinite = True
                h *= 0.25
                continue
            y_new, k7, err = trial
            scale = cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(y_new))
            err_norm = math.sqrt(float(np.mean((err / scale) ** 2)))
            if err_norm <= 1.0:
                break
            if last and h < cfg.min_step:
                break
            h *= max(_MIN_FACTOR, _SAFETY * err_norm ** -0.2)
        t_new = t_end if last else t + h
        factor = _MAX_FACTOR if err_norm == 0.0 else min(_MAX_FACTOR, max(_MIN_FACTOR, _SAFETY * err_norm ** -0.2))
        h_next = min(cfg.max_step, max(h * factor, cfg.min_step))
        new = TrajectoryState(t_new, y_new[:m], y_new[m:])
        seg = DenseSegment.hermite(current, new, k1[m:], k7[m:], h_next)
        yield seg
        t, y, k1, current, h = t_new, y_new, k7, new, h_next


def step_adaptive(system: SecondOrderSystem, state: TrajectoryState, cfg: IntegratorConfig = IntegratorConfig(),
                  h: Optional[float] = None) -> tuple[TrajectoryState, DenseSegment]:
    """Take one accepted adaptive step from ``state``; the segment's ``h_next`` suggests the next step."""
    seg = next(_steps(system, state, cfg, h=h))
    return seg.end, seg


@dataclass
class IntegrationResult:
    state: TrajectoryState
    bracket: Optional[DenseSegment] = None
    # sub-interval of ``bracket`` whose sampled predicate values differ in sign
    bracket_times: Optional[tuple] = None
    predicate_max: float = -math.inf
    segments: list = field(default_factory=list)

    @property
    def crossed(self) -> bool:
        return self.bracket is not None


def integrate_until(system: SecondOrderSystem, start: TrajectoryState, t_end: float,
                    stop_predicate: Optional[Callable[[TrajectoryState], float]] = None,
                    cfg: IntegratorConfig = IntegratorConfig(), record: bool = False) -> IntegrationResult:
    """Integrate to ``t_end`` or until ``stop_predicate`` changes sign across an accepted step.

    The predicate sees every step endpoint plus ``cfg.samples_per_step``
    equally spaced interior points from the dense interpolant; a crossing that
    re-crosses between two samples can be missed.  A zero value counts as a
    crossing.  Step underflow or a non-finite rhs is re-raised as
    :class:`IntegrationBreakdown`.
    """
    if not start.t < t_end:
        raise PreconditionError(f"start time {start.t!r} must precede t_end {t_end!r}")
    result = IntegrationResult(start)
    g0 = None
    if stop_predicate is not None:
        g0 = float(stop_predicate(start))
        result.predicate_max = g0
    sign0 = math.copysign(1.0, g0) if g0 else 1.0
    n = cfg.samples_per_step
    fractions = np.arange(1, n + 1) / (n + 1)
    try:
        for seg in _steps(system, start, cfg, t_end):
            if record:
                result.segments.append(seg)
            result.state = seg.end
            if stop_predicate is None:
                continue
            times = seg.t_a + fractions * seg.h
            xs = seg.position(times) if n else np.empty((0, system.dimension))
            vs = seg.velocity(times) if n else xs
            t_prev = seg.t_a
            for i in range(n + 1):
                if i < n:
                    ti, st = times[i], TrajectoryState(times[i], xs[i], vs[i])
                else:
                    ti, st = seg.t_b, seg.end
                g = float(stop_predicate(st))
                if g > result.predicate_max:
                    result.predicate_max = g
                if g == 0.0 or math.copysign(1.0, g) != sign0:
                    result.bracket = seg
                    result.bracket_times = (t_prev, ti)
                    return result
                t_prev = ti
    except (StepUnderflow, NonFiniteRhs) as exc:
        raise IntegrationBreakdown(result.state, exc) from exc
    return result


def sample_segments(segments: Sequence[DenseSegment], samples_per_step: int = 8,
                    t_stop: Optional[float] = None) -> list[TrajectoryState]:
    """States at every step start plus equally spaced interior points, ending at ``t_stop`` or the last step end."""
    out = []
    fractions = np.arange(samples_per_step + 1) / (samples_per_step + 1)
    for seg in segments:
        if t_stop is not None and seg.t_a >= t_stop:
            break
        times = seg.t_a + fractions * seg.h
        if t_stop is not None:
            times = times[times < t_stop]
        xs, vs = seg.position(times), seg.velocity(times)
        out.extend(TrajectoryState(t, x, v) for t, x, v in zip(times, xs, vs))
    if segments:
        last = segments[-1]
        out.append(last.state(t_stop) if t_stop is not None and t_stop <= last.t_b else last.end)
    return out
