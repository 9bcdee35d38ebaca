"""Sublevel domains D_c = {F < c} and numerical checks of the boundary hypotheses.

The boundary inequality is

    dF(x)[f(t, x, xi)] + d2F(x)[xi, xi] > 0   whenever F(x) = c and dF(x)[xi] = 0,

for all t >= 0 and all tangent xi.  Neither set is finite, so the checker
samples a finite t-grid and tangent spheres, adds the minimum eigenvalue of
d2F restricted to the tangent space (which governs large |xi|), and, when the
system declares bounded time-dependent forcing, a worst case over t taken
analytically.  This is a sufficient surrogate, not an equivalence.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .dynamics import SecondOrderSystem
from .errors import DegenerateGradient, PreconditionError

BOUNDARY_TOL = 1e-10
GRADIENT_FLOOR = 1e-12
_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


class Membership(enum.Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    EXTERIOR = "exterior"


@dataclass(frozen=True)
class SublevelDomain:
    dimension: int
    F: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Callable[[np.ndarray], np.ndarray]
    c: float
    name: str = "domain"

    def value(self, x) -> float:
        return float(self.F(np.atleast_1d(np.asarray(x, dtype=float))))

    def gradient(self, x) -> np.ndarray:
        return np.asarray(self.grad(np.atleast_1d(np.asarray(x, dtype=float))), dtype=float).reshape(self.dimension)

    def hessian(self, x) -> np.ndarray:
        m = self.dimension
        return np.asarray(self.hess(np.atleast_1d(np.asarray(x, dtype=float))), dtype=float).reshape(m, m)

    def clearance(self, x) -> float:
        """c - F(x); positive inside."""
        return self.c - self.value(x)


def ball(radius: float, dimension: int = 1, name: Optional[str] = None) -> SublevelDomain:
    """F(x) = |x|^2 with c = radius^2."""
    if radius <= 0:
        raise PreconditionError("radius must be positive")
    eye = 2.0 * np.eye(dimension)
    return SublevelDomain(
        dimension,
        lambda x: float(x @ x),
        lambda x: 2.0 * x,
        lambda x: eye,
        radius * radius,
        name or f"ball(r={radius!r})",
    )


def membership(dom: SublevelDomain, x, tol: float = BOUNDARY_TOL) -> Membership:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(x)):
        raise PreconditionError("point must be finite")
    gap = dom.value(x) - dom.c
    if abs(gap) <= tol:
        return Membership.BOUNDARY
    return Membership.INTERIOR if gap < 0 else Membership.EXTERIOR


def tangent_basis(dom: SublevelDomain, x) -> np.ndarray:
    """Orthonormal basis of ker dF(x), as rows; shape (m - 1, m)."""
    g = dom.gradient(x)
    norm = float(np.linalg.norm(g))
    if norm <= GRADIENT_FLOOR:
        raise DegenerateGradient(f"|dF| = {norm:.3e} at x = {np.asarray(x).tolist()!r}")
    m = dom.dimension
    if m == 1:
        return np.empty((0, 1))
    _, _, vt = np.linalg.svd(g.reshape(1, m))
    return vt[1:]


def check_derivatives(dom: SublevelDomain, points, rel: float = 1e-5, h: float = 1e-5) -> dict:
    """Central-difference consistency of grad with F and hess with grad at the given points."""
    worst_g = worst_h = 0.0
    m = dom.dimension
    for x in np.atleast_2d(np.asarray(points, dtype=float)).reshape(-1, m):
        g = dom.gradient(x)
        H = dom.hessian(x)
        fd_g = np.empty(m)
        fd_h = np.empty((m, m))
        for i in range(m):
            e = np.zeros(m)
            e[i] = h
            fd_g[i] = (dom.value(x + e) - dom.value(x - e)) / (2 * h)
            fd_h[:, i] = (dom.gradient(x + e) - dom.gradient(x - e)) / (2 * h)
        worst_g = max(worst_g, float(np.linalg.norm(fd_g - g) / max(np.linalg.norm(g), 1e-8)))
        worst_h = max(worst_h, float(np.linalg.norm(fd_h - H) / max(np.linalg.norm(H), 1e-8)))
    return {
        "gradient_rel_error": worst_g,
        "hessian_rel_error": worst_h,
        "passed": worst_g < rel and worst_h < rel,
    }


@dataclass(frozen=True)
class BoundaryGrid:
    points: np.ndarray  # (n, m)

    def __len__(self):
        return len(self.points)

    @classmethod
    def from_points(cls, dom: SublevelDomain, points, tol: float = BOUNDARY_TOL) -> "BoundaryGrid":
        pts = np.asarray(points, dtype=float).reshape(-1, dom.dimension)
        if len(pts) == 0:
            raise PreconditionError("boundary grid must be nonempty")
        for p in pts:
            if abs(dom.value(p) - dom.c) > tol:
                raise PreconditionError(f"{p.tolist()!r} is not on the boundary: F - c = {dom.value(p) - dom.c:.3e}")
        return cls(pts)


def interval_endpoints(dom: SublevelDomain, interior: float = 0.0, step: float = 1.0, max_expand: int = 60) -> tuple[float, float]:
    """The two boundary points of a 1-D sublevel interval around ``interior``."""
    if dom.dimension != 1:
        raise PreconditionError("interval_endpoints needs a 1-D domain")
    g = lambda s: dom.value(s) - dom.c  # noqa: E731
    if g(interior) >= 0:
        raise PreconditionError(f"{interior!r} is not interior")
    ends = []
    for sign in (-1.0, 1.0):
        a, d = interior, step
        for _ in range(max_expand):
            b = interior + sign * d
            if g(b) >= 0:
                break
            a, d = b, 2 * d
        else:
            raise PreconditionError("sublevel set looks unbounded")
        lo, hi = (b, a) if sign < 0 else (a, b)
        root = brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        ends.append(root)
    return ends[0], ends[1]


def boundary_grid_1d(dom: SublevelDomain, endpoints: Optional[Sequence[float]] = None) -> BoundaryGrid:
    if endpoints is None:
        endpoints = interval_endpoints(dom)
    return BoundaryGrid.from_points(dom, np.asarray(endpoints, dtype=float).reshape(-1, 1))


def tangent_directions(k: int, n: int, seed: int = 0) -> np.ndarray:
    """``n`` unit vectors in R^k; a prefix of a fixed sequence, so larger n only adds vectors."""
    if k == 0:
        return np.empty((0, 0))
    if k == 1:
        return np.array([[1.0], [-1.0]])
    if k == 2:
        ang = _GOLDEN_ANGLE * np.arange(n)
        return np.column_stack((np.cos(ang), np.sin(ang)))
    v = np.random.default_rng(seed).standard_normal((n, k))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@dataclass
class InequalityReport:
    margin: float
    argmin: tuple  # (t, x, xi)
    restricted_hessian_min: list  # per boundary point; None where the tangent space is {0}
    worst_case_margin: Optional[float] = None
    worst_case_argmin: Optional[tuple] = None
    n_evaluations: int = 0

    @property
    def hessian_ok(self) -> bool:
        return all(e is None or e >= -1e-10 for e in self.restricted_hessian_min)

    @property
    def passed(self) -> bool:
        ok = self.margin > 0 and self.hessian_ok
        if self.worst_case_margin is not None:
            ok = ok and self.worst_case_margin > 0
        return ok

    def to_dict(self) -> dict:
        t, x, xi = self.argmin
        out = {
            "margin": self.margin,
            "argmin": {"t": t, "x": np.asarray(x).tolist(), "xi": np.asarray(xi).tolist()},
            "restricted_hessian_min": self.restricted_hessian_min,
            "worst_case_margin": self.worst_case_margin,
            "n_evaluations": self.n_evaluations,
            "passed": self.passed,
        }
        if self.worst_case_argmin is not None:
            x, xi = self.worst_case_argmin
            out["worst_case_argmin"] = {"x": np.asarray(x).tolist(), "xi": np.asarray(xi).tolist()}
        return out


def _worst_case(forcing, g, x, xi) -> float:
    val = float(g @ np.asarray(forcing.base(x, xi), dtype=float).reshape(-1))
    for term, lo, hi in forcing.terms:
        k = float(g @ np.asarray(term(x, xi), dtype=float).reshape(-1))
        if k == 0.0:
            continue
        val += min(k * lo, k * hi)
    return val


def check_boundary_inequality(dom: SublevelDomain, system: SecondOrderSystem, grid: BoundaryGrid,
                              t_samples: Sequence[float], xi_radius: float = 1.0,
                              xi_samples_per_point: int = 8, seed: int = 0) -> InequalityReport:
    """Minimum of dF[f(t,x,xi)] + d2F[xi,xi] over boundary points, times and sampled tangent xi."""
    if len(grid) == 0:
        raise PreconditionError("boundary grid is empty")
    t_samples = [float(t) for t in t_samples]
    if not t_samples:
        raise PreconditionError("t_samples is empty")
    if not xi_radius > 0:
        raise PreconditionError("xi_radius must be positive")
    if system.dimension != dom.dimension:
        raise PreconditionError("system and domain dimensions differ")
    m = dom.dimension
    best = math.inf
    argmin = None
    worst = math.inf if system.forcing is not None else None
    worst_arg = None
    eig_mins = []
    n_eval = 0
    for x in grid.points:
        g = dom.gradient(x)
        basis = tangent_basis(dom, x)
        H = dom.hessian(x)
        k = basis.shape[0]
        if k:
            eig_mins.append(float(np.linalg.eigvalsh(basis @ H @ basis.T)[0]))
        else:
            eig_mins.append(None)
        xis = [np.zeros(m)]
        if k:
            dirs = tangent_directions(k, xi_samples_per_point, seed) @ basis
            for frac in (0.25, 0.5, 0.75, 1.0):
                xis.extend(frac * xi_radius * d for d in dirs)
        for xi in xis:
            quad = float(xi @ H @ xi)
            for t in t_samples:
                val = float(g @ system.accel(t, x, xi)) + quad
                n_eval += 1
                if val < best:
                    best, argmin = val, (t, x.copy(), xi.copy())
            if system.forcing is not None:
                val = _worst_case(system.forcing, g, x, xi) + quad
                if val < worst:
                    worst, worst_arg = val, (x.copy(), xi.copy())
    return InequalityReport(best, argmin, eig_mins, worst, worst_arg, n_eval)


@dataclass
class FieldReport:
    minimum: float
    argmin: np.ndarray
    values: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.minimum >= -1e-10

    def to_dict(self) -> dict:
        return {"minimum": self.minimum, "argmin": np.asarray(self.argmin).tolist(), "passed": self.passed}


def check_initial_field(dom: SublevelDomain, v: Callable[[np.ndarray], np.ndarray], grid: BoundaryGrid) -> FieldReport:
    """min over the grid of dF(x)[v(x)]; the field must not point inward anywhere on the boundary."""
    if len(grid) == 0:
        raise PreconditionError("boundary grid is empty")
    vals = [float(dom.gradient(x) @ np.asarray(v(x), dtype=float).reshape(dom.dimension)) for x in grid.points]
    i = int(np.argmin(vals))
    return FieldReport(vals[i], grid.points[i].copy(), vals)
