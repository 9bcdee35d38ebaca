"""Declarative run scenarios (TOML) and the objects they build."""

from __future__ import annotations

import math
from pathlib import Path
from typing import List, Literal, Optional

import numpy as np
import tomli
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import profiles
from .dynamics import IntegratorConfig
from .errors import PreconditionError
from .models import Custom1DModel, PendulumModel, RotatingRodModel, cone_bound, expression_field
from .search import SearchConfig


class ScenarioError(PreconditionError):
    """The scenario file is malformed or violates a precondition."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


ProfileFamily = Literal[
    "zero", "constant-acceleration", "sinusoid", "polynomial", "piecewise-polynomial", "timetable"
]


class ProfileSpec(_Strict):
    family: ProfileFamily = "zero"
    a: Optional[float] = None
    amplitude: Optional[float] = None
    omega: Optional[float] = None
    phase: float = 0.0
    coeffs: Optional[List[float]] = None
    breaks: Optional[List[float]] = None
    pieces: Optional[List[List[float]]] = None
    path: Optional[str] = None
    period: Optional[float] = Field(default=None, gt=0)
    sup_accel: Optional[float] = Field(default=None, ge=0)

    @model_validator(mode="after")
    def _required(self):
        need = {
            "constant-acceleration": ("a",),
            "sinusoid": ("amplitude",),
            "polynomial": ("coeffs",),
            "piecewise-polynomial": ("breaks", "pieces"),
            "timetable": ("path",),
        }.get(self.family, ())
        missing = [k for k in need if getattr(self, k) is None]
        if missing:
            raise ValueError(f"profile family {self.family!r} requires {', '.join(missing)}")
        if self.omega is not None and self.omega <= 0:
            raise ValueError("omega must be positive")
        return self

    def build(self, base_dir: Path = Path(".")) -> profiles.Profile:
        f = self.family
        if f == "zero":
            return profiles.zero()
        if f == "constant-acceleration":
            return profiles.constant_acceleration(self.a)
        if f == "sinusoid":
            return profiles.sinusoid(self.amplitude, self.omega or 1.0, self.phase)
        if f == "polynomial":
            return profiles.polynomial(self.coeffs, sup_accel=self.sup_accel)
        if f == "piecewise-polynomial":
            return profiles.piecewise_polynomial(self.breaks, self.pieces, period=self.period, sup_accel=self.sup_accel)
        path = Path(self.path)
        if not path.is_absolute():
            path = base_dir / path
        return profiles.load_timetable(path, period=self.period, sup_accel=self.sup_accel)


class PendulumSpec(_Strict):
    lam: float = 0.0
    cone: bool = False
    cone_epsilon: float = Field(default=1e-3, gt=0)


class RodSpec(_Strict):
    omega: Optional[float] = None
    phase: float = 0.0
    rotation: Optional[ProfileSpec] = None
    r_star: float = Field(gt=0)
    C: Optional[float] = None
    field: str = "0"

    @model_validator(mode="after")
    def _one_law(self):
        if (self.omega is None) == (self.rotation is None):
            raise ValueError("give exactly one of omega or rotation")
        if self.rotation is not None and self.C is None:
            raise ValueError("a general rotation law needs an explicit lower bound C on phi'^2")
        return self


class CustomSpec(_Strict):
    rhs: str
    F: str
    c: float
    field: str = "0"
    endpoints: Optional[List[float]] = None


class DomainSpec(_Strict):
    c: Optional[float] = Field(default=None, gt=0)


class IntegratorSpec(_Strict):
    rtol: float = Field(default=1e-10, gt=0)
    atol: float = Field(default=1e-12, gt=0)
    initial_step: float = Field(default=1e-3, gt=0)
    min_step: float = Field(default=1e-14, gt=0)
    max_step: float = Field(default=0.1, gt=0)
    samples_per_step: int = Field(default=8, ge=0)

    @model_validator(mode="after")
    def _steps(self):
        if not self.min_step <= self.initial_step <= self.max_step:
            raise ValueError("need min_step <= initial_step <= max_step")
        return self

    def build(self) -> IntegratorConfig:
        return IntegratorConfig(**self.model_dump())


class SearchSpec(_Strict):
    horizons: List[float] = [5.0, 10.0, 20.0, 40.0, 80.0]
    tolerance: float = Field(default=1e-8, gt=0)
    max_steps: int = Field(default=200, ge=1)
    tiebreak_horizon: Optional[float] = None
    lambdas: Optional[List[float]] = None

    @field_validator("horizons")
    @classmethod
    def _increasing(cls, v):
        if not v or v[0] <= 0 or any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("horizons must be positive and strictly increasing")
        return v

    def build(self) -> SearchConfig:
        return SearchConfig(tuple(self.horizons), self.tolerance, self.max_steps, self.tiebreak_horizon)


class VerifySpec(_Strict):
    t_start: float = Field(default=0.0, ge=0)
    t_stop: float = Field(default=20.0, gt=0)
    t_count: int = Field(default=201, ge=1)
    xi_radius: float = Field(default=1.0, gt=0)
    xi_samples: int = Field(default=8, ge=1)
    seed: int = 0

    def times(self, t_max: float = math.inf) -> np.ndarray:
        return np.linspace(self.t_start, min(self.t_stop, t_max), self.t_count)


class ExitSpec(_Strict):
    y: Optional[float] = None
    v0: Optional[float] = None
    horizon: float = Field(default=50.0, gt=0)


class SweepSpec(_Strict):
    start: Optional[float] = None
    stop: Optional[float] = None
    num: int = Field(default=101, ge=1)
    values: Optional[List[float]] = None
    horizon: float = Field(default=20.0, gt=0)

    @model_validator(mode="after")
    def _grid(self):
        if self.values is None and (self.start is None or self.stop is None):
            raise ValueError("sweep needs either values or start and stop")
        return self

    def grid(self) -> np.ndarray:
        if self.values is not None:
            return np.asarray(self.values, dtype=float)
        return np.linspace(self.start, self.stop, self.num)


class AsymptoticsSpec(_Strict):
    boundary: Literal["upper", "lower"] = "upper"
    distances: List[float] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5]
    branch: Literal["auto", "linear", "quadratic"] = "auto"
    horizon: float = Field(default=50.0, gt=0)


class Scenario(_Strict):
    model: Literal["pendulum", "rod", "custom-1d"]
    name: str = "scenario"
    profile: ProfileSpec = ProfileSpec()
    pendulum: PendulumSpec = PendulumSpec()
    rod: Optional[RodSpec] = None
    custom: Optional[CustomSpec] = None
    domain: DomainSpec = DomainSpec()
    integrator: IntegratorSpec = IntegratorSpec()
    search: SearchSpec = SearchSpec()
    verify: VerifySpec = VerifySpec()
    exit: ExitSpec = ExitSpec()
    sweep: Optional[SweepSpec] = None
    asymptotics: AsymptoticsSpec = AsymptoticsSpec()
    base_dir: str = Field(default=".", exclude=True)

    @model_validator(mode="after")
    def _sections(self):
        if self.model == "rod" and self.rod is None:
            raise ValueError("model 'rod' needs a [rod] section")
        if self.model == "custom-1d" and self.custom is None:
            raise ValueError("model 'custom-1d' needs a [custom] section")
        return self

    def echo(self) -> dict:
        return self.model_dump(mode="json")


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        data = tomli.loads(path.read_text())
    except (OSError, tomli.TOMLDecodeError) as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    return parse_scenario(data, base_dir=path.parent)


def parse_scenario(data: dict, base_dir=".") -> Scenario:
    try:
        return Scenario.model_validate({**data, "base_dir": str(base_dir)})
    except ValidationError as exc:
        raise ScenarioError(f"invalid scenario: {exc}") from exc


def build_model(sc: Scenario, lam: Optional[float] = None):
    """The model object (system, domain, grid, endpoints, v_field) described by ``sc``."""
    base = Path(sc.base_dir)
    try:
        if sc.model == "pendulum":
            prof = sc.profile.build(base)
            lam = sc.pendulum.lam if lam is None else lam
            if sc.pendulum.cone:
                if prof.sup_accel is None:
                    raise ScenarioError("cone search needs a profile with a declared sup_accel")
                cone = cone_bound(prof.sup_accel, sc.pendulum.cone_epsilon)
                if cone.half_width <= 0:
                    raise ScenarioError(f"cone half-width {cone.half_width!r} is not positive")
                return PendulumModel(prof, lam, cone.half_width)
            half = math.sqrt(sc.domain.c) if sc.domain.c is not None else 0.5 * math.pi
            return PendulumModel(prof, lam, half)
        if sc.model == "rod":
            r = sc.rod
            field_fn = None if r.field.strip() == "0" else expression_field(r.field)
            r_star = math.sqrt(sc.domain.c) if sc.domain.c is not None else r.r_star
            if r.omega is not None:
                return RotatingRodModel.uniform(r.omega, r_star, r.phase, field_fn)
            return RotatingRodModel(r.rotation.build(base), r_star, r.C, field_fn)
        cu = sc.custom
        c = sc.domain.c if sc.domain.c is not None else cu.c
        return Custom1DModel(cu.rhs, cu.F, c, cu.field, tuple(cu.endpoints) if cu.endpoints else None)
    except ScenarioError:
        raise
    except (PreconditionError, ValueError) as exc:
        raise ScenarioError(str(exc)) from exc
