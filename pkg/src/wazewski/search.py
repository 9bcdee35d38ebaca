"""Exit-side bisection for a never-escaping initial condition of a 1-D system.

Starts launched near the lower end of the interval leave through the lower
end and starts near the upper end through the upper end.  The exit map is
continuous, so if every start left, the two exit sides would split the
interval into two disjoint open sets, which is impossible.  Bisecting on the
exit side therefore closes in on a start that stays inside, at least up to a
finite horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .dynamics import IntegratorConfig, SecondOrderSystem
from .errors import BracketLost, NoSurvivorFound, PreconditionError
from .exits import ExitOutcome, Side, SurvivalRecord, exit_time
from .geometry import SublevelDomain, interval_endpoints


@dataclass(frozen=True)
class SearchConfig:
    horizons: tuple = (5.0, 10.0, 20.0, 40.0, 80.0)
    tolerance: float = 1e-8
    max_steps: int = 200
    # surviving probes are oriented by their exit side at this horizon (default: twice the last one),
    # extended up to 4x if they still survive
    tiebreak_horizon: Optional[float] = None

    def __post_init__(self):
        hs = tuple(float(h) for h in self.horizons)
        object.__setattr__(self, "horizons", hs)
        if not hs or hs[0] <= 0 or any(b <= a for a, b in zip(hs, hs[1:])):
            raise PreconditionError("horizons must be positive and strictly increasing")
        if not self.tolerance > 0:
            raise PreconditionError("tolerance must be positive")
        if self.max_steps < 1:
            raise PreconditionError("max_steps must be >= 1")
        if self.tiebreak_horizon is None:
            object.__setattr__(self, "tiebreak_horizon", 2.0 * hs[-1])
        elif self.tiebreak_horizon < hs[-1]:
            raise PreconditionError("tiebreak_horizon must be >= the last horizon")


@dataclass(frozen=True)
class Probe:
    psi: float
    horizon: float
    side: Side
    value: float  # tau for exits, clearance for survivors
    lo: float  # bracket after this probe
    hi: float

    def to_dict(self) -> dict:
        return {"psi": self.psi, "horizon": self.horizon, "side": self.side.value,
                "value": self.value, "lo": self.lo, "hi": self.hi}

    @classmethod
    def from_dict(cls, d):
        return cls(d["psi"], d["horizon"], Side(d["side"]), d["value"], d["lo"], d["hi"])


@dataclass
class SurvivorCertificate:
    lo: float
    hi: float
    horizon: float
    witness: float
    witness_record: SurvivalRecord
    trace: list
    history: list = field(default_factory=list)  # (horizon, lo, hi, witness) per certified horizon
    requested_horizon: float = math.nan
    hypotheses_verified: Optional[bool] = None

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def clearance(self) -> float:
        return self.witness_record.clearance

    @property
    def complete(self) -> bool:
        return self.horizon == self.requested_horizon

    def to_dict(self) -> dict:
        fs = self.witness_record.final_state
        return {
            "interval": [self.lo, self.hi],
            "width": self.width,
            "horizon": self.horizon,
            "requested_horizon": self.requested_horizon,
            "complete": self.complete,
            "witness": self.witness,
            "clearance": self.clearance,
            "witness_final_state": {"t": fs.t, "x": fs.x.tolist(), "xdot": fs.xdot.tolist()},
            "history": [{"horizon": h, "interval": [a, b], "witness": w} for h, a, b, w in self.history],
            "hypotheses_verified": self.hypotheses_verified,
            "trace": [p.to_dict() for p in self.trace],
        }


def _probe(system, dom, y, v_field, horizon, cfg, record=False) -> tuple[Side, ExitOutcome]:
    y = np.atleast_1d(np.asarray(y, dtype=float))
    out = exit_time(system, dom, y, v_field(y), horizon, cfg, record=record)
    return out.side, out


def exit_side_1d(system: SecondOrderSystem, dom: SublevelDomain, y, v_field: Callable, horizon: float,
                 cfg: IntegratorConfig = IntegratorConfig()) -> Side:
    if dom.dimension != 1:
        raise PreconditionError("exit_side_1d needs a 1-D domain")
    return _probe(system, dom, y, v_field, horizon, cfg)[0]


def _eventual_side(system, dom, y, v_field, horizon, cfg, doublings: int = 2) -> Side:
    # starts within ~e^-T of a survivor outlast any single horizon; look a little further before giving up
    for k in range(doublings + 1):
        side = _probe(system, dom, y, v_field, horizon * 2**k, cfg)[0]
        if side is not Side.SURVIVED:
            return side
    return Side.SURVIVED


def _value(out: ExitOutcome) -> float:
    return out.clearance if out.survived else out.tau


def bisect_survivor_1d(system: SecondOrderSystem, dom: SublevelDomain, v_field: Callable,
                       search_cfg: SearchConfig = SearchConfig(),
                       integrator_cfg: IntegratorConfig = IntegratorConfig(),
                       endpoints: Optional[Sequence[float]] = None) -> SurvivorCertificate:
    """Certify a start that stays in the domain for the longest horizon of the schedule it can reach.

    A bracket end is either a start that leaves through its own side before
    the horizon or one that survives it.  A surviving midpoint is placed on
    the side through which it eventually leaves by the last horizon, so the
    bracket stays valid as the horizon grows and the intervals are nested.
    Once a horizon cannot be certified (the surviving set has shrunk below
    floating-point resolution, or the step budget is spent) the search stops
    and the certificate for the last certified horizon is returned.
    """
    if dom.dimension != 1 or system.dimension != 1:
        raise PreconditionError("survivor search is one-dimensional")
    cfg = integrator_cfg
    lo, hi = (interval_endpoints(dom) if endpoints is None else (float(endpoints[0]), float(endpoints[1])))
    if not lo < hi:
        raise PreconditionError("need lo < hi")
    T_final = search_cfg.horizons[-1]
    T_tie = search_cfg.tiebreak_horizon
    trace: list[Probe] = []

    T0 = search_cfg.horizons[0]
    s_lo, o_lo = _probe(system, dom, lo, v_field, T0, cfg)
    s_hi, o_hi = _probe(system, dom, hi, v_field, T0, cfg)
    trace.append(Probe(lo, T0, s_lo, _value(o_lo), lo, hi))
    trace.append(Probe(hi, T0, s_hi, _value(o_hi), lo, hi))
    if s_lo is not Side.SURVIVED and s_lo == s_hi:
        raise BracketLost(f"both ends of [{lo!r}, {hi!r}] exit {s_lo.value}", trace)
    if s_lo is Side.UPPER or s_hi is Side.LOWER:
        raise BracketLost(f"bracket [{lo!r}, {hi!r}] is reversed ({s_lo.value}, {s_hi.value})", trace)

    witness: Optional[float] = None
    witness_T: Optional[float] = None
    history = []
    certified = None
    for T in search_cfg.horizons:
        if witness is not None and not (lo <= witness <= hi):
            witness = None
        if witness is not None and witness_T != T:
            s, _ = _probe(system, dom, witness, v_field, T, cfg)
            witness = witness if s is Side.SURVIVED else None
        steps = 0
        while steps < search_cfg.max_steps:
            if hi - lo <= search_cfg.tolerance and witness is not None and lo <= witness <= hi:
                break
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            side, out = _probe(system, dom, mid, v_field, T, cfg)
            steps += 1
            if side is Side.LOWER:
                lo = mid
            elif side is Side.UPPER:
                hi = mid
            else:
                witness, witness_T = mid, T
                eventual = _eventual_side(system, dom, mid, v_field, T_tie, cfg)
                if eventual is Side.UPPER:
                    hi = mid
                else:
                    lo = mid
            trace.append(Probe(mid, T, side, _value(out), lo, hi))
        if witness is None or not (lo <= witness <= hi) or hi - lo > search_cfg.tolerance:
            break
        mid = 0.5 * (lo + hi)
        if lo < mid < hi and mid != witness:
            side, out = _probe(system, dom, mid, v_field, T, cfg)
            trace.append(Probe(mid, T, side, _value(out), lo, hi))
            if side is Side.SURVIVED:
                witness, witness_T = mid, T
        history.append((T, lo, hi, witness))
        certified = (T, lo, hi, witness)

    if certified is None:
        raise NoSurvivorFound(
            f"no surviving start found within tolerance at horizon {search_cfg.horizons[0]!r}", trace
        )
    T, c_lo, c_hi, psi = certified
    _, record = _probe(system, dom, psi, v_field, T, cfg, record=True)
    return SurvivorCertificate(c_lo, c_hi, T, psi, record, trace, history, T_final)


def replay_certificate(cert: dict, system: SecondOrderSystem, dom: SublevelDomain, v_field: Callable,
                       cfg: IntegratorConfig = IntegratorConfig()) -> ExitOutcome:
    """Re-run the witness of a serialized certificate to its certified horizon."""
    return exit_time(system, dom, np.atleast_1d(cert["witness"]), v_field(np.atleast_1d(cert["witness"])),
                     cert["horizon"], cfg)
