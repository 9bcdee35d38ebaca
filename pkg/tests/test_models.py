import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wazewski import profiles
from wazewski.dynamics import IntegratorConfig, TrajectoryState, integrate_until, sample_segments
from wazewski.errors import BoundViolated, PreconditionError
from wazewski.geometry import check_boundary_inequality, check_initial_field
from wazewski.models import (
    HALF_PI,
    Custom1DModel,
    PendulumModel,
    RotatingRodModel,
    cone_bound,
    cone_worst_margin,
    energy_bound_check,
    energy_constant,
    expression_field,
)


def test_pendulum_rhs_values():
    sys = PendulumModel(profiles.constant_acceleration(2.0)).system
    assert sys.accel(0.0, np.array([0.0]), np.array([0.0]))[0] == pytest.approx(-2.0)
    assert sys.accel(0.0, np.array([HALF_PI]), np.array([5.0]))[0] == pytest.approx(1.0)


def test_pendulum_field_vanishes_on_boundary():
    m = PendulumModel(profiles.zero(), lam=1.5)
    assert m.v_field(np.array([HALF_PI]))[0] == pytest.approx(0.0, abs=1e-15)
    assert m.v_field(np.array([0.0]))[0] == pytest.approx(1.5 * HALF_PI**2)


@pytest.mark.parametrize(
    "rot, r, t, expected",
    [((1.0, 0.0), 0.0, HALF_PI, -1.0), ((1.0, 0.0), 2.0, 0.0, 2.0), ((2.0, 0.0), 1.0, 0.0, 4.0)],
)
def test_rod_rhs_values(rot, r, t, expected):
    m = RotatingRodModel.uniform(rot[0], 2.0, rot[1])
    assert m.system.accel(t, np.array([r]), np.array([0.0]))[0] == pytest.approx(expected)


def test_short_rod_is_rejected():
    with pytest.raises(PreconditionError, match="r\\* C"):
        RotatingRodModel.uniform(1.0, 0.5)


def test_slow_rotation_is_rejected():
    rot = profiles.polynomial([0.0, 0.5, 0.0])
    with pytest.raises(PreconditionError):
        RotatingRodModel(rot, 10.0, C=1.0)


def test_rod_boundary_inequality_holds():
    m = RotatingRodModel.uniform(1.0, 2.0)
    rep = check_boundary_inequality(m.domain, m.system, m.grid, np.linspace(0, 20, 201))
    # 2 r (r - sin(phi)) at r = +-2 is at least 2*2*(2 - 1) = 4
    assert rep.passed and rep.margin >= 4.0 - 1e-9
    assert rep.worst_case_margin == pytest.approx(2 * 2 * (2 * 1 - 1))
    assert check_initial_field(m.domain, m.v_field, m.grid).passed


@pytest.mark.parametrize("C, phi0", [(1.0, math.pi / 4), (0.0, 0.0), (math.sqrt(3), math.pi / 3)])
def test_cone_angle(C, phi0):
    cb = cone_bound(C)
    assert cb.phi0 == pytest.approx(phi0, abs=1e-15)
    assert cb.half_width == pytest.approx(phi0 - 1e-3)


def test_cone_margin_is_zero_at_the_cone_and_changes_sign_across_it():
    h = math.atan(2.0)
    assert cone_worst_margin(2.0, h) == pytest.approx(0.0, abs=1e-14)
    assert cone_worst_margin(2.0, h - 1e-3) < 0 < cone_worst_margin(2.0, h + 1e-3)
    assert cone_bound(2.0).worst_case_margin < 0
    assert cone_bound(0.0).domain is None
    with pytest.raises(PreconditionError):
        cone_bound(-1.0)


def test_energy_constant():
    p = profiles.sinusoid(1.0, phase=HALF_PI)  # w''(0) = -1
    assert energy_constant(p, TrajectoryState(0.0, [0.3], [2.0])) == pytest.approx(4.0 + 4.0 + 2.0)


@settings(max_examples=20, deadline=None)
@given(psi=st.floats(-1.5, 1.5), v=st.floats(-2, 2), A=st.floats(0, 3), omega=st.floats(0.2, 4))
def test_energy_bound_holds_on_driven_trajectories(psi, v, A, omega):
    m = PendulumModel(profiles.sinusoid(A, omega))
    res = integrate_until(m.system, TrajectoryState(0.0, [psi], [v]), 6.0,
                          lambda s: abs(s.x[0]) - 3.0, record=True)
    rep = energy_bound_check(m.profile, sample_segments(res.segments, 8))
    assert rep.passed


def test_energy_bound_detects_a_fake_trajectory():
    p = profiles.zero()
    fake = [TrajectoryState(0.0, [0.0], [0.0]), TrajectoryState(1.0, [0.0], [3.0])]
    with pytest.raises(BoundViolated) as info:
        energy_bound_check(p, fake)
    assert info.value.t == 1.0


def test_custom_model_round_trip():
    m = Custom1DModel("x - sin(t)", "x**2", 4.0, field_expr="0.25*(4 - x**2)")
    assert m.endpoints == pytest.approx((-2.0, 2.0))
    assert m.system.accel(HALF_PI, np.array([3.0]), np.array([0.0]))[0] == pytest.approx(2.0)
    assert m.domain.gradient([1.5])[0] == pytest.approx(3.0)
    assert m.v_field(np.array([0.0]))[0] == pytest.approx(1.0)


def test_custom_model_rejects_bad_expressions():
    with pytest.raises(PreconditionError):
        Custom1DModel("x +* 2", "x**2", 1.0)
    with pytest.raises(PreconditionError):
        Custom1DModel("x", "x**2 + t", 1.0)
    with pytest.raises(PreconditionError):
        expression_field("y + 1")


def test_rod_tracks_the_bounded_solution_while_the_unstable_mode_is_small():
    # r'' = r - sin t: errors grow like e^t, so tracking is only meaningful on a bounded window
    m = RotatingRodModel.uniform(1.0, 2.0)
    cfg = IntegratorConfig(rtol=1e-13, atol=1e-15, max_step=0.05)
    res = integrate_until(m.system, TrajectoryState(0.0, [0.0], [0.5]), 30.0, cfg=cfg, record=True)
    states = sample_segments(res.segments, 8)
    err = {s.t: abs(s.x[0] - 0.5 * math.sin(s.t)) for s in states}
    assert max(e for t, e in err.items() if t <= 10.0) < 1e-6
    # growth rate of the error envelope between t = 20 and t = 30 is e^t
    e20 = max(e for t, e in err.items() if 19.0 <= t <= 20.0)
    e30 = max(e for t, e in err.items() if 29.0 <= t <= 30.0)
    assert 0.5 < math.log(e30 / e20) / 10.0 < 1.5
