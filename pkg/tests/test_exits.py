import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import pendulum_exit_time
from wazewski.dynamics import SecondOrderSystem
from wazewski.errors import DegenerateCase, NoExit, NotApplicable, PreconditionError
from wazewski.exits import (
    QuadraticExitCoefficients,
    Side,
    exit_time,
    quadratic_coefficients,
    retraction_point,
    tau_linear_asymptotic,
    tau_quadratic_asymptotic,
    validate_tau_asymptotics,
)
from wazewski.geometry import ball

HALF_PI = 0.5 * math.pi


def test_exit_time_matches_quadrature(still_pendulum):
    m = still_pendulum
    out = exit_time(m.system, m.domain, [0.5], [0.0], 50.0)
    assert out.side is Side.UPPER
    assert out.tau == pytest.approx(pendulum_exit_time(0.5), rel=1e-9)
    assert out.transversality > 0 and not out.anomaly and not out.grazing
    assert out.bracket_width <= 1e-12


@pytest.mark.parametrize("psi", [0.1, 1.0, 1.5])
def test_exit_time_matches_quadrature_elsewhere(still_pendulum, psi):
    m = still_pendulum
    out = exit_time(m.system, m.domain, [-psi], [0.0], 80.0)
    assert out.side is Side.LOWER
    assert out.tau == pytest.approx(pendulum_exit_time(psi), rel=1e-8)


def test_rest_at_top_survives(still_pendulum):
    m = still_pendulum
    out = exit_time(m.system, m.domain, [0.0], [0.0], 30.0)
    assert out.survived and out.side is Side.SURVIVED
    assert out.clearance == pytest.approx(HALF_PI**2)


def test_boundary_start_has_zero_exit_time(still_pendulum):
    m = still_pendulum
    out = exit_time(m.system, m.domain, [HALF_PI], [0.0], 10.0)
    assert out.tau == 0.0 and out.on_boundary and out.side is Side.UPPER


def test_outside_start_is_rejected(still_pendulum):
    m = still_pendulum
    with pytest.raises(PreconditionError):
        exit_time(m.system, m.domain, [1.6], [0.0], 10.0)
    with pytest.raises(PreconditionError):
        exit_time(m.system, m.domain, [0.0], [0.0], 0.0)


def test_recorded_segments_end_at_the_exit(still_pendulum):
    m = still_pendulum
    out = exit_time(m.system, m.domain, [0.5], [0.0], 50.0, record=True)
    assert out.segments[-1].t_a <= out.tau <= out.segments[-1].t_b


def test_exit_in_two_dimensions():
    # free flight x'' = 0 from the origin with unit speed leaves the unit disk at t = 1
    sys = SecondOrderSystem(2, lambda t, x, xd: np.zeros(2))
    out = exit_time(sys, ball(1.0, 2), [0.0, 0.0], [0.6, 0.8], 5.0)
    assert out.tau == pytest.approx(1.0, abs=1e-10)
    assert out.side is None
    np.testing.assert_allclose(out.exit_state.x, [0.6, 0.8], atol=1e-10)


def test_retraction_is_identity_on_boundary(driven_pendulum):
    m = driven_pendulum
    for y in m.endpoints:
        assert retraction_point(m.system, m.domain, [y], m.v_field, 10.0)[0] == y


def test_retraction_lands_on_boundary(driven_pendulum):
    m = driven_pendulum
    p = retraction_point(m.system, m.domain, [0.8], m.v_field, 40.0)
    assert abs(abs(p[0]) - HALF_PI) < 1e-9


def test_retraction_without_exit_raises(still_pendulum):
    m = still_pendulum
    with pytest.raises(NoExit):
        retraction_point(m.system, m.domain, [0.0], m.v_field, 5.0)


def test_linear_asymptotic_needs_outward_field():
    dom = ball(1.0)
    assert tau_linear_asymptotic(dom, [0.9], [1.0]) == pytest.approx((1 - 0.81) / 1.8)
    with pytest.raises(NotApplicable):
        tau_linear_asymptotic(dom, [0.9], [0.0])


def test_quadratic_root_is_the_positive_one():
    c = QuadraticExitCoefficients(A=1.0, B=0.0, C=-4.0)
    assert tau_quadratic_asymptotic(c) == pytest.approx(2.0)
    with pytest.raises(DegenerateCase):
        tau_quadratic_asymptotic(QuadraticExitCoefficients(0.0, 1.0, -1.0))


@settings(max_examples=50, deadline=None)
@given(A=st.floats(1e-3, 1e3), B=st.floats(-1e3, 1e8), C=st.floats(-1e3, -1e-12))
def test_quadratic_root_solves_the_quadratic(A, B, C):
    u = tau_quadratic_asymptotic(QuadraticExitCoefficients(A, B, C))
    assert u > 0
    scale = max(abs(A * u * u), abs(B * u), abs(C))
    assert abs(A * u * u + B * u + C) <= 1e-9 * scale


def test_quadratic_coefficients_of_the_pendulum(still_pendulum):
    m = still_pendulum
    q = quadratic_coefficients(m.system, m.domain, [1.0], [0.0])
    assert q.A == pytest.approx(math.sin(1.0))  # (1/2) 2 psi sin psi
    assert q.B == 0.0 and q.C == pytest.approx(1.0 - HALF_PI**2)


def test_quadratic_branch_converges(still_pendulum):
    m = still_pendulum
    tab = validate_tau_asymptotics(m.system, m.domain, m.v_field, [HALF_PI], [0.0, 1e-1, 1e-2, 1e-3, 1e-4],
                                   branch="auto")
    assert tab.branch == "quadratic"
    assert tab.rows[0].tau == 0.0
    assert tab.errors_decreasing and tab.final_error < 1e-3 and tab.passed


def test_linear_branch_converges_for_a_transverse_field(still_pendulum):
    m = still_pendulum
    tab = validate_tau_asymptotics(m.system, m.domain, lambda x: np.ones(1), [HALF_PI],
                                   [1e-1, 1e-2, 1e-3, 1e-4, 1e-5], branch="auto")
    assert tab.branch == "linear" and tab.passed and tab.final_error < 1e-4


def test_asymptotics_requires_a_boundary_point(still_pendulum):
    m = still_pendulum
    with pytest.raises(PreconditionError):
        validate_tau_asymptotics(m.system, m.domain, m.v_field, [1.0], [1e-2])
