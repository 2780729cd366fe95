import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdkit.errors import NotOriginFixing, ScheduleInfeasible
from qdkit.expr import Var
from qdkit.geometry import CircleDomain, Disc, Polydisc, closure_grid
from qdkit.homotopy import (
    ConstantSchedule,
    DeformationRecipe,
    RescalingSchedule,
    deform_convex,
    deformation_map,
    dilation_homotopy,
    dilation_qd_trace,
    epsilon_criterion,
    homotopy_schedule,
    rescaling_schedule,
    straight_line_homotopy,
    univalence_radius,
)
from qdkit.maps import cardioid_map, identity_map, planar_map
from qdkit.scenarios import quadratic_sine_family
from qdkit.span import constant_span, polynomial_span

z, z1, z2 = Var(0), Var(0), Var(1)
PI = math.pi
BIDISC = Polydisc((Disc(), Disc()))
PTS = closure_grid(Disc(), 8)


def ramp(t, t1, t2, m):
    """Piecewise-linear reference through the schedule's breakpoints."""
    return np.interp(t, [0, t1 / 2, t1, t2, (t2 + 1) / 2, 1], [1, 1, m / 2, m / 2, 1, 1])


@pytest.mark.parametrize("t, expected", [(0.5, z + 0.15 * z**2), (1.0, z + 0.3 * z**2), (0.0, z)])
def test_dilation_examples(t, expected):
    phi = dilation_homotopy(cardioid_map(0.3), t)
    assert np.allclose(phi.evaluate(PTS)[:, 0], expected.evaluate(PTS))


def test_dilation_needs_origin():
    with pytest.raises(NotOriginFixing):
        dilation_homotopy(planar_map(z + 0.1), 0.5)


def test_dilation_carries_the_inverse():
    from qdkit.maps import HolomorphicMap

    mobius = HolomorphicMap((z / (1 - 0.3 * z),), (z / (1 + 0.3 * z),))
    phi = dilation_homotopy(mobius, 0.4)
    w = np.array([[0.2 + 0.3j]])
    assert phi.evaluate(np.array([[0.5]]))[0, 0] == pytest.approx(0.5 / (1 - 0.12 * 0.5))
    assert np.allclose(phi.evaluate(phi.inverse_map().evaluate(w)), w, atol=1e-12)


def test_univalence_radius_examples():
    assert univalence_radius(identity_map()) == 1.0
    assert univalence_radius(planar_map(z + z**2 / 2)) == 1.0
    assert univalence_radius(planar_map((z - 0.5) ** 2)) < 0.5


@pytest.mark.parametrize("a", [0.6, 0.8, 1.0, 1.5, 2.5])
def test_univalence_radius_of_quadratics(a):
    # f' = 1 + 2az vanishes at -1/(2a), the exact univalence radius
    r = univalence_radius(planar_map(z + a * z**2), bisection_tol=1e-3)
    assert 1 / (2 * a) - 1e-3 <= r <= 1 / (2 * a)


def test_rescaling_examples():
    k = RescalingSchedule(0.2, 0.8, 0.5)
    assert k(0.0) == 1.0
    assert k(0.5) == pytest.approx(0.25)
    assert k(0.15) == pytest.approx(0.625)
    assert k(1.0) == 1.0
    assert np.all(RescalingSchedule(0.2, 0.8, 2.0)(np.linspace(0, 1, 11)) == 1.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.02, 0.45), st.floats(0.55, 0.98), st.floats(0.05, 2.0))
def test_rescaling_matches_breakpoint_interpolation(t1, t2, m):
    t = np.linspace(0, 1, 257)
    k = RescalingSchedule(t1, t2, m)(t)
    assert np.allclose(k, ramp(t, t1, t2, min(m, 2.0)), atol=1e-12)
    assert np.all(k <= 1) and np.all(k >= min(m, 2) / 2 - 1e-15)


def test_schedule_from_samples():
    t = np.linspace(0, 1, 101)
    r = np.where((t > 0.3 - 1e-9) & (t < 0.7 + 1e-9), 0.5, 1.0)
    k = rescaling_schedule(t, r, t1=0.3, t2=0.7, m=0.5)
    assert np.all(k(t) <= r)
    assert k(0.5) == pytest.approx(0.25)
    assert isinstance(rescaling_schedule(t, np.ones_like(t)), ConstantSchedule)


def test_infeasible_schedule():
    t = np.linspace(0, 1, 11)
    with pytest.raises(ScheduleInfeasible):
        rescaling_schedule(t, np.full_like(t, 0.5))


def test_quadratic_sine_schedule():
    sched = homotopy_schedule(quadratic_sine_family, np.linspace(0, 1, 11), resolution=48)
    assert sched.r.min() == pytest.approx(0.5, abs=2e-3)
    assert np.all(np.asarray(sched.k(sched.t_samples)) <= sched.r)


def test_straight_line_examples():
    f, g = identity_map(), planar_map(z + 0.3 * z**2)
    assert straight_line_homotopy(f, g, 0) is f
    assert straight_line_homotopy(f, g, 1) is g
    phi = straight_line_homotopy(f, g, 0.4)
    w = PTS[:, 0]
    assert np.allclose(phi.evaluate(PTS)[:, 0], w + 0.12 * w**2)
    d = phi.jacobian_determinant(PTS) - f.jacobian_determinant(PTS)
    assert np.allclose(d, 0.4 * (g.jacobian_determinant(PTS) - f.jacobian_determinant(PTS)))


def test_epsilon_examples():
    assert epsilon_criterion(identity_map(), Disc()) == pytest.approx(1.0)
    hole = CircleDomain(Disc(), (Disc(0, 0.3),))
    assert epsilon_criterion(identity_map(), hole) == pytest.approx(2 / PI)
    assert epsilon_criterion(cardioid_map(0.3), Disc()) == pytest.approx(0.4, abs=1e-5)


def test_dilation_trace_coefficients():
    f = cardioid_map(0.3)
    trace = dilation_qd_trace(f, [0.0, 0.5, 1.0], tests=8, tol=1e-5)
    assert trace.passed
    for e in trace.entries:
        c = 0.3 * e.t
        assert e.identity.coefficient([0], (0,)) == pytest.approx(PI * (1 + 2 * c**2), rel=1e-9)
        assert abs(e.identity.coefficient([0], (1,)) - PI * c) < 1e-9


def test_coefficient_jump_is_linear_in_step():
    f = cardioid_map(0.3)
    a = dilation_qd_trace(f, np.linspace(0, 1, 6)).continuity
    b = dilation_qd_trace(f, np.linspace(0, 1, 11)).continuity
    assert b / a == pytest.approx(0.5, abs=0.05)


def test_deformation_example():
    g = polynomial_span(1 + 0.4 * z2, BIDISC, 1)
    res = deform_convex(DeformationRecipe(BIDISC, g))
    pts = closure_grid(BIDISC, 5)
    want = np.stack([pts[:, 0], pts[:, 1] + 0.2 * pts[:, 1] ** 2], axis=1)
    assert np.allclose(res.map.evaluate(pts), want, atol=1e-14)
    assert res.closeness == pytest.approx(0.2, abs=1e-12)


def test_trivial_deformation():
    res = deform_convex(DeformationRecipe(BIDISC, constant_span(BIDISC)))
    assert res.closeness == pytest.approx(0.0, abs=1e-14)
    assert len(res.identity.terms) == 1
    assert res.identity.terms[0].coeff == pytest.approx(PI**2)


def test_deformation_rejects_large_targets():
    g = polynomial_span(1 + 1.5 * z2, BIDISC, 1)
    with pytest.raises(ValueError):
        deform_convex(DeformationRecipe(BIDISC, g))


def test_deformation_with_shadow_function():
    g = polynomial_span(1 + 0.2 * z1 * z2, BIDISC, 2)
    gamma = 0.1 * z1
    f = deformation_map(DeformationRecipe(BIDISC, g, gamma))
    pts = closure_grid(BIDISC, 4) * 0.9
    # jacobian of (z1, U + gamma) is dU/dz2 = g
    assert np.allclose(f.jacobian_determinant(pts), g.evaluate(pts), atol=1e-12)
