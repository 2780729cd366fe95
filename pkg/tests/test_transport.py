import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdkit.errors import URepresentationMismatch
from qdkit.expr import Var, as_expr, exp
from qdkit.geometry import Disc, Polydisc, closure_grid
from qdkit.maps import cardioid_map, exp_shear_map, identity_map, planar_map
from qdkit.span import SpanElement, constant_span, polynomial_span, product_span
from qdkit.transport import (
    extract_quadrature_identity,
    identity_from_span,
    lambda1,
    mean_value_identity,
    pushforward_span,
)

z, z1, z2 = Var(0), Var(0), Var(1)
PI = math.pi
BIDISC = Polydisc((Disc(), Disc()))


def green_integral(f, g, points=4096):
    """``int_{f(D)} g dA = (1/2i) oint g(w) conj(w) dw`` on the image of the unit circle."""
    t = 2 * np.pi * np.arange(points) / points
    c = np.exp(1j * t)
    w = f.evaluate(c[:, None])[:, 0]
    dw = f.jacobian_determinant(c[:, None]) * 1j * c
    vals = np.broadcast_to(as_expr(g).evaluate(w[:, None]), w.shape)
    return complex(np.mean(vals * np.conj(w) * dw) * 2 * np.pi / 2j)


def cardioid_identity(c):
    f = cardioid_map(c)
    return f, extract_quadrature_identity(f, polynomial_span(f.jacobian_expr(), Disc(), 1))


def test_lambda1_examples():
    f = cardioid_map(0.3)
    pts = closure_grid(Disc(), 6) * 0.9
    w = pts[:, 0]
    assert np.allclose(lambda1(1, f).evaluate(pts), 1 + 0.6 * w)
    assert np.allclose(lambda1(z**2, identity_map()).evaluate(pts), w**2)
    assert np.allclose(lambda1(z, f).evaluate(pts), (1 + 0.6 * w) * (w + 0.3 * w**2))


def test_pushforward_through_identity():
    s = constant_span(Disc())
    t = pushforward_span(s, identity_map())
    assert [(x.node, x.alpha) for x in t.terms] == [((0j,), (0,))]
    assert t.terms[0].coeff == pytest.approx(PI)


def test_cardioid_identity_coefficients():
    f, q = cardioid_identity(0.3)
    assert q.nodes == [(0j,)]
    assert q.coefficient([0], (0,)) == pytest.approx(PI * 1.18, rel=1e-13)
    assert q.coefficient([0], (1,)) == pytest.approx(0.3 * PI, rel=1e-13)


@pytest.mark.parametrize("c", [0.3, 0.1 + 0.2j, -0.25j])
def test_cardioid_identity_against_boundary_integrals(c):
    f, q = cardioid_identity(c)
    assert q.coefficient([0], (0,)) == pytest.approx(PI * (1 + 2 * abs(c) ** 2), rel=1e-13)
    assert q.coefficient([0], (1,)) == pytest.approx(PI * np.conj(c), rel=1e-13)
    for k in range(7):
        g = z**k
        assert q.apply(g) == pytest.approx(green_integral(f, g), abs=1e-12)


def test_exp_map_identity():
    f = exp_shear_map()
    u = constant_span(BIDISC)
    q = extract_quadrature_identity(f, u)
    assert len(q.terms) == 1
    t = q.terms[0]
    assert np.allclose(t.node, [1, 0])
    assert t.alpha == (0, 0)
    assert t.coeff == pytest.approx(PI**2)


def test_mean_value_identity():
    q = mean_value_identity(Disc())
    assert q.apply(1 + z + z**4) == pytest.approx(PI)
    q2 = mean_value_identity(BIDISC)
    assert q2.apply(exp(z1 + 2 * z2)) == pytest.approx(PI**2)


def test_identity_from_span_is_mean_value():
    q = identity_from_span(product_span([constant_span(Disc()), constant_span(Disc())]))
    assert q.apply(3 + z1 * z2) == pytest.approx(3 * PI**2)


def test_wrong_representation_is_rejected():
    f = cardioid_map(0.3)
    with pytest.raises(URepresentationMismatch):
        extract_quadrature_identity(f, constant_span(Disc()))


def test_round_trip_through_inverse_map():
    """Pushing forward and back recovers the original span element."""
    f = planar_map(2 * z + 0.5, name="affine")
    from qdkit.maps import HolomorphicMap

    f = HolomorphicMap(f.components, ((z - 0.5) / 2,), name="affine")
    s = SpanElement(Disc(), [((0.1,), (0,), 1.5), ((0,), (2,), 0.2j)])
    there = pushforward_span(s, f)
    inv = HolomorphicMap(f.inverse, f.components, name="affine inverse")
    back = pushforward_span(there, inv)
    back = back.prune(1e-14)
    assert len(back.terms) == len(s.terms)
    for t in s.terms:
        match = [b for b in back.terms if b.alpha == t.alpha and np.allclose(b.node, t.node, atol=1e-14)]
        assert len(match) == 1
        assert match[0].coeff == pytest.approx(t.coeff, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.complex_numbers(max_magnitude=0.45, allow_nan=False), st.integers(0, 5))
def test_pushforward_identity_matches_boundary_integral(c, k):
    f, q = cardioid_identity(c)
    assert abs(q.apply(z**k) - green_integral(f, z**k)) < 1e-11


def test_pushforward_preserves_pairings():
    """<phi o f * u, s>_Omega equals <phi, f_* s>_V for the transported functional."""
    f = cardioid_map(0.2)
    s = SpanElement(Disc(), [((0.1,), (1,), 0.7), ((-0.2j,), (0,), 1.1 - 0.4j)])
    t = pushforward_span(s, f)
    phi = exp(z) + z**3
    lhs = identity_from_span(s).apply(lambda1(phi, f))
    rhs = identity_from_span(t).apply(phi)
    assert lhs == pytest.approx(rhs, rel=1e-12)
