import math

import numpy as np
import pytest

from qdkit.errors import KernelUnavailable, OrderExceeded
from qdkit.geometry import Ball, CircleDomain, Disc, Image, Polydisc
from qdkit.kernels import BergmanKernel, kernel_derivative, kernel_eval, transform_kernel
from qdkit.maps import cardioid_map, exp_shear_map, identity_map, scaling_map
from qdkit.scenarios import exp_shear_kernel
from qdkit.verify import reproducing_check

BIDISC = Polydisc((Disc(), Disc()))


def test_kernel_values_at_center():
    assert kernel_eval(Disc(), [0], [0]) == pytest.approx(1 / math.pi)
    assert kernel_eval(BIDISC, [0, 0], [0, 0]) == pytest.approx(1 / math.pi**2)
    assert kernel_eval(Disc(), [0.5], [0]) == pytest.approx(1 / math.pi)


def test_ball_kernel_closed_form():
    z, w = np.array([0.3, 0.1j]), np.array([-0.2, 0.4])
    inner = np.vdot(w, z)
    assert kernel_eval(Ball(2), z, w) == pytest.approx(2 / (math.pi**2 * (1 - inner) ** 3))


def test_shifted_disc_kernel_is_translation_invariant():
    d = Disc(0.5 + 0.5j, 2.0)
    z, w = np.array([0.7 + 0.1j]), np.array([0.2 + 1.1j])
    r2 = 4.0
    want = r2 / (math.pi * (r2 - (z[0] - d.center) * np.conj(w[0] - d.center)) ** 2)
    assert kernel_eval(d, z, w) == pytest.approx(want)


def fd_wbar(domain, z, node, axis, h=1e-5):
    """d/d conj(w) K(z, w) by central differences in conj(w)."""
    e = np.zeros(domain.dim, complex)
    e[axis] = h
    # K is antiholomorphic in w, so shifting w by a real h shifts conj(w) by h
    return (kernel_eval(domain, z, node + e) - kernel_eval(domain, z, node - e)) / (2 * h)


def test_first_derivative_on_disc():
    z = np.array([[0.3 + 0.2j], [-0.5j]])
    got = kernel_derivative(Disc(), z, [0], (1,))
    assert np.allclose(got, 2 * z[:, 0] / math.pi)
    assert np.allclose(got, fd_wbar(Disc(), z, np.zeros(1), 0), atol=1e-8)


def test_polydisc_derivative():
    z = np.array([[0.3, 0.2j], [0.1, -0.6]])
    got = kernel_derivative(BIDISC, z, [0, 0], (0, 1))
    assert np.allclose(got, 2 * z[:, 1] / math.pi**2)
    assert np.allclose(got, fd_wbar(BIDISC, z, np.zeros(2), 1), atol=1e-8)


@pytest.mark.parametrize("domain, node", [(Disc(), [0.2 - 0.1j]), (Ball(2), [0.1, 0.2j]), (BIDISC, [0.3, -0.2])])
def test_zero_order_derivative_is_kernel(domain, node):
    z = np.array([[0.1] * domain.dim, [-0.2j] * domain.dim])
    assert np.allclose(kernel_derivative(domain, z, node, (0,) * domain.dim), kernel_eval(domain, z, np.array(node)))


@pytest.mark.parametrize("alpha", [(2,), (3,)])
def test_closed_and_jet_derivatives_agree(alpha):
    z = np.array([[0.3 + 0.2j], [-0.5j]])
    node = [0.2 + 0.1j]
    a = kernel_derivative(Disc(), z, node, alpha, method="closed")
    b = kernel_derivative(Disc(), z, node, alpha, method="jet")
    assert np.allclose(a, b, rtol=1e-12)


def test_order_limit():
    with pytest.raises(OrderExceeded):
        kernel_derivative(Disc(), [[0]], [0], (5,), max_order=4)


def test_no_closed_form_for_circle_domains():
    with pytest.raises(KernelUnavailable):
        BergmanKernel(CircleDomain(Disc(), (Disc(0, 0.3),)))


def test_transform_kernel_examples():
    z = np.array([[0.2 + 0.1j]])
    assert np.allclose(transform_kernel(identity_map(), Disc(), z, z), kernel_eval(Disc(), z, z))
    assert transform_kernel(exp_shear_map(), BIDISC, [1, 0], [1, 0]) == pytest.approx(1 / math.pi**2)
    assert transform_kernel(scaling_map(2.0), Disc(), [0], [0]) == pytest.approx(1 / (4 * math.pi))
    # the disc of radius 2 has the same kernel
    p = np.array([0.3 + 0.4j])
    q = np.array([-0.5 + 0.2j])
    assert transform_kernel(scaling_map(2.0), Disc(), p, q) == pytest.approx(kernel_eval(Disc(0, 2.0), p, q))


def test_exp_kernel_matches_closed_form(rng):
    dom = Image(BIDISC, exp_shear_map())
    base = 0.7 * (rng.uniform(-0.7, 0.7, (30, 2)) + 1j * rng.uniform(-0.7, 0.7, (30, 2)))
    pts = exp_shear_map().evaluate(base)
    z, w = pts[:15], pts[15:]
    assert np.allclose(kernel_eval(dom, z, w), exp_shear_kernel(z, w), rtol=1e-12)


@pytest.mark.parametrize(
    "domain, tol",
    [(Disc(), 1e-12), (Disc(0.3j, 0.5), 1e-12), (BIDISC, 1e-10), (Ball(2), 1e-10),
     (Image(Disc(), cardioid_map(0.3)), 1e-10)],
)
def test_reproducing_property(domain, tol):
    rep = reproducing_check(domain, degree=6, count=8)
    assert rep["max_residual"] < tol
