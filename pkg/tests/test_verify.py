import math

import numpy as np
import pytest

from qdkit.expr import Var, as_expr, exp
from qdkit.geometry import Ball, Disc, Image, Polydisc
from qdkit.maps import cardioid_map, exp_shear_map, identity_map
from qdkit.span import polynomial_span
from qdkit.transport import QuadratureIdentity, IdentityTerm, extract_quadrature_identity, mean_value_identity
from qdkit.verify import (
    IntegrationScheme,
    integrate,
    monomial_tests,
    qdp_check,
    qmc_tests,
    residual,
    stratified_image_sample,
    tensor_rule,
    verify_identity,
)

z, z1, z2 = Var(0), Var(0), Var(1)
PI = math.pi
BIDISC = Polydisc((Disc(), Disc()))


def test_disc_area():
    assert integrate(Disc(), as_expr(1.0), IntegrationScheme(radial=64, angular=64)) == pytest.approx(PI, rel=1e-10)


@pytest.mark.parametrize("k", range(1, 8))
def test_disc_monomials_vanish(k):
    assert abs(integrate(Disc(), z**k)) < 1e-10


def test_exp_image_volume():
    assert integrate(Image(BIDISC, exp_shear_map()), as_expr(1.0)) == pytest.approx(PI**2, rel=1e-12)


def test_ball_second_moment():
    # int_B |z1|^2 dV = pi^2 / 3! in the unit ball of C^2
    val = integrate(Ball(2), lambda p: np.abs(p[:, 0]) ** 2)
    assert val == pytest.approx(PI**2 / 6, rel=1e-10)


def test_shifted_disc_moments():
    d = Disc(0.3 - 0.2j, 0.5)
    # mean value property: int (z - c)^0 = area, int z = area * c
    assert integrate(d, z) == pytest.approx(PI * 0.25 * (0.3 - 0.2j), rel=1e-12)


def test_rules_are_cached_and_weighted():
    pts, wts = tensor_rule(Disc(), 8, 8)
    assert pts.shape == (64, 1)
    assert wts.sum() == pytest.approx(PI)
    assert tensor_rule(Disc(), 8, 8)[0] is pts


def test_monomial_tests_count():
    assert len(monomial_tests(1, 10)) == 11
    assert len(monomial_tests(2, 3)) == 10


def test_residual_modes():
    assert residual(1.0 + 1e-9, 1.0) == pytest.approx((1e-9, True), rel=1e-6)
    assert residual(1e-12, 0.0) == (1e-12, False)


def test_mean_value_identity_verifies():
    rep = verify_identity(mean_value_identity(Disc()), 10, tol=1e-8)
    assert rep.passed and rep.max_residual < 1e-12
    rep2 = verify_identity(mean_value_identity(BIDISC), 6, tol=1e-8)
    assert rep2.passed


def test_cardioid_identity_verifies():
    f = cardioid_map(0.3)
    q = extract_quadrature_identity(f, polynomial_span(f.jacobian_expr(), Disc(), 1))
    rep = verify_identity(q, 8, tol=1e-5)
    assert rep.passed and rep.max_residual < 1e-10


def test_wrong_identity_fails():
    q = QuadratureIdentity(Disc(), (IdentityTerm((0j,), (0,), 3.0),))
    rep = verify_identity(q, 2, tol=1e-8)
    assert not rep.passed


def test_explicit_test_list():
    q = mean_value_identity(Disc())
    rep = verify_identity(q, [("exp", exp(z)), ("c", 2.0)], tol=1e-10)
    assert [r.label for r in rep.rows] == ["exp", "c"]
    assert rep.passed


def test_stratified_sampler_on_planar_image():
    dom = Image(Disc(), cardioid_map(0.3))
    pts, wts = stratified_image_sample(dom, 1 << 18, seed=0)
    assert dom.contains_many(pts).all()
    assert wts.sum() == pytest.approx(PI * 1.18, rel=2e-3)


def test_qmc_cross_check_on_planar_image():
    f = cardioid_map(0.3)
    q = extract_quadrature_identity(f, polynomial_span(f.jacobian_expr(), Disc(), 1))
    rep = verify_identity(q, qmc_tests(1), IntegrationScheme("quasi-monte-carlo", samples=1 << 20), tol=1e-3)
    assert rep.passed


def test_qmc_pullback_agrees_with_tensor_rule():
    dom = Image(Disc(), cardioid_map(0.3))
    qmc = integrate(dom, 1 + z, IntegrationScheme("quasi-monte-carlo", samples=1 << 16, pullback=True))
    assert qmc == pytest.approx(integrate(dom, 1 + z), rel=1e-4)


def test_qdp_table_for_bidisc_identity():
    table = qdp_check(identity_map(2), BIDISC, max_degree=3)
    assert len(table.rows) == 10
    assert table.all_in_span


def test_qdp_expectations():
    table = qdp_check(exp_shear_map(), BIDISC, alphas=[(0, 0), (1, 0)], expected={(1, 0): "not_in_span"})
    assert table.row((0, 0)).verdict == "in_span"
    assert table.row((1, 0)).verdict == "not_in_span"
    assert table.matches_expectations
    assert not table.all_in_span


def test_report_json_shape():
    rep = verify_identity(mean_value_identity(Disc()), 2)
    js = rep.to_json()
    assert js["passed"] is True
    assert js["scheme"]["kind"] == "tensor-gauss"
    assert len(js["rows"]) == 3
