"""Transport of span elements and quadrature identities through biholomorphisms.

For ``f: Omega -> V`` with Jacobian determinant ``u`` the map
``Lambda1(h) = u * (h o f)`` is unitary from the Bergman space of ``V`` to
that of ``Omega``.  A span element ``s`` on ``Omega`` defines the
functional ``phi -> sum conj(c) d^alpha phi(omega)``; composing with
``Lambda1`` gives a functional in the derivatives of ``h`` at ``f(omega)``,
i.e. a span element on ``V``.  The coefficients are collected exactly by
expanding ``u * prod (f_i - f_i(omega))^beta`` in jets.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import OrderOverflow, SingularJacobianAtNode, URepresentationMismatch
from .expr import Compose, Const, Expr, Mul, as_expr
from .geometry import Domain, Image, sample_interior
from .jets import Jet, factorial_multi, multi_indices
from .maps import HolomorphicMap
from .span import SpanElement, SpanTerm

U_MATCH_TOL = 1e-8


def lambda1(g, f: HolomorphicMap) -> Expr:
    """``u * (g o f)`` as an expression on the source domain."""
    g = as_expr(g)
    u = f.jacobian_expr()
    if isinstance(g, Const):
        return u if g.value == 1 else Mul((g, u))
    return Mul((u, Compose(g, f.components)))


@dataclass(frozen=True)
class IdentityTerm:
    node: tuple
    alpha: tuple
    coeff: complex

    def to_json(self) -> dict:
        return {
            "node": [[c.real, c.imag] for c in self.node],
            "alpha": list(self.alpha),
            "coeff": [self.coeff.real, self.coeff.imag],
        }


@dataclass(frozen=True)
class QuadratureIdentity:
    """``int_domain h = sum coeff * d^alpha h(node)`` for Bergman functions ``h``."""

    domain: Domain
    terms: tuple
    provenance: dict = field(default_factory=dict, compare=False)

    @property
    def nodes(self) -> list:
        seen = []
        for t in self.terms:
            if t.node not in seen:
                seen.append(t.node)
        return seen

    @property
    def max_order(self) -> int:
        return max((sum(t.alpha) for t in self.terms), default=0)

    def apply(self, g) -> complex:
        """Right-hand side ``sum coeff * d^alpha g(node)`` for an expression ``g``."""
        g = as_expr(g)
        order = self.max_order
        total = 0j
        for node in self.nodes:
            jet = g.jet(np.array(node), order)
            for t in self.terms:
                if t.node == node:
                    total += t.coeff * complex(jet.derivative_at(t.alpha))
        return total

    def coefficient(self, node, alpha) -> complex:
        node = tuple(complex(c) for c in np.atleast_1d(node))
        for t in self.terms:
            if t.alpha == tuple(alpha) and np.allclose(t.node, node, atol=1e-12):
                return t.coeff
        return 0j

    def to_json(self) -> dict:
        out = {"terms": [t.to_json() for t in self.terms]}
        if self.provenance:
            out["provenance"] = self.provenance
        return out


def _node_pushforward(f: HolomorphicMap, node: np.ndarray, coeffs: dict, order: int) -> tuple:
    """Functional weights ``D_beta`` at ``f(node)`` from span coefficients at ``node``."""
    n = f.dim
    u_jet = f.jacobian_expr().jet(node, order)
    if abs(complex(u_jet.value)) == 0:
        raise SingularJacobianAtNode(f"Jacobian vanishes at node {node}")
    comps = f.jets(node, order)
    p = np.array([complex(c.value) for c in comps])
    shifted = []
    for c in comps:
        cc = c.coeffs.copy()
        cc[(0,) * n] = 0
        shifted.append(Jet(cc, c.center))
    weights = {}
    for beta in multi_indices(n, order):
        mono = u_jet
        for i, b in enumerate(beta):
            if b:
                mono = mono * shifted[i].power(b)
        total = 0j
        for alpha, c in coeffs.items():
            total += np.conj(c) * complex(mono.derivative_at(alpha))
        weights[beta] = total / factorial_multi(beta)
    return p, weights


def _functional_pushforward(s: SpanElement, f: HolomorphicMap, jet_order: int | None) -> list:
    need = s.max_order
    order = need if jet_order is None else int(jet_order)
    if order < need:
        raise OrderOverflow(f"jet order {order} is below the span order {need}")
    out = []
    for node in s.nodes:
        coeffs = {t.alpha: t.coeff for t in s.terms if t.node == node}
        p, weights = _node_pushforward(f, np.array(node), coeffs, order)
        out.append((p, weights))
    return out


def _target_domain(domain: Domain, f: HolomorphicMap) -> Domain:
    if isinstance(domain, Image) and f.inverse is not None:
        if f.inverse == domain.map.components and f.components == domain.map.inverse:
            return domain.base
    return Image(domain, f)


def pushforward_span(s: SpanElement, f: HolomorphicMap, jet_order: int | None = None, tol: float = 1e-15) -> SpanElement:
    """Span element on ``f(Omega)`` representing ``Lambda1^{-1}(s)``."""
    terms = []
    for p, weights in _functional_pushforward(s, f, jet_order):
        scale = max((abs(w) for w in weights.values()), default=0.0)
        for beta, w in weights.items():
            if abs(w) > tol * scale:
                terms.append(SpanTerm(tuple(complex(x) for x in p), beta, complex(np.conj(w))))
    return SpanElement(_target_domain(s.domain, f), tuple(terms), check_nodes=False)


def extract_quadrature_identity(f: HolomorphicMap, u_repr: SpanElement, jet_order: int | None = None,
                                validation_points: int = 64, tol: float = U_MATCH_TOL,
                                prune: float = 1e-15) -> QuadratureIdentity:
    """Quadrature identity of ``f(Omega)`` from a span representation of the Jacobian.

    ``int_V h = <h, 1>_V = <u (h o f), u>_Omega``, and the right-hand side is
    the functional of ``u_repr`` applied to ``u (h o f)``.
    """
    base = u_repr.domain
    pts = sample_interior(base, "quasi-random", validation_points, seed=11)
    want = f.jacobian_determinant(pts)
    got = u_repr.evaluate(pts)
    scale = max(1.0, float(np.max(np.abs(want))))
    err = float(np.max(np.abs(want - got)))
    if err > tol * scale:
        raise URepresentationMismatch(f"span element differs from the Jacobian by {err:.3e}")
    terms = []
    for p, weights in _functional_pushforward(u_repr, f, jet_order):
        big = max((abs(w) for w in weights.values()), default=0.0)
        for beta, w in weights.items():
            if abs(w) > prune * big:
                terms.append(IdentityTerm(tuple(complex(x) for x in p), beta, complex(w)))
    provenance = {"map": f.to_json(), "u_repr": u_repr.to_json(), "u_check_error": err}
    return QuadratureIdentity(Image(base, f), tuple(terms), provenance)


def mean_value_identity(domain: Domain) -> QuadratureIdentity:
    """``int g = vol * g(center)`` for discs, polydiscs and balls."""
    vol = domain.volume()
    center = tuple(complex(c) for c in domain.center_point())
    return QuadratureIdentity(domain, (IdentityTerm(center, (0,) * domain.dim, complex(vol)),), {"kind": "mean-value"})


def identity_from_span(s: SpanElement) -> QuadratureIdentity:
    """Identity ``int h = <h, s>`` for a span element ``s`` equal to 1 on its domain."""
    terms = tuple(IdentityTerm(node, alpha, c) for node, alpha, c in s.functional())
    return QuadratureIdentity(s.domain, terms, {"span": s.to_json()})


__all__ = [
    "IdentityTerm",
    "QuadratureIdentity",
    "extract_quadrature_identity",
    "identity_from_span",
    "lambda1",
    "mean_value_identity",
    "pushforward_span",
]
