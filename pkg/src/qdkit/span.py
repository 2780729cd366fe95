"""Bergman-span elements and numerical span membership.

A span element is ``s(z) = sum_j c_j d^{alpha_j}/d conj(w)^{alpha_j} K(z, w)|_{w = node_j}``.
Pairing a Bergman function ``phi`` with it gives

    <phi, s> = sum_j conj(c_j) d^{alpha_j} phi(node_j),

so ``conj(c_j)`` are the weights of the quadrature functional that ``s``
represents (see ``SpanElement.functional``).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import KernelUnavailable, OutsideDomain
from .expr import Add, Const, Expr, Mul, as_expr
from .geometry import Ball, Disc, Domain, Polydisc, Product, sample_interior
from .jets import multi_indices
from .kernels import kernel_derivative, kernel_derivative_expr, polydisc_kernel_normalizer


def _node_key(node) -> tuple:
    return tuple(complex(c) for c in np.atleast_1d(node))


@dataclass(frozen=True)
class SpanTerm:
    node: tuple
    alpha: tuple
    coeff: complex

    def to_json(self) -> dict:
        return {
            "node": [[c.real, c.imag] for c in self.node],
            "alpha": list(self.alpha),
            "coeff": [self.coeff.real, self.coeff.imag],
        }


def merge_terms(terms) -> tuple:
    """Combine terms sharing ``(node, alpha)``; zero coefficients are dropped."""
    acc: dict = {}
    order = []
    for t in terms:
        key = (_node_key(t.node), tuple(int(a) for a in t.alpha))
        if key not in acc:
            acc[key] = 0j
            order.append(key)
        acc[key] += complex(t.coeff)
    return tuple(SpanTerm(k[0], k[1], acc[k]) for k in order if acc[k] != 0)


@dataclass(frozen=True)
class SpanElement:
    domain: Domain
    terms: tuple = ()
    check_nodes: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        terms = merge_terms(
            t if isinstance(t, SpanTerm) else SpanTerm(_node_key(t[0]), tuple(t[1]), complex(t[2])) for t in self.terms
        )
        for t in terms:
            if len(t.node) != self.domain.dim or len(t.alpha) != self.domain.dim:
                raise OutsideDomain("term dimension differs from the domain dimension")
        if self.check_nodes:
            for node in {t.node for t in terms}:
                if not self.domain.contains(np.array(node)):
                    raise OutsideDomain(f"node {node} is not inside the domain")
        object.__setattr__(self, "terms", terms)

    # inspection ---------------------------------------------------------
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

    def functional(self) -> list:
        """Weights of ``phi -> <phi, self>`` as ``(node, alpha, conj(coeff))``."""
        return [(t.node, t.alpha, t.coeff.conjugate()) for t in self.terms]

    # evaluation ---------------------------------------------------------
    def evaluate(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if self.domain.dim == 1 and (z.ndim == 0 or z.shape[-1] != 1):
            z = z[..., None]
        out = np.zeros(z.shape[:-1], dtype=complex)
        for t in self.terms:
            out = out + t.coeff * kernel_derivative(self.domain, z, np.array(t.node), t.alpha, max_order=64)
        return out

    __call__ = evaluate

    def as_expression(self) -> Expr:
        """Closed-form expression of the element (canonical domains)."""
        if not self.terms:
            return Const(0j)
        parts = [Mul((Const(t.coeff), kernel_derivative_expr(self.domain, np.array(t.node), t.alpha))) for t in self.terms]
        return parts[0] if len(parts) == 1 else Add(tuple(parts))

    # algebra ------------------------------------------------------------
    def _same_domain(self, other: "SpanElement"):
        if other.domain != self.domain:
            raise ValueError("span elements live on different domains")

    def __add__(self, other: "SpanElement") -> "SpanElement":
        self._same_domain(other)
        return SpanElement(self.domain, self.terms + other.terms, check_nodes=False)

    def __neg__(self) -> "SpanElement":
        return self.scale(-1)

    def __sub__(self, other: "SpanElement") -> "SpanElement":
        return self + (-other)

    def scale(self, c) -> "SpanElement":
        c = complex(c)
        return SpanElement(self.domain, tuple(SpanTerm(t.node, t.alpha, c * t.coeff) for t in self.terms), check_nodes=False)

    def __mul__(self, c) -> "SpanElement":
        return self.scale(c)

    __rmul__ = __mul__

    def prune(self, rtol: float = 1e-13) -> "SpanElement":
        """Drop coefficients below ``rtol`` times the largest one."""
        if not self.terms:
            return self
        big = max(abs(t.coeff) for t in self.terms)
        keep = tuple(t for t in self.terms if abs(t.coeff) > rtol * big)
        return SpanElement(self.domain, keep, check_nodes=False)

    def to_json(self) -> dict:
        return {"domain": self.domain.to_json(), "terms": [t.to_json() for t in self.terms]}

    @classmethod
    def from_json(cls, obj: dict, domain: Domain | None = None) -> "SpanElement":
        from .geometry import domain_from_json

        dom = domain if domain is not None else domain_from_json(obj["domain"])
        terms = []
        for t in obj["terms"]:
            node = tuple(complex(*c) if isinstance(c, list) else complex(c) for c in t["node"])
            c = t["coeff"]
            coeff = complex(*c) if isinstance(c, list) else complex(c)
            terms.append(SpanTerm(node, tuple(int(a) for a in t["alpha"]), coeff))
        return cls(dom, tuple(terms))


def evaluate_span(s: SpanElement, z) -> np.ndarray:
    return s.evaluate(z)


def product_span(factors) -> SpanElement:
    """Span element on the product domain whose value is the product of factor values."""
    factors = list(factors)
    for f in factors:
        if f.domain.dim != 1:
            raise ValueError("product_span factors must be planar")
    doms = tuple(f.domain for f in factors)
    domain = Polydisc(doms) if all(isinstance(d, Disc) for d in doms) else Product(doms)
    terms = []
    for combo in itertools.product(*[f.terms for f in factors]):
        node = tuple(t.node[0] for t in combo)
        alpha = tuple(t.alpha[0] for t in combo)
        coeff = math.prod((t.coeff for t in combo), start=1 + 0j)
        terms.append(SpanTerm(node, alpha, coeff))
    return SpanElement(domain, tuple(terms), check_nodes=False)


def kernel_span(domain: Domain, node, alpha=None, coeff: complex = 1.0) -> SpanElement:
    """Single-term element ``coeff * d^alpha K(., node)``."""
    node = _node_key(node)
    alpha = tuple(alpha) if alpha is not None else (0,) * domain.dim
    return SpanElement(domain, (SpanTerm(node, alpha, complex(coeff)),))


def constant_span(domain: Domain, value: complex = 1.0) -> SpanElement:
    """The constant ``value`` as a span element at the domain center."""
    center = domain.center_point()
    return kernel_span(domain, center, None, value * polydisc_kernel_normalizer(domain, (0,) * domain.dim))


def polynomial_span(poly, domain: Domain, degree: int, check: bool = True) -> SpanElement:
    """Exact span representation of a polynomial on a disc, polydisc or ball.

    On these domains ``(z - c)^alpha`` is a positive multiple of
    ``d^alpha K(., c)`` at the center ``c``, so Taylor coefficients at the
    center convert directly into span coefficients.
    """
    if not isinstance(domain, (Disc, Ball)) and not (
        isinstance(domain, Product) and all(isinstance(f, Disc) for f in domain.factors)
    ):
        raise KernelUnavailable("polynomial_span needs a disc, polydisc or ball")
    poly = as_expr(poly)
    center = domain.center_point()
    jet = poly.jet(center, degree)
    terms = []
    for alpha in multi_indices(domain.dim, degree):
        a = complex(jet.coefficient(alpha))
        if a != 0:
            terms.append(SpanTerm(_node_key(center), alpha, a * polydisc_kernel_normalizer(domain, alpha)))
    s = SpanElement(domain, tuple(terms), check_nodes=False)
    if check:
        pts = sample_interior(domain, "quasi-random", 64, seed=7)
        want = poly.evaluate(pts)
        got = s.evaluate(pts)
        scale = max(1.0, float(np.max(np.abs(want))))
        if np.max(np.abs(want - got)) > 1e-9 * scale:
            raise ValueError(f"expression is not a polynomial of degree <= {degree} on this domain")
    return s


# ---------------------------------------------------------------------------
# membership


@dataclass(frozen=True)
class MembershipConfig:
    max_order: int = 6
    accept_tol: float = 1e-6
    reject_tol: float = 1e-3
    plateau_levels: int = 3
    condition_limit: float = 1e12
    oversample: int = 10
    seed: int = 0


@dataclass(frozen=True)
class MembershipLevel:
    order: int
    nodes: int
    basis_size: int
    residual: float | None
    condition: float
    skipped: bool = False

    def to_json(self) -> dict:
        return {
            "basis": {"max_order": self.order, "nodes": self.nodes, "size": self.basis_size},
            "residual": self.residual,
            "condition": self.condition,
            "skipped": self.skipped,
        }


@dataclass(frozen=True)
class MembershipTrace:
    levels: tuple
    verdict: str
    config: MembershipConfig
    fit: SpanElement | None = field(default=None, compare=False)

    @property
    def basis_sizes(self) -> list:
        return [(lv.order, lv.nodes) for lv in self.levels]

    @property
    def residuals(self) -> list:
        return [lv.residual for lv in self.levels]

    @property
    def evaluated(self) -> list:
        return [lv for lv in self.levels if not lv.skipped]

    @property
    def best_residual(self) -> float:
        vals = [lv.residual for lv in self.evaluated]
        return min(vals) if vals else math.inf

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "levels": [lv.to_json() for lv in self.levels],
            "accept_tol": self.config.accept_tol,
            "reject_tol": self.config.reject_tol,
        }


def centered_lattice(domain: Domain, m: int, scale: float = 0.5) -> list:
    """Nodes on a lattice centred at the domain center, spanning ``scale`` times the inradius.

    Planar domains get an ``m x m`` grid in the complex plane; polydiscs and
    products get ``m`` real offsets per axis, combined as a tensor product.
    """
    center = domain.center_point()
    if m <= 1:
        return [_node_key(center)]
    r = scale * domain.inradius()
    offs = np.linspace(-r, r, m)
    if domain.dim == 1:
        pts = [center[0] + x + 1j * y for y in offs for x in offs]
        return [(p,) for p in pts if domain.contains(np.array([p]))]
    out = []
    for combo in itertools.product(offs, repeat=domain.dim):
        p = center + np.array(combo)
        if domain.contains(p):
            out.append(_node_key(p))
    return out


def _candidate_values(candidate, pts: np.ndarray) -> np.ndarray:
    if isinstance(candidate, SpanElement):
        return candidate.evaluate(pts)
    if isinstance(candidate, Expr):
        return candidate.evaluate(pts)
    if isinstance(candidate, (dict, str)):
        return as_expr(candidate).evaluate(pts)
    if callable(candidate):
        return np.asarray(candidate(pts), dtype=complex)
    raise TypeError(f"unsupported candidate {type(candidate).__name__}")


def membership_residual(candidate, domain: Domain, node_grid=None, max_order: int | None = None,
                        config: MembershipConfig | None = None) -> MembershipTrace:
    """Least-squares distance from ``candidate`` to nested kernel-derivative bases.

    Level ``k`` uses all derivatives of order ``<= k`` at every node of
    ``node_grid`` (default: the domain center).  The design is a fixed
    quasi-random sample sized ``oversample`` times the largest basis, so
    the nested residuals cannot increase.  Levels whose column-scaled
    condition number exceeds ``condition_limit`` are skipped.
    """
    config = config or MembershipConfig()
    if max_order is not None:
        config = MembershipConfig(**{**config.__dict__, "max_order": int(max_order)})
    nodes = [_node_key(p) for p in node_grid] if node_grid is not None else [_node_key(domain.center_point())]
    n = domain.dim
    top = config.max_order
    basis = [(node, alpha) for alpha in multi_indices(n, top) for node in nodes]
    basis.sort(key=lambda b: sum(b[1]))
    count = max(64, config.oversample * len(basis))
    pts = sample_interior(domain, "quasi-random", count, seed=config.seed)
    b = _candidate_values(candidate, pts)
    bnorm = float(np.linalg.norm(b))
    cols = np.empty((len(pts), len(basis)), dtype=complex)
    for k, (node, alpha) in enumerate(basis):
        cols[:, k] = kernel_derivative(domain, pts, np.array(node), alpha, max_order=64)
    norms = np.linalg.norm(cols, axis=0)
    norms[norms == 0] = 1.0
    cols = cols / norms
    levels = []
    fits = {}
    for order in range(top + 1):
        size = sum(1 for bb in basis if sum(bb[1]) <= order)
        a = cols[:, :size]
        sv = np.linalg.svd(a, compute_uv=False)
        cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
        if cond > config.condition_limit or bnorm == 0:
            if bnorm == 0:
                levels.append(MembershipLevel(order, len(nodes), size, 0.0, cond))
                fits[order] = np.zeros(size, dtype=complex)
                continue
            levels.append(MembershipLevel(order, len(nodes), size, None, cond, skipped=True))
            continue
        q, r, piv = scipy.linalg.qr(a, mode="economic", pivoting=True)
        y = q.conj().T @ b
        x = np.zeros(size, dtype=complex)
        x[piv] = scipy.linalg.solve_triangular(r, y)
        res = float(np.linalg.norm(a @ x - b) / bnorm)
        levels.append(MembershipLevel(order, len(nodes), size, res, cond))
        fits[order] = x
    evaluated = [lv for lv in levels if not lv.skipped]
    verdict = "inconclusive"
    fit_level = None
    accepted = [lv for lv in evaluated if lv.residual < config.accept_tol]
    if accepted:
        verdict = "in_span"
        fit_level = accepted[0]
    elif len(evaluated) >= config.plateau_levels and all(
        lv.residual > config.reject_tol for lv in evaluated[-config.plateau_levels :]
    ):
        verdict = "not_in_span"
    if fit_level is None and evaluated:
        fit_level = evaluated[-1]
    fit = None
    if fit_level is not None:
        x = fits[fit_level.order]
        terms = [
            SpanTerm(node, alpha, complex(x[k] / norms[k]))
            for k, (node, alpha) in enumerate(basis[: fit_level.basis_size])
        ]
        fit = SpanElement(domain, tuple(terms), check_nodes=False).prune()
    return MembershipTrace(tuple(levels), verdict, config, fit)


__all__ = [
    "SpanTerm",
    "SpanElement",
    "MembershipConfig",
    "MembershipLevel",
    "MembershipTrace",
    "centered_lattice",
    "constant_span",
    "evaluate_span",
    "kernel_span",
    "membership_residual",
    "polynomial_span",
    "product_span",
]
