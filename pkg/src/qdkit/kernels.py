"""Bergman kernels of canonical domains and of their biholomorphic images.

Normalization: Lebesgue measure on C^n = R^{2n}, so that
``int_D f(w) K(z, w) dA(w) = f(z)``.  For the disc of radius ``r`` centred
at ``a``::

    K(z, w) = r^2 / (pi (r^2 - (z-a) conj(w-a))^2)

polydiscs and products multiply factor kernels, and the ball of radius
``r`` in C^n has ``n! r^2 / (pi^n (r^2 - <z-c, w-c>)^(n+1))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import KernelUnavailable, NonConvergedInverse, OrderExceeded, OutsideDomain
from .expr import Add, Compose, Const, Expr, Mul, Pow, Sub, Var
from .geometry import Ball, CircleDomain, Disc, Domain, Image, Product
from .jets import DEFAULT_ORDER, Jet, factorial_multi

CHUNK = 4096


def _points(z, n: int) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if z.ndim == 0:
        z = z.reshape(1)
    if z.shape[-1] != n:
        if n == 1:
            z = z[..., None]
        else:
            raise OutsideDomain(f"points of dimension {z.shape[-1]} for a domain of dimension {n}")
    return z


def in_closure(domain: Domain, z: np.ndarray, slack: float = 1e-9) -> np.ndarray:
    """Vectorized membership in the closed canonical domain (images use the inverse)."""
    if isinstance(domain, Disc):
        return np.abs(z[..., 0] - domain.center) <= domain.radius * (1 + slack)
    if isinstance(domain, Product):
        out = np.ones(z.shape[:-1], dtype=bool)
        for i, f in enumerate(domain.factors):
            out &= in_closure(f, z[..., i : i + 1], slack)
        return out
    if isinstance(domain, Ball):
        d = z - np.array(domain.center)
        return np.sum(np.abs(d) ** 2, axis=-1) <= (domain.radius * (1 + slack)) ** 2
    if isinstance(domain, CircleDomain):
        out = in_closure(domain.outer, z, slack)
        for h in domain.holes:
            out &= np.abs(z[..., 0] - h.center) >= h.radius * (1 - slack)
        return out
    return domain.contains_many(z)


def _check_node(domain: Domain, node) -> np.ndarray:
    node = _points(node, domain.dim).reshape(domain.dim)
    if not domain.contains(node):
        raise OutsideDomain(f"node {node} is not inside the domain")
    return node


def _check_points(domain: Domain, z: np.ndarray) -> None:
    if isinstance(domain, Image):
        return
    if not np.all(in_closure(domain, z)):
        raise OutsideDomain("evaluation point outside the closed domain")


def _supports_kernel(domain: Domain) -> bool:
    if isinstance(domain, (Disc, Ball)):
        return True
    if isinstance(domain, Product):
        return all(_supports_kernel(f) for f in domain.factors)
    if isinstance(domain, Image):
        return _supports_kernel(domain.base)
    return False


# ---------------------------------------------------------------------------
# closed forms


def kernel_eval(domain: Domain, z, w) -> np.ndarray:
    """``K(z, w)`` with broadcasting over leading axes."""
    z = _points(z, domain.dim)
    w = _points(w, domain.dim)
    if isinstance(domain, Disc):
        a, r = domain.center, domain.radius
        t = r * r - (z[..., 0] - a) * np.conj(w[..., 0] - a)
        return r * r / (np.pi * t * t)
    if isinstance(domain, Product):
        out = 1.0
        for i, f in enumerate(domain.factors):
            out = out * kernel_eval(f, z[..., i : i + 1], w[..., i : i + 1])
        return np.asarray(out, dtype=complex)
    if isinstance(domain, Ball):
        n, r = domain.n, domain.radius
        c = np.array(domain.center)
        t = r * r - np.sum((z - c) * np.conj(w - c), axis=-1)
        return math.factorial(n) * r * r / (np.pi**n * t ** (n + 1))
    if isinstance(domain, Image):
        return transform_kernel(domain.map, domain.base, z, w)
    raise KernelUnavailable(f"no closed-form kernel for {type(domain).__name__}")


def kernel_derivative(domain: Domain, z, node, alpha, method: str = "closed",
                      max_order: int = DEFAULT_ORDER) -> np.ndarray:
    """``d^alpha/d conj(w)^alpha K(z, w)`` at ``w = node``, vectorized over ``z``.

    ``method="closed"`` differentiates the closed forms directly (canonical
    domains only); ``method="jet"`` expands ``x -> K(x, z)`` in a jet at the
    node and conjugates, which also covers image domains.
    """
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != domain.dim:
        raise OutsideDomain("multi-index length differs from the domain dimension")
    if sum(alpha) > max_order:
        raise OrderExceeded(f"|alpha|={sum(alpha)} exceeds the configured order {max_order}")
    z = _points(z, domain.dim)
    node = _check_node(domain, node)
    _check_points(domain, z)
    if isinstance(domain, Image) or method == "jet":
        return _jet_derivative(domain, z, node, alpha)
    return _closed_derivative(domain, z, node, alpha)


def _closed_derivative(domain, z, node, alpha):
    if isinstance(domain, Disc):
        a, r, k = domain.center, domain.radius, alpha[0]
        x = z[..., 0] - a
        t = r * r - x * np.conj(node[0] - a)
        return math.factorial(k + 1) * r * r * x**k / (np.pi * t ** (k + 2))
    if isinstance(domain, Product):
        out = 1.0
        for i, f in enumerate(domain.factors):
            out = out * _closed_derivative(f, z[..., i : i + 1], node[i : i + 1], alpha[i : i + 1])
        return np.asarray(out, dtype=complex)
    if isinstance(domain, Ball):
        n, r = domain.n, domain.radius
        c = np.array(domain.center)
        x = z - c
        t = r * r - np.sum(x * np.conj(node - c), axis=-1)
        m = sum(alpha)
        mono = np.prod([x[..., i] ** alpha[i] for i in range(n)], axis=0)
        return math.factorial(n + m) * r * r * mono / (np.pi**n * t ** (n + 1 + m))
    raise KernelUnavailable(f"no closed-form kernel for {type(domain).__name__}")


def kernel_derivative_expr(domain: Domain, node, alpha) -> Expr:
    """The function ``z -> d^alpha_wbar K(z, node)`` as an expression (canonical domains)."""
    alpha = tuple(int(a) for a in alpha)
    node = _points(node, domain.dim).reshape(domain.dim)
    if isinstance(domain, Disc):
        a, r, k = domain.center, domain.radius, alpha[0]
        x = Sub(Var(0), Const(a)) if a != 0 else Var(0)
        b = complex(np.conj(node[0] - a))
        t = Sub(Const(r * r), Mul((Const(b), x))) if b != 0 else Const(r * r)
        coef = math.factorial(k + 1) * r * r / np.pi
        return _monomial_over(coef, [(x, k)], t, k + 2)
    if isinstance(domain, Product):
        parts = []
        for i, f in enumerate(domain.factors):
            e = kernel_derivative_expr(f, node[i : i + 1], alpha[i : i + 1])
            parts.append(_shift_vars(e, i))
        return Mul(tuple(parts))
    if isinstance(domain, Ball):
        n, r = domain.n, domain.radius
        c = np.array(domain.center)
        xs = [Sub(Var(i), Const(c[i])) if c[i] != 0 else Var(i) for i in range(n)]
        terms = [Mul((Const(complex(np.conj(node[i] - c[i]))), xs[i])) for i in range(n) if node[i] != c[i]]
        t = Sub(Const(r * r), Add(tuple(terms))) if terms else Const(r * r)
        m = sum(alpha)
        coef = math.factorial(n + m) * r * r / np.pi**n
        return _monomial_over(coef, list(zip(xs, alpha)), t, n + 1 + m)
    raise KernelUnavailable(f"no closed-form kernel expression for {type(domain).__name__}")


def _monomial_over(coef: float, factors, t: Expr, power: int) -> Expr:
    parts: list[Expr] = [Const(coef)]
    for x, k in factors:
        if k:
            parts.append(x if k == 1 else Pow(x, k))
    if not isinstance(t, Const):
        parts.append(Pow(t, -power))
    else:
        parts[0] = Const(coef / complex(t.value) ** power)
    return parts[0] if len(parts) == 1 else Mul(tuple(parts))


def _shift_vars(e: Expr, offset: int) -> Expr:
    """Renumber ``z1`` of a planar expression to ``z_{1+offset}``."""
    if offset == 0:
        return e
    return Compose(e, (Var(offset),))


# ---------------------------------------------------------------------------
# jet route


def _holomorphic_jet(domain: Domain, xs: tuple, y: np.ndarray) -> Jet:
    """Jet of ``x -> K(x, y)`` where ``x`` is given by the input jets ``xs``.

    The kernel is holomorphic in its first argument; ``y`` supplies the batch.
    """
    if isinstance(domain, Disc):
        a, r = domain.center, domain.radius
        b = np.conj(y[..., 0] - a)
        t = (xs[0] - a).scale(-b) + r * r
        return t.power(-2).scale(r * r / np.pi)
    if isinstance(domain, Product):
        out = None
        for i, f in enumerate(domain.factors):
            j = _holomorphic_jet(f, (xs[i],), y[..., i : i + 1])
            out = j if out is None else out * j
        return out
    if isinstance(domain, Ball):
        n, r = domain.n, domain.radius
        c = np.array(domain.center)
        t = None
        for i in range(n):
            term = (xs[i] - c[i]).scale(-np.conj(y[..., i] - c[i]))
            t = term if t is None else t + term
        t = t + r * r
        return t.power(-(n + 1)).scale(math.factorial(n) * r * r / np.pi**n)
    if isinstance(domain, Image):
        return _image_jet_with(domain, _image_node_data(domain, xs), y)
    raise KernelUnavailable(f"no closed-form kernel for {type(domain).__name__}")


def _inverse_jets(f, base: Domain, xs: tuple) -> tuple:
    """Jets of ``F = f^{-1}`` composed with ``xs``."""
    if f.inverse is not None:
        return tuple(c.jet_of(xs) for c in f.inverse)
    n = f.dim
    vals = np.stack(np.broadcast_arrays(*[x.value for x in xs]), axis=-1)
    p, ok = f.invert_many(vals.reshape(-1, n), seed_domain=base)
    if not np.all(ok):
        raise NonConvergedInverse("inverse did not converge at a node")
    p = p.reshape(vals.shape)
    jinv = np.linalg.inv(f.jacobian_matrix(p))
    order = xs[0].order
    cur = [Jet.constant(p[..., i], xs[0].center, order) for i in range(n)]
    # simplified Newton in the jet algebra gains one order per sweep
    for _ in range(order + 1):
        resid = [c.jet_of(tuple(cur)) - x for c, x in zip(f.components, xs)]
        cur = [
            cur[i] - sum((resid[k].scale(jinv[..., i, k]) for k in range(n)), Jet.constant(0, xs[0].center, order))
            for i in range(n)
        ]
    return tuple(cur)


def _jet_derivative(domain: Domain, z: np.ndarray, node: np.ndarray, alpha: tuple) -> np.ndarray:
    n = domain.dim
    order = sum(alpha)
    flat = z.reshape(-1, n)
    out = np.empty(len(flat), dtype=complex)
    xs = tuple(Jet.variable(i, node, order) for i in range(n))
    pre = None
    for s in range(0, len(flat), CHUNK):
        y = flat[s : s + CHUNK]
        if isinstance(domain, Image):
            if pre is None:
                pre = _image_node_data(domain, xs)
            jet = _image_jet_with(domain, pre, y)
        else:
            jet = _holomorphic_jet(domain, xs, y)
        out[s : s + CHUNK] = np.conj(np.broadcast_to(jet.derivative_at(alpha), (len(y),)))
    return out.reshape(z.shape[:-1])


def _image_node_data(domain: Image, xs: tuple):
    f = domain.map
    big = _inverse_jets(f, domain.base, xs)
    u_jet = f.jacobian_expr().jet_of(big)
    return big, u_jet.reciprocal()


def _image_jet_with(domain: Image, pre, y: np.ndarray) -> Jet:
    f = domain.map
    big, inv_u = pre
    y_pre, ok = f.invert_many(y, seed_domain=domain.base)
    if not np.all(ok):
        raise NonConvergedInverse("inverse did not converge at an evaluation point")
    u_y = f.jacobian_determinant(y_pre)
    base_jet = _holomorphic_jet(domain.base, big, y_pre)
    return (base_jet * inv_u).scale(1.0 / np.conj(u_y))


# ---------------------------------------------------------------------------
# mapped domains


def transform_kernel(f, base: Domain, zeta, omega) -> np.ndarray:
    """Kernel of ``f(base)``: ``K_B(F(zeta), F(omega)) / (u(F(zeta)) conj(u(F(omega))))``."""
    n = base.dim

    def pull(p):
        p = _points(p, n)
        x, ok = f.invert_many(p.reshape(-1, n), seed_domain=base)
        if not np.all(ok):
            raise NonConvergedInverse("inverse map did not converge")
        return x.reshape(p.shape), f.jacobian_determinant(x).reshape(p.shape[:-1])

    zf, uz = pull(zeta)
    wf, uw = pull(omega)
    return kernel_eval(base, zf, wf) / (uz * np.conj(uw))


@dataclass(frozen=True)
class BergmanKernel:
    """Kernel handle bound to a domain."""

    domain: Domain

    def __post_init__(self):
        if not _supports_kernel(self.domain):
            raise KernelUnavailable(f"no closed-form kernel for {type(self.domain).__name__}")

    def __call__(self, z, w) -> np.ndarray:
        return kernel_eval(self.domain, z, w)

    def derivative(self, z, node, alpha, method: str = "closed") -> np.ndarray:
        return kernel_derivative(self.domain, z, node, alpha, method)

    def derivative_expr(self, node, alpha) -> Expr:
        return kernel_derivative_expr(self.domain, node, alpha)


KernelHandle = BergmanKernel


def polydisc_kernel_normalizer(domain: Domain, alpha) -> complex:
    """Coefficient ``c`` with ``(z - center)^alpha = c * d^alpha_wbar K(z, center)``."""
    alpha = tuple(alpha)
    if isinstance(domain, Disc):
        k = alpha[0]
        return np.pi * domain.radius ** (2 * k + 2) / math.factorial(k + 1)
    if isinstance(domain, Product):
        return math.prod(polydisc_kernel_normalizer(f, (a,)) for f, a in zip(domain.factors, alpha))
    if isinstance(domain, Ball):
        n, m = domain.n, sum(alpha)
        return np.pi**n * domain.radius ** (2 * (n + m)) / math.factorial(n + m)
    raise KernelUnavailable(f"no center expansion for {type(domain).__name__}")


__all__ = [
    "BergmanKernel",
    "KernelHandle",
    "kernel_eval",
    "kernel_derivative",
    "kernel_derivative_expr",
    "transform_kernel",
    "in_closure",
    "factorial_multi",
]
