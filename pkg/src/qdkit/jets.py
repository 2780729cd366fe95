"""Truncated multivariate power series (jets) with batched coefficients.

A jet of order ``N`` in ``n`` variables stores the Taylor coefficients
``a[alpha]`` for ``|alpha| <= N`` in a dense array of shape
``batch + (N+1,)*n``.  Entries outside the simplex are kept at zero.  The
leading ``batch`` axes let one jet carry many expansions at once, which is
how kernel derivatives and Jacobians are evaluated on whole grids.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

from .errors import CenterChainMismatch, CenterMismatch, OrderExceeded, PoleAtCenter

DEFAULT_ORDER = 8
CENTER_TOL = 1e-12


@lru_cache(maxsize=None)
def multi_indices(n: int, order: int) -> tuple[tuple[int, ...], ...]:
    """All multi-indices with ``|alpha| <= order``, graded then descending lex."""
    out = []
    for deg in range(order + 1):
        level = [a for a in itertools.product(range(deg + 1), repeat=n) if sum(a) == deg]
        out.extend(sorted(level, reverse=True))
    return tuple(out)


@lru_cache(maxsize=None)
def simplex_mask(n: int, order: int) -> np.ndarray:
    grids = np.indices((order + 1,) * n)
    mask = grids.sum(axis=0) <= order
    mask.setflags(write=False)
    return mask


def factorial_multi(alpha) -> int:
    return math.prod(math.factorial(a) for a in alpha)


def _centers_agree(a: np.ndarray, b: np.ndarray, tol: float = CENTER_TOL) -> bool:
    a, b = np.broadcast_arrays(a, b)
    scale = np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
    return bool(np.all(np.abs(a - b) <= tol * scale))


class Jet:
    """Truncated Taylor expansion ``sum_alpha a[alpha] (z - center)^alpha``.

    Parameters
    ----------
    coeffs : array_like
        Complex array of shape ``batch + (N+1,)*n``.
    center : array_like
        Expansion point(s), shape ``(n,)`` or broadcastable ``batch + (n,)``.
    """

    __slots__ = ("coeffs", "center", "order", "n")

    def __init__(self, coeffs, center):
        center = np.asarray(center, dtype=complex)
        if center.ndim == 0:
            center = center.reshape(1)
        n = center.shape[-1]
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.ndim < n:
            raise ValueError("coefficient array has fewer axes than variables")
        order = coeffs.shape[-1] - 1
        if coeffs.shape[coeffs.ndim - n:] != (order + 1,) * n:
            raise ValueError(f"coefficient trailing shape {coeffs.shape[-n:]} is not a cube")
        self.coeffs = np.where(simplex_mask(n, order), coeffs, 0)
        self.center = center
        self.order = order
        self.n = n

    @classmethod
    def _trusted(cls, coeffs: np.ndarray, center: np.ndarray) -> "Jet":
        """Wrap coefficients already zero outside the simplex, skipping validation."""
        j = object.__new__(cls)
        j.coeffs = coeffs
        j.center = center
        j.order = coeffs.shape[-1] - 1
        j.n = center.shape[-1]
        return j

    # construction -------------------------------------------------------
    @classmethod
    def constant(cls, value, center, order: int) -> "Jet":
        center = np.atleast_1d(np.asarray(center, dtype=complex))
        n = center.shape[-1]
        value = np.asarray(value, dtype=complex)
        coeffs = np.zeros(value.shape + (order + 1,) * n, dtype=complex)
        coeffs[(...,) + (0,) * n] = value
        return cls(coeffs, center)

    @classmethod
    def variable(cls, index: int, center, order: int) -> "Jet":
        """Jet of the coordinate function ``z_index``."""
        center = np.atleast_1d(np.asarray(center, dtype=complex))
        n = center.shape[-1]
        value = center[..., index]
        coeffs = np.zeros(value.shape + (order + 1,) * n, dtype=complex)
        coeffs[(...,) + (0,) * n] = value
        if order >= 1:
            e = [0] * n
            e[index] = 1
            coeffs[(...,) + tuple(e)] = 1.0
        return cls(coeffs, center)

    @classmethod
    def from_dict(cls, terms: dict, center, order: int) -> "Jet":
        center = np.atleast_1d(np.asarray(center, dtype=complex))
        n = center.shape[-1]
        coeffs = np.zeros((order + 1,) * n, dtype=complex)
        for alpha, c in terms.items():
            alpha = tuple(alpha) if np.ndim(alpha) else (int(alpha),)
            if sum(alpha) > order:
                raise OrderExceeded(f"|alpha|={sum(alpha)} exceeds order {order}")
            coeffs[alpha] = c
        return cls(coeffs, center)

    # inspection ---------------------------------------------------------
    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[: self.coeffs.ndim - self.n]

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[(...,) + (0,) * self.n]

    def coefficient(self, alpha) -> np.ndarray:
        alpha = tuple(alpha)
        if len(alpha) != self.n:
            raise ValueError("multi-index length differs from jet dimension")
        if sum(alpha) > self.order:
            raise OrderExceeded(f"|alpha|={sum(alpha)} exceeds order {self.order}")
        return self.coeffs[(...,) + alpha]

    def derivative_at(self, alpha) -> np.ndarray:
        """``alpha! * coefficient(alpha)``, the partial derivative at the center."""
        return factorial_multi(alpha) * self.coefficient(alpha)

    def to_dict(self) -> dict:
        if self.batch_shape:
            raise ValueError("to_dict requires an unbatched jet")
        return {a: complex(self.coeffs[a]) for a in multi_indices(self.n, self.order)}

    def __repr__(self) -> str:
        return f"Jet(n={self.n}, order={self.order}, batch={self.batch_shape})"

    # algebra ------------------------------------------------------------
    def truncate(self, order: int) -> "Jet":
        if order >= self.order:
            return self
        sl = (...,) + (slice(0, order + 1),) * self.n
        return Jet._trusted(self.coeffs[sl], self.center)

    def _align(self, other: "Jet", err=CenterMismatch) -> tuple[np.ndarray, np.ndarray, int, np.ndarray]:
        if other.n != self.n:
            raise ValueError("jets have different dimensions")
        if not _centers_agree(self.center, other.center):
            raise err("jets are expanded at different centers")
        order = min(self.order, other.order)
        a = self.truncate(order).coeffs
        b = other.truncate(order).coeffs
        center = self.center if self.center.ndim >= other.center.ndim else other.center
        return a, b, order, center

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, self.center, self.order)

    def __add__(self, other) -> "Jet":
        other = self._coerce(other)
        a, b, _, center = self._align(other)
        return Jet._trusted(a + b, center)

    __radd__ = __add__

    def __neg__(self) -> "Jet":
        return Jet._trusted(-self.coeffs, self.center)

    def __sub__(self, other) -> "Jet":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Jet":
        return self._coerce(other) - self

    def scale(self, factor) -> "Jet":
        factor = np.asarray(factor, dtype=complex)
        return Jet._trusted(factor[(...,) + (None,) * self.n] * self.coeffs, self.center)

    def __mul__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            return self.scale(other)
        a, b, order, center = self._align(other)
        return Jet._trusted(_cauchy_product(a, b, self.n, order), center)

    def __rmul__(self, other) -> "Jet":
        return self.scale(other)

    def __truediv__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            return self.scale(1.0 / np.asarray(other, dtype=complex))
        return self * other.reciprocal()

    def __rtruediv__(self, other) -> "Jet":
        return self.reciprocal().scale(other)

    def __pow__(self, p: int) -> "Jet":
        return self.power(p)

    def _series(self, coefs: list) -> "Jet":
        """Evaluate ``sum_k coefs[k] h^k`` with ``h = self - value``."""
        h = Jet(self.coeffs.copy(), self.center)
        h.coeffs[(...,) + (0,) * self.n] = 0
        res = Jet.constant(coefs[-1], self.center, self.order)
        for c in reversed(coefs[:-1]):
            res = res * h + Jet.constant(c, self.center, self.order)
        return res

    def power(self, p: int) -> "Jet":
        p = int(p)
        if p >= 0:
            result = Jet.constant(np.ones(self.batch_shape), self.center, self.order)
            base = self
            while p:
                if p & 1:
                    result = result * base
                p >>= 1
                if p:
                    base = base * base
            return result
        a0 = self.value
        if np.any(a0 == 0):
            raise PoleAtCenter("negative power of a jet with zero constant term")
        coefs = [_binom(p, k) * a0 ** (p - k) for k in range(self.order + 1)]
        return self._series(coefs)

    def reciprocal(self) -> "Jet":
        return self.power(-1)

    def exp(self) -> "Jet":
        e0 = np.exp(self.value)
        coefs = [e0 / math.factorial(k) for k in range(self.order + 1)]
        return self._series(coefs)

    def differentiate(self, axis: int) -> "Jet":
        """Jet of ``d/dz_axis``; the order drops by one."""
        if self.order == 0:
            raise OrderExceeded("cannot differentiate an order-0 jet")
        n, N = self.n, self.order
        sl = [slice(0, N)] * n
        sl[axis] = slice(1, N + 1)
        c = self.coeffs[(...,) + tuple(sl)]
        shape = [1] * n
        shape[axis] = N
        c = c * np.arange(1, N + 1).reshape(shape)
        return Jet._trusted(c, self.center)


def _binom(p: int, k: int) -> float:
    out = 1.0
    for i in range(k):
        out *= (p - i) / (i + 1)
    return out


def _cauchy_product(a: np.ndarray, b: np.ndarray, n: int, order: int) -> np.ndarray:
    shape = np.broadcast_shapes(a.shape, b.shape)
    out = np.zeros(shape, dtype=complex)
    pad = (None,) * n
    for alpha in multi_indices(n, order):
        ca = a[(...,) + alpha]
        if not np.any(ca):
            continue
        dst = (...,) + tuple(slice(ai, order + 1) for ai in alpha)
        src = (...,) + tuple(slice(0, order + 1 - ai) for ai in alpha)
        out[dst] += ca[(...,) + pad] * b[src]
    out *= simplex_mask(n, order)
    return out


def jet_multiply(a: Jet, b: Jet) -> Jet:
    return a * b


def derivative_at(j: Jet, alpha) -> np.ndarray:
    return j.derivative_at(alpha)


def jet_compose(outer: Jet, inner) -> Jet:
    """Compose ``outer`` (expanded at ``b``) with inner jets whose values are ``b``.

    Horner evaluation in the truncated algebra, one outer variable at a time.
    """
    inner = list(inner)
    if len(inner) != outer.n:
        raise ValueError(f"outer jet has {outer.n} variables, got {len(inner)} inner jets")
    c = inner[0].center
    for j in inner[1:]:
        if not _centers_agree(j.center, c):
            raise CenterMismatch("inner jets are expanded at different centers")
    values = np.stack(np.broadcast_arrays(*[j.value for j in inner]), axis=-1)
    if not _centers_agree(values, outer.center):
        raise CenterChainMismatch("inner constant terms differ from the outer center")
    order = min([outer.order] + [j.order for j in inner])
    hs = []
    for j in inner:
        h = j.truncate(order)
        coeffs = h.coeffs.copy()
        coeffs[(...,) + (0,) * h.n] = 0
        hs.append(Jet(coeffs, h.center))
    coeffs = outer.truncate(order).coeffs
    return _horner(coeffs, hs, order, hs[0].center, inner[0].n)


def _horner(C: np.ndarray, hs: list, order: int, center, n: int) -> Jet:
    k = len(hs)
    if k == 0:
        return Jet.constant(C, center, order)
    res = None
    rest = (slice(None),) * (k - 1)
    for j in range(order, -1, -1):
        sub = C[(...,) + (j,) + rest]
        sub_jet = _horner(sub, hs[1:], order, center, n)
        res = sub_jet if res is None else res * hs[0] + sub_jet
    return res


def jet_det(matrix) -> Jet:
    """Determinant of a square matrix of jets (Leibniz expansion, n <= 3 in practice)."""
    m = len(matrix)
    total = None
    for perm in itertools.permutations(range(m)):
        sign = _perm_sign(perm)
        term = matrix[0][perm[0]]
        for i in range(1, m):
            term = term * matrix[i][perm[i]]
        term = term if sign > 0 else -term
        total = term if total is None else total + term
    return total


def _perm_sign(perm) -> int:
    sign = 1
    perm = list(perm)
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign
