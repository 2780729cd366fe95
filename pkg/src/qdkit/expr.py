"""Expression trees for closed-form holomorphic functions.

The grammar covers constants, coordinates, ``+ - * /``, integer powers,
``exp``, composition, Jacobian determinants of component lists and a
straight-line antiderivative in one coordinate.  Every node evaluates on
arrays of points and lifts to jets; the JSON prefix form
(``{"exp": {"add": ["z1", "z2"]}}``) round-trips.
"""

from __future__ import annotations

import numbers
import re
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import DimensionMismatch, PoleAtCenter, PoleHit, SpecParseError
from .jets import Jet, jet_compose, jet_det

_VAR_RE = re.compile(r"^z(\d+)$")


def as_expr(x) -> "Expr":
    if isinstance(x, Expr):
        return x
    if isinstance(x, numbers.Number):
        return Const(complex(x))
    if isinstance(x, (str, dict, list)):
        return from_json(x)
    raise TypeError(f"cannot convert {type(x).__name__} to an expression")


class Expr:
    """Base class; subclasses implement ``_eval`` and ``_jet``."""

    # public API ---------------------------------------------------------
    def evaluate(self, z) -> np.ndarray:
        """Evaluate at points ``z`` of shape ``(..., n)``."""
        z = np.asarray(z, dtype=complex)
        if z.ndim == 0:
            z = z.reshape(1)
        return np.asarray(self._eval(tuple(z[..., i] for i in range(z.shape[-1]))), dtype=complex)

    def __call__(self, z) -> np.ndarray:
        return self.evaluate(z)

    def jet(self, center, order: int) -> Jet:
        """Taylor jet of order ``order`` at ``center`` (shape ``(..., n)``)."""
        center = np.asarray(center, dtype=complex)
        if center.ndim == 0:
            center = center.reshape(1)
        n = center.shape[-1]
        return self.jet_of(tuple(Jet.variable(i, center, order) for i in range(n)))

    def jet_of(self, inputs) -> Jet:
        """Jet of ``self`` composed with the given input jets."""
        return self._jet(tuple(inputs))

    def dimension(self) -> int:
        """Number of coordinates referenced (highest variable index + 1)."""
        return max((c.dimension() for c in self.children()), default=0)

    def children(self) -> tuple:
        return ()

    def to_json(self):
        raise NotImplementedError

    # operators ----------------------------------------------------------
    def __add__(self, other):
        return Add((self, as_expr(other)))

    def __radd__(self, other):
        return Add((as_expr(other), self))

    def __sub__(self, other):
        return Sub(self, as_expr(other))

    def __rsub__(self, other):
        return Sub(as_expr(other), self)

    def __mul__(self, other):
        return Mul((self, as_expr(other)))

    def __rmul__(self, other):
        return Mul((as_expr(other), self))

    def __truediv__(self, other):
        return Div(self, as_expr(other))

    def __rtruediv__(self, other):
        return Div(as_expr(other), self)

    def __neg__(self):
        return Neg(self)

    def __pow__(self, p):
        if int(p) != p:
            raise ValueError("only integer powers are supported")
        return Pow(self, int(p))

    def _eval(self, zs):
        raise NotImplementedError

    def _jet(self, inputs):
        raise NotImplementedError


def _like(zs):
    return np.broadcast_arrays(*zs)[0] if zs else np.asarray(0j)


@dataclass(frozen=True, eq=True)
class Const(Expr):
    value: complex

    def _eval(self, zs):
        return np.full(np.shape(_like(zs)), self.value, dtype=complex)

    def _jet(self, inputs):
        ref = inputs[0]
        return Jet.constant(np.full(ref.batch_shape, self.value, dtype=complex), ref.center, ref.order)

    def to_json(self):
        v = complex(self.value)
        if v.imag == 0:
            return v.real
        return {"const": [v.real, v.imag]}

    def __str__(self):
        v = complex(self.value)
        return f"{v.real:g}" if v.imag == 0 else f"({v:g})"


@dataclass(frozen=True, eq=True)
class Var(Expr):
    index: int

    def dimension(self):
        return self.index + 1

    def _check(self, seq):
        if self.index >= len(seq):
            raise DimensionMismatch(f"variable z{self.index + 1} used with {len(seq)} coordinates")

    def _eval(self, zs):
        self._check(zs)
        return zs[self.index]

    def _jet(self, inputs):
        self._check(inputs)
        return inputs[self.index]

    def to_json(self):
        return f"z{self.index + 1}"

    def __str__(self):
        return f"z{self.index + 1}"


@dataclass(frozen=True, eq=True)
class Add(Expr):
    args: tuple

    def children(self):
        return self.args

    def _eval(self, zs):
        out = self.args[0]._eval(zs)
        for a in self.args[1:]:
            out = out + a._eval(zs)
        return out

    def _jet(self, inputs):
        shift = sum((complex(a.value) for a in self.args if isinstance(a, Const)), 0j)
        jets = [a._jet(inputs) for a in self.args if not isinstance(a, Const)]
        if not jets:
            return Const(shift)._jet(inputs)
        out = jets[0]
        for j in jets[1:]:
            out = out + j
        if shift:
            coeffs = np.array(out.coeffs, copy=True)
            coeffs[(...,) + (0,) * out.n] += shift
            out = Jet._trusted(coeffs, out.center)
        return out

    def to_json(self):
        return {"add": [a.to_json() for a in self.args]}

    def __str__(self):
        return "(" + " + ".join(str(a) for a in self.args) + ")"


@dataclass(frozen=True, eq=True)
class Sub(Expr):
    left: Expr
    right: Expr

    def children(self):
        return (self.left, self.right)

    def _eval(self, zs):
        return self.left._eval(zs) - self.right._eval(zs)

    def _jet(self, inputs):
        return self.left._jet(inputs) - self.right._jet(inputs)

    def to_json(self):
        return {"sub": [self.left.to_json(), self.right.to_json()]}

    def __str__(self):
        return f"({self.left} - {self.right})"


@dataclass(frozen=True, eq=True)
class Neg(Expr):
    arg: Expr

    def children(self):
        return (self.arg,)

    def _eval(self, zs):
        return -self.arg._eval(zs)

    def _jet(self, inputs):
        return -self.arg._jet(inputs)

    def to_json(self):
        return {"neg": self.arg.to_json()}

    def __str__(self):
        return f"-{self.arg}"


@dataclass(frozen=True, eq=True)
class Mul(Expr):
    args: tuple

    def children(self):
        return self.args

    def _eval(self, zs):
        out = self.args[0]._eval(zs)
        for a in self.args[1:]:
            out = out * a._eval(zs)
        return out

    def _jet(self, inputs):
        factor = complex(np.prod([complex(a.value) for a in self.args if isinstance(a, Const)]))
        jets = [a._jet(inputs) for a in self.args if not isinstance(a, Const)]
        if not jets:
            return Const(factor)._jet(inputs)
        out = jets[0]
        for j in jets[1:]:
            out = out * j
        return out if factor == 1 else out.scale(factor)

    def to_json(self):
        return {"mul": [a.to_json() for a in self.args]}

    def __str__(self):
        return "*".join(str(a) for a in self.args)


@dataclass(frozen=True, eq=True)
class Div(Expr):
    num: Expr
    den: Expr

    def children(self):
        return (self.num, self.den)

    def _eval(self, zs):
        d = self.den._eval(zs)
        if np.any(d == 0):
            raise PoleHit(f"denominator {self.den} vanishes")
        return self.num._eval(zs) / d

    def _jet(self, inputs):
        if isinstance(self.den, Const):
            if self.den.value == 0:
                raise PoleAtCenter(f"denominator {self.den} vanishes at the expansion point")
            return self.num._jet(inputs).scale(1 / complex(self.den.value))
        d = self.den._jet(inputs)
        if np.any(d.value == 0):
            raise PoleAtCenter(f"denominator {self.den} vanishes at the expansion point")
        return self.num._jet(inputs) * d.reciprocal()

    def to_json(self):
        return {"div": [self.num.to_json(), self.den.to_json()]}

    def __str__(self):
        return f"{self.num}/{self.den}"


@dataclass(frozen=True, eq=True)
class Pow(Expr):
    base: Expr
    exponent: int

    def children(self):
        return (self.base,)

    def _eval(self, zs):
        b = self.base._eval(zs)
        if self.exponent < 0:
            if np.any(b == 0):
                raise PoleHit(f"{self.base} vanishes under a negative power")
            return 1.0 / b ** (-self.exponent)
        return b ** self.exponent

    def _jet(self, inputs):
        return self.base._jet(inputs).power(self.exponent)

    def to_json(self):
        return {"pow": [self.base.to_json(), self.exponent]}

    def __str__(self):
        return f"{self.base}^{self.exponent}"


@dataclass(frozen=True, eq=True)
class Exp(Expr):
    arg: Expr

    def children(self):
        return (self.arg,)

    def _eval(self, zs):
        return np.exp(self.arg._eval(zs))

    def _jet(self, inputs):
        return self.arg._jet(inputs).exp()

    def to_json(self):
        return {"exp": self.arg.to_json()}

    def __str__(self):
        return f"exp({self.arg})"


@dataclass(frozen=True, eq=True)
class Compose(Expr):
    """``outer(inner_1, ..., inner_m)``."""

    outer: Expr
    inner: tuple

    def children(self):
        return self.inner

    def _eval(self, zs):
        vals = np.broadcast_arrays(*[e._eval(zs) for e in self.inner])
        return self.outer._eval(tuple(vals))

    def _jet(self, inputs):
        return self.outer._jet(tuple(e._jet(inputs) for e in self.inner))

    def to_json(self):
        return {"compose": {"outer": self.outer.to_json(), "inner": [e.to_json() for e in self.inner]}}

    def __str__(self):
        return f"[{self.outer}]({', '.join(str(e) for e in self.inner)})"


def _is_identity(inputs) -> bool:
    n = len(inputs)
    for i, j in enumerate(inputs):
        if j.n != n:
            return False
        probe = Jet.variable(i, j.center, j.order)
        if probe.coeffs.shape != j.coeffs.shape or not np.array_equal(probe.coeffs, j.coeffs):
            return False
    return True


@dataclass(frozen=True, eq=True)
class JacobianDet(Expr):
    """Complex Jacobian determinant of a list of component expressions."""

    components: tuple

    def children(self):
        return self.components

    def dimension(self):
        return len(self.components)

    def _matrix_jets(self, center, order):
        n = len(self.components)
        xs = tuple(Jet.variable(i, center, order + 1) for i in range(n))
        comps = [c._jet(xs) for c in self.components]
        return [[comps[i].differentiate(j) for j in range(n)] for i in range(n)]

    def _eval(self, zs):
        n = len(self.components)
        if len(zs) != n:
            raise DimensionMismatch("Jacobian determinant needs one coordinate per component")
        center = np.stack(np.broadcast_arrays(*zs), axis=-1)
        xs = tuple(Jet.variable(i, center, 1) for i in range(n))
        comps = [c._jet(xs) for c in self.components]
        mat = np.empty(center.shape[:-1] + (n, n), dtype=complex)
        for i in range(n):
            for j in range(n):
                e = [0] * n
                e[j] = 1
                mat[..., i, j] = np.broadcast_to(comps[i].coefficient(e), center.shape[:-1])
        return np.linalg.det(mat) if n > 1 else mat[..., 0, 0]

    def _jet(self, inputs):
        n = len(self.components)
        if len(inputs) != n:
            raise DimensionMismatch("Jacobian determinant needs one coordinate per component")
        order = inputs[0].order
        if _is_identity(inputs):
            return jet_det(self._matrix_jets(inputs[0].center, order))
        center = np.stack(np.broadcast_arrays(*[j.value for j in inputs]), axis=-1)
        outer = jet_det(self._matrix_jets(center, order))
        return jet_compose(outer, inputs)

    def to_json(self):
        return {"jacdet": [c.to_json() for c in self.components]}

    def __str__(self):
        return f"det J({', '.join(str(c) for c in self.components)})"


@lru_cache(maxsize=None)
def _gauss01(nodes: int):
    x, w = leggauss(nodes)
    return (x + 1) / 2, w / 2


@dataclass(frozen=True, eq=True)
class Antiderivative(Expr):
    """``int_{lower}^{z_axis} integrand(z', tau) d tau`` along a straight segment.

    The segment integral is taken with Gauss-Legendre quadrature in the
    segment parameter, which is exact for polynomial integrands of degree
    below ``2*nodes`` and spectrally accurate otherwise.
    """

    integrand: Expr
    axis: int
    lower: Expr = field(default_factory=lambda: Const(0j))
    nodes: int = 32

    def children(self):
        return (self.integrand, self.lower)

    def dimension(self):
        return max(self.axis + 1, self.integrand.dimension(), self.lower.dimension())

    def _eval(self, zs):
        s, w = _gauss01(self.nodes)
        zs = tuple(np.broadcast_arrays(*zs))
        low = np.broadcast_to(self.lower._eval(zs), zs[0].shape)
        d = zs[self.axis] - low
        shape = (self.nodes,) + (1,) * zs[0].ndim
        path = list(np.broadcast_to(z, (self.nodes,) + z.shape) for z in zs)
        path[self.axis] = low + s.reshape(shape) * d
        vals = self.integrand._eval(tuple(path))
        vals = np.broadcast_to(vals, (self.nodes,) + zs[0].shape)
        return np.tensordot(w, vals, axes=(0, 0)) * d

    def _jet(self, inputs):
        s, w = _gauss01(self.nodes)
        low = self.lower._jet(inputs)
        d = inputs[self.axis] - low
        k = self.nodes
        path = []
        for i, j in enumerate(inputs):
            if i == self.axis:
                lead = (k,) + (1,) * len(d.batch_shape)
                path.append(low + d.scale(s.reshape(lead)))
            else:
                path.append(Jet(np.broadcast_to(j.coeffs, (k,) + j.coeffs.shape), j.center))
        g = self.integrand._jet(tuple(path))
        avg = Jet(np.tensordot(w, g.coeffs, axes=(0, 0)), d.center)
        return avg * d

    def to_json(self):
        return {
            "antiderivative": {
                "integrand": self.integrand.to_json(),
                "axis": self.axis + 1,
                "lower": self.lower.to_json(),
                "nodes": self.nodes,
            }
        }

    def __str__(self):
        return f"int_{{{self.lower}}}^{{z{self.axis + 1}}} {self.integrand}"


def var(i: int) -> Var:
    """Coordinate ``z_{i+1}`` (zero-based index)."""
    return Var(i)


def variables(n: int) -> tuple[Var, ...]:
    return tuple(Var(i) for i in range(n))


def exp(x) -> Exp:
    return Exp(as_expr(x))


def jet_lift(f, center, order: int) -> Jet:
    """Taylor jet of a closed-form expression at ``center``."""
    return as_expr(f).jet(center, order)


def _num(x) -> complex:
    if isinstance(x, list) and len(x) == 2:
        return complex(float(x[0]), float(x[1]))
    if isinstance(x, numbers.Number):
        return complex(x)
    raise SpecParseError(f"not a number: {x!r}")


def from_json(obj) -> Expr:
    """Parse the prefix JSON expression format."""
    if isinstance(obj, Expr):
        return obj
    if isinstance(obj, bool):
        raise SpecParseError("booleans are not expressions")
    if isinstance(obj, numbers.Number):
        return Const(complex(obj))
    if isinstance(obj, str):
        m = _VAR_RE.match(obj.strip())
        if m:
            idx = int(m.group(1))
            if idx < 1:
                raise SpecParseError("variables are numbered from z1")
            return Var(idx - 1)
        try:
            return Const(complex(obj.replace(" ", "")))
        except ValueError as exc:
            raise SpecParseError(f"unknown token {obj!r}") from exc
    if not isinstance(obj, dict) or len(obj) != 1:
        raise SpecParseError(f"expression node must be a one-key object, got {obj!r}")
    (op, arg), = obj.items()
    try:
        if op == "const":
            return Const(_num(arg))
        if op == "add":
            return Add(tuple(from_json(a) for a in arg))
        if op == "mul":
            return Mul(tuple(from_json(a) for a in arg))
        if op == "sub":
            a, b = arg
            return Sub(from_json(a), from_json(b))
        if op == "neg":
            return Neg(from_json(arg))
        if op == "div":
            a, b = arg
            return Div(from_json(a), from_json(b))
        if op == "pow":
            a, p = arg
            if int(p) != p:
                raise SpecParseError("pow exponent must be an integer")
            return Pow(from_json(a), int(p))
        if op == "exp":
            return Exp(from_json(arg))
        if op == "compose":
            return Compose(from_json(arg["outer"]), tuple(from_json(e) for e in arg["inner"]))
        if op == "jacdet":
            return JacobianDet(tuple(from_json(e) for e in arg))
        if op == "antiderivative":
            return Antiderivative(
                from_json(arg["integrand"]),
                int(arg["axis"]) - 1,
                from_json(arg.get("lower", 0)),
                int(arg.get("nodes", 32)),
            )
    except (TypeError, KeyError, ValueError) as exc:
        if isinstance(exc, SpecParseError):
            raise
        raise SpecParseError(f"malformed {op!r} node: {arg!r}") from exc
    raise SpecParseError(f"unknown operator {op!r}")
