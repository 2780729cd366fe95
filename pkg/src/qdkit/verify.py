"""Numerical integration and verification of quadrature identities.

Tensor rules are Gauss-Legendre in the radial direction times the
trapezoid rule in angle (exact for holomorphic polynomials below the
angular order).  Balls use a collapsed simplex in ``t_i = |z_i|^2``.
Image domains are integrated by pulling back with weight ``|u|^2`` or, as
an independent route, by direct quasi-Monte-Carlo sampling of the image
with membership decided by inverting the map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.stats import qmc

from .errors import SchemeVolumeMismatch
from .expr import Exp, Expr, Pow, Var, as_expr
from .geometry import Ball, Disc, Domain, Image, Product, sample_interior
from .jets import multi_indices
from .maps import HolomorphicMap
from .span import MembershipConfig, MembershipTrace, membership_residual
from .transport import QuadratureIdentity

VOLUME_TOL = 1e-6
RELATIVE_FLOOR = 1e-8
CHUNK = 1 << 16


@dataclass(frozen=True)
class IntegrationScheme:
    """How to integrate over a domain.

    ``kind`` is ``"tensor-gauss"`` or ``"quasi-monte-carlo"``.  ``radial``
    and ``angular`` are per-factor orders; ``None`` picks a default based on
    the dimension.  For image domains the tensor kind pulls back to the base
    and the QMC kind samples the image directly unless ``pullback`` is set.
    """

    kind: str = "tensor-gauss"
    radial: int | None = None
    angular: int | None = None
    samples: int = 1 << 20
    seed: int = 0
    pullback: bool = False

    def orders(self, dim: int) -> tuple[int, int]:
        if dim == 1:
            return self.radial or 64, self.angular or 64
        return self.radial or 24, self.angular or 40

    def doubled(self, dim: int) -> "IntegrationScheme":
        r, a = self.orders(dim)
        return IntegrationScheme(self.kind, 2 * r, 2 * a, 2 * self.samples, self.seed, self.pullback)

    def to_json(self) -> dict:
        return {"kind": self.kind, "radial": self.radial, "angular": self.angular,
                "samples": self.samples, "seed": self.seed, "pullback": self.pullback}


# rules ----------------------------------------------------------------------

def _disc_rule(disc: Disc, radial: int, angular: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(radial)
    rho = 0.5 * disc.radius * (x + 1)
    wr = 0.5 * disc.radius * w * rho
    theta = 2 * np.pi * np.arange(angular) / angular
    pts = disc.center + (rho[:, None] * np.exp(1j * theta[None, :])).ravel()
    wts = np.repeat(wr, angular) * (2 * np.pi / angular)
    return pts[:, None], wts


def _tensor_product(rules: list) -> tuple[np.ndarray, np.ndarray]:
    pts, wts = rules[0]
    for p, w in rules[1:]:
        pts = np.concatenate([np.repeat(pts, len(p), axis=0), np.tile(p, (len(pts), 1))], axis=1)
        wts = np.outer(wts, w).ravel()
    return pts, wts


def _ball_rule(ball: Ball, radial: int, angular: int) -> tuple[np.ndarray, np.ndarray]:
    n = ball.n
    x, w = np.polynomial.legendre.leggauss(radial)
    s, ws = 0.5 * (x + 1), 0.5 * w
    grids = np.meshgrid(*([s] * n), indexing="ij")
    wgrid = np.ones_like(grids[0])
    for g in np.meshgrid(*([ws] * n), indexing="ij"):
        wgrid = wgrid * g
    t = np.empty(grids[0].shape + (n,))
    remaining = np.ones_like(grids[0])
    for k in range(n):
        t[..., k] = grids[k] * remaining
        wgrid = wgrid * remaining
        remaining = remaining * (1 - grids[k])
    t = t.reshape(-1, n)
    wt = wgrid.ravel() * 0.5**n * ball.radius ** (2 * n)
    theta = 2 * np.pi * np.arange(angular) / angular
    phases = np.stack(np.meshgrid(*([theta] * n), indexing="ij"), axis=-1).reshape(-1, n)
    wphase = (2 * np.pi / angular) ** n
    mod = ball.radius * np.sqrt(t)
    pts = np.asarray(ball.center) + (mod[:, None, :] * np.exp(1j * phases[None, :, :])).reshape(-1, n)
    wts = np.repeat(wt, len(phases)) * wphase
    return pts, wts


def _pullback(image: Image, pts: np.ndarray, wts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    f: HolomorphicMap = image.map
    out = np.empty_like(pts)
    weights = np.empty_like(wts)
    for lo in range(0, len(pts), CHUNK):
        chunk = pts[lo:lo + CHUNK]
        out[lo:lo + CHUNK] = f.evaluate(chunk)
        weights[lo:lo + CHUNK] = wts[lo:lo + CHUNK] * np.abs(f.jacobian_determinant(chunk)) ** 2
    return out, weights


@lru_cache(maxsize=8)
def tensor_rule(domain: Domain, radial: int, angular: int) -> tuple[np.ndarray, np.ndarray]:
    """Points ``(N, n)`` and weights ``(N,)`` of the tensor rule on ``domain``."""
    if isinstance(domain, Image):
        pts, wts = tensor_rule(domain.base, radial, angular)
        return _pullback(domain, pts, wts)
    if isinstance(domain, Disc):
        pts, wts = _disc_rule(domain, radial, angular)
    elif isinstance(domain, Product):
        rules = []
        for fac in domain.factors:
            if not isinstance(fac, Disc):
                raise NotImplementedError("tensor rules need disc factors")
            rules.append(_disc_rule(fac, radial, angular))
        pts, wts = _tensor_product(rules)
    elif isinstance(domain, Ball):
        pts, wts = _ball_rule(domain, radial, angular)
    else:
        raise NotImplementedError(f"no tensor rule for {type(domain).__name__}")
    vol = domain.volume()
    if abs(wts.sum() - vol) > VOLUME_TOL * vol:
        raise SchemeVolumeMismatch(f"weights sum to {wts.sum():.12g}, volume is {vol:.12g}")
    return pts, wts


@lru_cache(maxsize=4)
def qmc_rule(domain: Domain, samples: int, seed: int, pullback: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Equal-weight quasi-random rule; image domains are sampled directly."""
    if isinstance(domain, Image):
        if pullback:
            pts, wts = qmc_rule(domain.base, samples, seed)
            return _pullback(domain, pts, wts)
        return stratified_image_sample(domain, samples, seed)
    pts = sample_interior(domain, "quasi-random", samples, seed=seed)
    return pts, np.full(len(pts), domain.volume() / len(pts))


def _cell_boxes(pilot: np.ndarray, grid: int, pad: float):
    """Stratify the last coordinate plane and bound the others per cell."""
    n = pilot.shape[1]
    last = pilot[:, -1]
    lo = np.array([last.real.min(), last.imag.min()])
    hi = np.array([last.real.max(), last.imag.max()])
    span = hi - lo
    lo, hi = lo - 0.02 * span - 1e-9, hi + 0.02 * span + 1e-9
    size = (hi - lo) / grid
    ij = np.floor((np.stack([last.real, last.imag], axis=-1) - lo) / size).astype(int)
    ij = np.clip(ij, 0, grid - 1)
    rest = np.concatenate([pilot[:, :-1].real, pilot[:, :-1].imag], axis=-1)
    floor = rest.max(axis=0) - rest.min(axis=0) if n > 1 else None
    occupied = {}
    for k, key in enumerate(map(tuple, ij)):
        occupied.setdefault(key, []).append(k)
    boxes = []
    for i in range(grid):
        for j in range(grid):
            idx = [k for di in (-1, 0, 1) for dj in (-1, 0, 1) for k in occupied.get((i + di, j + dj), [])]
            if not idx:
                continue
            cell_lo = lo + size * np.array([i, j])
            if n == 1:
                boxes.append((cell_lo, cell_lo + size))
                continue
            r = rest[idx]
            rlo, rhi = r.min(axis=0), r.max(axis=0)
            ext = np.maximum(rhi - rlo, 0.02 * floor)
            boxes.append((np.concatenate([rlo - pad * ext, cell_lo]), np.concatenate([rhi + pad * ext, cell_lo + size])))
    return boxes


def _to_complex(x: np.ndarray, n: int) -> np.ndarray:
    """Real box coordinates (other re, other im, last re, last im) to complex points."""
    if n == 1:
        return (x[:, 0] + 1j * x[:, 1])[:, None]
    m = n - 1
    other = x[:, :m] + 1j * x[:, m:2 * m]
    last = x[:, 2 * m] + 1j * x[:, 2 * m + 1]
    return np.concatenate([other, last[:, None]], axis=1)


def _membership(domain: Image, z: np.ndarray) -> np.ndarray:
    inside = np.zeros(len(z), dtype=bool)
    for s in range(0, len(z), CHUNK):
        pre, conv = domain.map.invert_many(z[s:s + CHUNK], seed_domain=domain.base)
        inside[s:s + CHUNK] = conv & domain.base.contains_many(pre)
    return inside


def _split(lo: np.ndarray, hi: np.ndarray, dims: list, parts: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sub-boxes of ``[lo, hi]`` cut ``parts`` times along ``dims``, with their grid indices."""
    grid = np.stack(np.meshgrid(*([np.arange(parts)] * len(dims)), indexing="ij"), axis=-1).reshape(-1, len(dims))
    L = np.tile(lo, (len(grid), 1))
    H = np.tile(hi, (len(grid), 1))
    step = (hi[dims] - lo[dims]) / parts
    L[:, dims] = lo[dims] + grid * step
    H[:, dims] = L[:, dims] + step
    return L, H, grid


def _shifted_points(L: np.ndarray, H: np.ndarray, m: int, rng) -> np.ndarray:
    """``2^m`` randomly shifted Sobol points in each box ``[L_i, H_i]``."""
    d = L.shape[1]
    pattern = qmc.Sobol(d, scramble=True, seed=rng).random_base2(m)
    shifts = rng.random((len(L), 1, d))
    u = (pattern[None] + shifts) % 1.0
    return L[:, None, :] + (H - L)[:, None, :] * u


def _bisect(L: np.ndarray, H: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split every box in half along each real dimension."""
    d = L.shape[1]
    corners = np.array(np.meshgrid(*([[0, 1]] * d), indexing="ij")).reshape(d, -1).T
    half = 0.5 * (H - L)
    Lc = (L[:, None, :] + corners[None] * half[:, None, :]).reshape(-1, d)
    return Lc, Lc + np.repeat(half, len(corners), axis=0)


def stratified_image_sample(domain: Image, samples: int, seed: int = 0, grid: int = 16, parts: int = 4,
                            pilot: int = 1 << 18, pad: float = 0.15, attempts: int = 6, levels: int | None = None):
    """Direct quasi-random sampling of ``f(B)`` by stratified box rejection.

    The last coordinate plane is cut into ``grid x grid`` cells; for each
    cell the remaining coordinates are bounded by forward images of a pilot
    sample, and the cell box is split into sub-boxes.  Sub-boxes cut by the
    boundary are bisected recursively, using small classification runs.  A
    fresh final sample is then spread over all leaves, weighted towards
    boundary leaves; every leaf keeps a share so the estimate is unbiased.
    Membership of every candidate is decided by inverting the map.  A cell
    whose accepted points reach the outer band of its box is widened.
    """
    n = domain.dim
    d = 2 * n
    rng = np.random.default_rng(seed)
    base_pts = sample_interior(domain.base, "quasi-random", pilot, seed=seed + 7919)
    boxes = _cell_boxes(domain.map.evaluate(base_pts), grid, pad)
    k = 2 * (n - 1)
    dims = list(range(k)) if k else [0, 1]
    m1 = 4
    L_all, H_all, in_all = [], [], []
    for lo, hi in boxes:
        for attempt in range(attempts + 1):
            L, H, _ = _split(lo, hi, dims, parts)
            x = _shifted_points(L, H, m1, rng)
            inside = _membership(domain, _to_complex(x.reshape(-1, d), n)).reshape(x.shape[:2])
            if k == 0 or not np.any(inside):
                break
            band = 0.05 * (hi[:k] - lo[:k])
            xi = x[inside][:, :k]
            low = np.any(xi < lo[:k] + band, axis=0)
            high = np.any(xi > hi[:k] - band, axis=0)
            if not (np.any(low) or np.any(high)):
                break
            if attempt == attempts:
                raise RuntimeError("bounding box does not cover the image after widening")
            width = hi[:k] - lo[:k]
            lo, hi = lo.copy(), hi.copy()
            lo[:k] -= np.where(low, 0.5 * width, 0)
            hi[:k] += np.where(high, 0.5 * width, 0)
        L_all.append(L)
        H_all.append(H)
        in_all.append(inside)
    L, H = np.concatenate(L_all), np.concatenate(H_all)
    hits = np.concatenate(in_all).sum(axis=1)
    mixed = (hits > 0) & (hits < 1 << m1)
    children = 1 << d
    if levels is None:
        levels = 0
        count = int(mixed.sum())
        while count * children * 8 * 4 <= samples and levels < 4:
            levels += 1
            count *= children // 2
    leaves_L, leaves_H, leaves_kind = [L[~mixed]], [H[~mixed]], [np.where(hits[~mixed] > 0, 1, 0)]
    for _ in range(levels):
        L, H = _bisect(L[mixed], H[mixed])
        x = _shifted_points(L, H, 3, rng)
        inside = _membership(domain, _to_complex(x.reshape(-1, d), n)).reshape(x.shape[:2])
        hits = inside.sum(axis=1)
        mixed = (hits > 0) & (hits < 8)
        leaves_L.append(L[~mixed])
        leaves_H.append(H[~mixed])
        leaves_kind.append(np.where(hits[~mixed] > 0, 1, 0))
    leaves_L.append(L[mixed])
    leaves_H.append(H[mixed])
    leaves_kind.append(np.full(int(mixed.sum()), 2))
    L, H, kind = np.concatenate(leaves_L), np.concatenate(leaves_H), np.concatenate(leaves_kind)
    vol = np.prod(H - L, axis=1)
    weight = vol * np.array([0.25, 1.0, 4.0])[kind]
    share = samples * weight / weight.sum()
    m = np.clip(np.round(np.log2(np.maximum(share, 1))).astype(int), 2, None)
    pts_out, w_out = [], []
    for mm in sorted(set(m.tolist())):
        sel = np.flatnonzero(m == mm)
        x = _shifted_points(L[sel], H[sel], mm, rng)
        inside = _membership(domain, _to_complex(x.reshape(-1, d), n)).reshape(x.shape[:2])
        w = np.broadcast_to((vol[sel] / (1 << mm))[:, None], inside.shape)
        pts_out.append(_to_complex(x[inside], n))
        w_out.append(w[inside])
    return np.concatenate(pts_out), np.concatenate(w_out)


def rule_for(domain: Domain, scheme: IntegrationScheme | None = None) -> tuple[np.ndarray, np.ndarray]:
    scheme = scheme or IntegrationScheme()
    if scheme.kind == "tensor-gauss":
        return tensor_rule(domain, *scheme.orders(domain.dim))
    if scheme.kind == "quasi-monte-carlo":
        return qmc_rule(domain, scheme.samples, scheme.seed, scheme.pullback)
    raise ValueError(f"unknown scheme kind {scheme.kind!r}")


def _values(f, pts: np.ndarray) -> np.ndarray:
    out = np.empty(len(pts), dtype=complex)
    for lo in range(0, len(pts), CHUNK):
        chunk = pts[lo:lo + CHUNK]
        v = f.evaluate(chunk) if isinstance(f, Expr) else f(chunk)
        out[lo:lo + CHUNK] = np.broadcast_to(v, (len(chunk),))
    return out


def integrate(domain: Domain, f, scheme: IntegrationScheme | None = None) -> complex:
    """``int_domain f dV`` for an expression or a vectorized callable."""
    pts, wts = rule_for(domain, scheme)
    return complex(np.dot(wts, _values(f, pts)))


# identity verification ---------------------------------------------------------

def monomial_tests(dim: int, degree: int) -> list[tuple[str, Expr]]:
    """Holomorphic monomials ``z^beta`` with ``|beta| <= degree``."""
    tests = []
    for beta in multi_indices(dim, degree):
        factors = [Pow(Var(i), b) if b > 1 else Var(i) for i, b in enumerate(beta) if b]
        if not factors:
            e = as_expr(1.0)
        elif len(factors) == 1:
            e = factors[0]
        else:
            e = factors[0]
            for fac in factors[1:]:
                e = e * fac
        tests.append(("z^" + ",".join(map(str, beta)), e))
    return tests


def qmc_tests(dim: int) -> list[tuple[str, Expr]]:
    """Low-degree test functions for sampling-based checks: ``1``, ``1 + z_i`` and ``exp(z_n)``.

    Each is nonzero at generic nodes, so residuals are relative and sampling
    noise is compared with the size of the integral rather than with zero.
    """
    tests = [("1", as_expr(1.0))]
    tests += [(f"1+z{i + 1}", as_expr(1.0) + Var(i)) for i in range(dim)]
    tests.append((f"exp(z{dim})", Exp(Var(dim - 1))))
    return tests


@dataclass
class VerificationRow:
    label: str
    integral: complex
    predicted: complex
    residual: float
    relative: bool

    def to_json(self) -> dict:
        return {"test": self.label, "integral": [self.integral.real, self.integral.imag],
                "predicted": [self.predicted.real, self.predicted.imag],
                "residual": self.residual, "relative": self.relative}


@dataclass
class VerificationReport:
    rows: list
    tol: float
    scheme: IntegrationScheme
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = bool(self.rows) and self.max_residual < self.tol

    @property
    def max_residual(self) -> float:
        return max((r.residual for r in self.rows), default=math.inf)

    def to_json(self) -> dict:
        return {"passed": self.passed, "tol": self.tol, "max_residual": self.max_residual,
                "scheme": self.scheme.to_json(), "rows": [r.to_json() for r in self.rows]}


def residual(integral: complex, predicted: complex) -> tuple[float, bool]:
    """Relative error when the predicted value is non-negligible, absolute otherwise.

    The exact side decides the mode so that sampling noise around a zero
    integral is not divided by itself.
    """
    err = abs(integral - predicted)
    if abs(predicted) > RELATIVE_FLOOR:
        return err / abs(predicted), True
    return err, False


def verify_identity(identity: QuadratureIdentity, tests=8, scheme: IntegrationScheme | None = None,
                    tol: float = 1e-8) -> VerificationReport:
    """Compare ``int h`` with the identity on monomials of degree ``<= tests`` or an explicit list."""
    scheme = scheme or IntegrationScheme()
    domain = identity.domain
    if isinstance(tests, int):
        cases = monomial_tests(domain.dim, tests)
    else:
        cases = [(t[0], as_expr(t[1])) if isinstance(t, tuple) else (str(t), as_expr(t)) for t in tests]
    pts, wts = rule_for(domain, scheme)
    rows = []
    for label, g in cases:
        integral = complex(np.dot(wts, _values(g, pts)))
        predicted = identity.apply(g)
        res, rel = residual(integral, predicted)
        rows.append(VerificationRow(label, integral, predicted, res, rel))
    return VerificationReport(rows, tol, scheme)


# reproducing property -------------------------------------------------------------

def inner_points(domain: Domain, count: int, seed: int = 0, shrink: float = 0.5) -> np.ndarray:
    """Quasi-random points of the domain pulled towards its center by ``shrink``."""
    if isinstance(domain, Image):
        return domain.map.evaluate(inner_points(domain.base, count, seed, shrink))
    c = domain.center_point()
    return c + shrink * (sample_interior(domain, "quasi-random", count, seed=seed) - c)


def reproducing_check(domain: Domain, points=None, degree: int = 8, count: int = 20, seed: int = 0,
                      scheme: IntegrationScheme | None = None) -> dict:
    """``max |int p(w) K(z, w) dV(w) - p(z)| / max(1, |p(z)|)`` over monomials ``p``."""
    from .kernels import kernel_eval

    z = inner_points(domain, count, seed) if points is None else np.asarray(points, dtype=complex)
    tests = monomial_tests(domain.dim, degree)
    pts, wts = rule_for(domain, scheme)
    acc = np.zeros((len(z), len(tests)), dtype=complex)
    for lo in range(0, len(pts), CHUNK):
        chunk = pts[lo:lo + CHUNK]
        kern = kernel_eval(domain, z[:, None, :], chunk[None, :, :]) * wts[lo:lo + CHUNK]
        vals = np.stack([np.broadcast_to(g.evaluate(chunk), (len(chunk),)) for _, g in tests], axis=1)
        acc += kern @ vals
    exact = np.stack([np.broadcast_to(g.evaluate(z), (len(z),)) for _, g in tests], axis=1)
    res = np.abs(acc - exact) / np.maximum(1.0, np.abs(exact))
    return {"max_residual": float(res.max()), "points": len(z), "degree": degree, "tests": len(tests)}


# QDP table ------------------------------------------------------------------------

@dataclass
class QDPRow:
    alpha: tuple
    trace: MembershipTrace
    expected: str | None = None

    @property
    def verdict(self) -> str:
        return self.trace.verdict

    @property
    def matches(self) -> bool:
        return self.expected is None or self.expected == self.verdict

    def to_json(self) -> dict:
        out = {"alpha": list(self.alpha), "verdict": self.verdict, "trace": self.trace.to_json()}
        if self.expected is not None:
            out["expected"] = self.expected
        return out


@dataclass
class QDPTable:
    rows: list

    @property
    def all_in_span(self) -> bool:
        return all(r.verdict == "in_span" for r in self.rows)

    @property
    def matches_expectations(self) -> bool:
        return all(r.matches for r in self.rows)

    def row(self, alpha) -> QDPRow:
        for r in self.rows:
            if r.alpha == tuple(alpha):
                return r
        raise KeyError(alpha)

    def to_json(self) -> dict:
        return {"all_in_span": self.all_in_span, "rows": [r.to_json() for r in self.rows]}


def qdp_candidate(f: HolomorphicMap, alpha) -> Expr:
    """``u * f^alpha``."""
    e = f.jacobian_expr()
    for comp, a in zip(f.components, alpha):
        if a:
            e = e * (comp if a == 1 else Pow(comp, a))
    return e


def qdp_check(f: HolomorphicMap, domain: Domain, max_degree: int = 3, alphas=None,
              expected: dict | None = None, node_grid=None, config: MembershipConfig | None = None) -> QDPTable:
    """Membership of ``u * f^alpha`` in the finite span for each ``alpha``."""
    alphas = list(alphas) if alphas is not None else multi_indices(domain.dim, max_degree)
    expected = expected or {}
    rows = []
    for alpha in alphas:
        alpha = tuple(alpha)
        trace = membership_residual(qdp_candidate(f, alpha), domain, node_grid=node_grid, config=config)
        rows.append(QDPRow(alpha, trace, expected.get(alpha)))
    return QDPTable(rows)


__all__ = [
    "IntegrationScheme",
    "QDPRow",
    "QDPTable",
    "VerificationReport",
    "VerificationRow",
    "inner_points",
    "integrate",
    "monomial_tests",
    "qdp_candidate",
    "qdp_check",
    "qmc_rule",
    "qmc_tests",
    "reproducing_check",
    "residual",
    "rule_for",
    "stratified_image_sample",
    "tensor_rule",
    "verify_identity",
]
