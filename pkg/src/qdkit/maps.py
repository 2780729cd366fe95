"""Closed-form holomorphic maps: evaluation, Jacobians, inversion, injectivity scans."""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import cKDTree

from .errors import DimensionMismatch, NoConvergence, PoleHit, SingularJacobian, SpecParseError
from .expr import Compose, Const, Exp, Expr, JacobianDet, Var, as_expr, from_json, variables
from .geometry import Ball, Disc, Domain, Image, Product, sample_interior

NEWTON_MAX_ITER = 50
NEWTON_TOL = 1e-12
DAMPING_THRESHOLD = 1e-8


@dataclass(frozen=True)
class HolomorphicMap:
    """Map ``z -> (components[0](z), ..., components[n-1](z))``.

    ``inverse`` optionally holds closed-form component expressions of the
    inverse map, which are then used by ``invert_at`` in place of Newton.
    """

    components: tuple
    inverse: tuple | None = None
    name: str = ""
    declared_domain: Domain | None = field(default=None, compare=False)

    def __post_init__(self):
        comps = tuple(as_expr(c) for c in self.components)
        object.__setattr__(self, "components", comps)
        if self.inverse is not None:
            inv = tuple(as_expr(c) for c in self.inverse)
            if len(inv) != len(comps):
                raise DimensionMismatch("inverse has a different number of components")
            object.__setattr__(self, "inverse", inv)
        for c in comps:
            if c.dimension() > len(comps):
                raise DimensionMismatch(f"component {c} uses more than {len(comps)} variables")

    @property
    def dim(self) -> int:
        return len(self.components)

    def __str__(self):
        return self.name or "(" + ", ".join(str(c) for c in self.components) + ")"

    # evaluation -----------------------------------------------------------
    def _points(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if z.ndim == 0:
            z = z.reshape(1)
        if z.shape[-1] != self.dim:
            raise DimensionMismatch(f"points of dimension {z.shape[-1]} for a map of dimension {self.dim}")
        return z

    def evaluate(self, z) -> np.ndarray:
        z = self._points(z)
        vals = [np.broadcast_to(c.evaluate(z), z.shape[:-1]) for c in self.components]
        return np.stack(vals, axis=-1)

    __call__ = evaluate

    def jets(self, center, order: int) -> tuple:
        center = self._points(center)
        return tuple(c.jet(center, order) for c in self.components)

    def jacobian_matrix(self, z) -> np.ndarray:
        z = self._points(z)
        n = self.dim
        jets = self.jets(z, 1)
        mat = np.empty(z.shape[:-1] + (n, n), dtype=complex)
        for i in range(n):
            for j in range(n):
                e = [0] * n
                e[j] = 1
                mat[..., i, j] = np.broadcast_to(jets[i].coefficient(e), z.shape[:-1])
        return mat

    def jacobian_determinant(self, z) -> np.ndarray:
        mat = self.jacobian_matrix(z)
        return np.linalg.det(mat) if self.dim > 1 else mat[..., 0, 0]

    def jacobian_expr(self) -> Expr:
        """The Jacobian determinant ``u`` as an expression."""
        return JacobianDet(self.components)

    # algebra --------------------------------------------------------------
    def compose(self, inner: "HolomorphicMap") -> "HolomorphicMap":
        """``self o inner``."""
        if inner.dim != self.dim:
            raise DimensionMismatch("maps have different dimensions")
        comps = tuple(Compose(c, inner.components) for c in self.components)
        inv = None
        if self.inverse is not None and inner.inverse is not None:
            inv = tuple(Compose(c, self.inverse) for c in inner.inverse)
        return HolomorphicMap(comps, inv, name=f"{self} o {inner}" if (self.name or inner.name) else "")

    def inverse_map(self) -> "HolomorphicMap":
        if self.inverse is None:
            raise NotImplementedError("no closed-form inverse is registered")
        return HolomorphicMap(self.inverse, self.components, name=f"{self.name}^-1" if self.name else "")

    # inversion ------------------------------------------------------------
    def invert_at(self, target, seed=None, tol: float = NEWTON_TOL, max_iter: int = NEWTON_MAX_ITER) -> np.ndarray:
        """Solve ``f(z) = target``; closed-form inverse first, Newton otherwise."""
        target = self._points(target).reshape(self.dim)
        scale = max(1.0, float(np.linalg.norm(target)))
        if self.inverse is not None:
            try:
                z = np.array([complex(c.evaluate(target)) for c in self.inverse])
                if np.linalg.norm(self.evaluate(z) - target) <= tol * scale * 10:
                    return z
            except (PoleHit, FloatingPointError):
                pass
        z = target.copy() if seed is None else self._points(seed).reshape(self.dim).copy()
        for _ in range(max_iter):
            r = self.evaluate(z) - target
            if not np.all(np.isfinite(r)):
                raise NoConvergence("Newton iterate left the region where the map is finite")
            if np.linalg.norm(r) <= tol * scale:
                return z
            jac = self.jacobian_matrix(z)
            det = np.linalg.det(jac)
            if det == 0 or not np.isfinite(det):
                raise SingularJacobian(f"singular Jacobian at {z}")
            step = np.linalg.solve(jac, r)
            if abs(det) < DAMPING_THRESHOLD:
                step = 0.5 * step
            z = z - step
        if np.linalg.norm(self.evaluate(z) - target) <= tol * scale:
            return z
        raise NoConvergence(f"Newton did not converge in {max_iter} steps")

    def invert_many(self, targets, seeds=None, seed_domain: Domain | None = None,
                    tol: float = NEWTON_TOL, max_iter: int = NEWTON_MAX_ITER) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized inversion; returns preimages and a convergence mask."""
        t = self._points(targets)
        shape = t.shape[:-1]
        t = t.reshape(-1, self.dim)
        scale = np.maximum(1.0, np.linalg.norm(t, axis=-1))
        if self.inverse is not None:
            try:
                with np.errstate(all="ignore"):
                    z = np.stack([np.broadcast_to(c.evaluate(t), t.shape[:-1]) for c in self.inverse], axis=-1)
                    ok = np.all(np.isfinite(z), axis=-1)
                    res = np.full(len(t), np.inf)
                    res[ok] = np.linalg.norm(self.evaluate(z[ok]) - t[ok], axis=-1)
                conv = res <= 10 * tol * scale
                if np.all(conv):
                    return z.reshape(shape + (self.dim,)), conv.reshape(shape)
            except PoleHit:
                pass
        if seeds is None:
            seeds = self._nearest_seeds(t, seed_domain)
        z = np.array(np.broadcast_to(self._points(seeds).reshape(-1, self.dim), t.shape), dtype=complex)
        conv = np.zeros(len(t), dtype=bool)
        active = np.arange(len(t))
        for _ in range(max_iter + 1):
            if active.size == 0:
                break
            with np.errstate(all="ignore"):
                try:
                    r = self.evaluate(z[active]) - t[active]
                except PoleHit:
                    r = _safe_eval(self, z[active]) - t[active]
                norm = np.linalg.norm(r, axis=-1)
            bad = ~np.isfinite(norm)
            done = norm <= tol * scale[active]
            conv[active[done]] = True
            keep = ~(done | bad)
            active, r = active[keep], r[keep]
            if active.size == 0:
                break
            with np.errstate(all="ignore"):
                jac = self.jacobian_matrix(z[active])
                det = np.linalg.det(jac) if self.dim > 1 else jac[:, 0, 0]
                sing = (det == 0) | ~np.isfinite(det)
                step = np.zeros_like(r)
                good = ~sing
                if np.any(good):
                    step[good] = np.linalg.solve(jac[good], r[good][..., None])[..., 0]
            step[np.abs(det) < DAMPING_THRESHOLD] *= 0.5
            z[active[good]] -= step[good]
            active = active[good]
        return z.reshape(shape + (self.dim,)), conv.reshape(shape)

    def _nearest_seeds(self, targets: np.ndarray, seed_domain: Domain | None) -> np.ndarray:
        domain = seed_domain if seed_domain is not None else self.declared_domain
        if domain is None:
            return targets
        lattice = sample_interior(domain, "tensor-grid", 400 * domain.dim)
        images = self.evaluate(lattice)
        tree = cKDTree(np.concatenate([images.real, images.imag], axis=-1))
        _, idx = tree.query(np.concatenate([targets.real, targets.imag], axis=-1))
        return lattice[idx]

    # serialization --------------------------------------------------------
    def to_json(self) -> dict:
        out = {"components": [c.to_json() for c in self.components]}
        if self.inverse is not None:
            out["inverse"] = [c.to_json() for c in self.inverse]
        if self.name:
            out["name"] = self.name
        return out

    @classmethod
    def from_json(cls, obj) -> "HolomorphicMap":
        if isinstance(obj, str):
            return named_map(obj)
        if not isinstance(obj, dict):
            raise SpecParseError(f"map description must be an object, got {obj!r}")
        if "named" in obj:
            params = {k: v for k, v in obj.items() if k != "named"}
            return named_map(obj["named"], **params)
        try:
            comps = tuple(from_json(c) for c in obj["components"])
        except KeyError as exc:
            raise SpecParseError("map description needs 'components' or 'named'") from exc
        inv = obj.get("inverse")
        inv = tuple(from_json(c) for c in inv) if inv is not None else None
        return cls(comps, inv, name=obj.get("name", ""))


def _safe_eval(f: HolomorphicMap, z: np.ndarray) -> np.ndarray:
    out = np.full(z.shape, np.nan, dtype=complex)
    for i in range(len(z)):
        try:
            out[i] = f.evaluate(z[i])
        except PoleHit:
            pass
    return out


def evaluate(f: HolomorphicMap, z) -> np.ndarray:
    return f.evaluate(z)


def jacobian_determinant(f: HolomorphicMap, z) -> np.ndarray:
    return f.jacobian_determinant(z)


def invert_at(f: HolomorphicMap, target, seed=None, tol: float = NEWTON_TOL) -> np.ndarray:
    return f.invert_at(target, seed, tol)


# ---------------------------------------------------------------------------
# injectivity scans


@dataclass(frozen=True)
class InjectivityReport:
    injective_on_sample: bool
    min_pair_separation_ratio: float
    witness: tuple | None
    resolution: int
    points: int
    critical_points_inside: int | None = None
    min_boundary_derivative: float | None = None

    def to_json(self) -> dict:
        w = None
        if self.witness is not None:
            w = [[[c.real, c.imag] for c in np.atleast_1d(p)] for p in self.witness]
        return {
            "injective_on_sample": self.injective_on_sample,
            "min_pair_separation_ratio": self.min_pair_separation_ratio,
            "witness": w,
            "resolution": self.resolution,
            "points": self.points,
            "critical_points_inside": self.critical_points_inside,
            "min_boundary_derivative": self.min_boundary_derivative,
        }


def _polar_closed_grid(disc: Disc, angles: int) -> np.ndarray:
    rings = max(1, math.ceil(angles / 25))
    radii = disc.radius * np.arange(1, rings + 1) / rings
    theta = 2 * np.pi * np.arange(angles) / angles
    pts = (radii[:, None] * np.exp(1j * theta[None, :])).ravel()
    return disc.center + np.concatenate([[0j], pts])


def scan_grid(domain: Domain, resolution: int) -> np.ndarray:
    """Deterministic grid on the closure used by injectivity scans, shape ``(N, n)``.

    Planar discs get ``resolution`` angles on ``ceil(resolution/25)`` rings
    (outermost on the boundary) plus the center.  Products use the tensor
    product of per-factor grids whose size is reduced so the total stays
    comparable to the planar grid.
    """
    if isinstance(domain, Disc):
        return _polar_closed_grid(domain, resolution)[:, None]
    if isinstance(domain, Product) and all(isinstance(f, Disc) for f in domain.factors):
        n = domain.dim
        planar = resolution * math.ceil(resolution / 25) + 1
        target = max(planar, 2000) ** (1.0 / n)
        angles = max(4, int(round(target / 2)))
        while angles > 4 and angles * math.ceil(angles / 25) + 1 > target:
            angles -= 1
        grids = [_polar_closed_grid(f, angles) for f in domain.factors]
        mesh = np.meshgrid(*grids, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=-1)
    if isinstance(domain, Ball):
        m = max(4, int(round(resolution ** (1.0 / domain.dim))))
        return domain.closure_grid(m)
    if isinstance(domain, Image):
        return scan_grid(domain.base, resolution)
    pts = sample_interior(domain, "tensor-grid", resolution * math.ceil(resolution / 25) + 1)
    return pts


@lru_cache(maxsize=16)
def _scan_pairs(domain: Domain, resolution: int):
    pts = scan_grid(domain, resolution)
    if isinstance(domain, Image):
        pts = domain.map.evaluate(pts)
    pts.setflags(write=False)
    i, j = np.triu_indices(len(pts), k=1)
    dz = np.linalg.norm(pts[i] - pts[j], axis=-1) if pts.shape[1] > 1 else np.abs(pts[i, 0] - pts[j, 0])
    keep = dz > 0
    i, j, dz = i[keep].astype(np.int32), j[keep].astype(np.int32), dz[keep]
    for a in (i, j, dz):
        a.setflags(write=False)
    return pts, i, j, dz


def injectivity_scan(f: HolomorphicMap, domain: Domain, grid_resolution: int = 64,
                     refine: int = 16) -> InjectivityReport:
    """Sample-based injectivity check of ``f`` on the closure of ``domain``.

    Every pair of grid points is compared.  Exact image coincidences are
    witnesses; the ``refine`` pairs with the smallest separation ratio are
    polished by Newton on ``f(w') = f(z)`` and become witnesses when ``w'``
    lands in the closed domain away from ``z``.  For planar discs the
    argument principle on ``f'`` along the boundary adds a check for
    critical points, which pair sampling can miss.
    """
    if grid_resolution < 2:
        raise ValueError("grid_resolution must be at least 2")
    base = domain.base if isinstance(domain, Image) else domain
    pts, I, J, dz = _scan_pairs(domain, int(grid_resolution))
    imgs = f.evaluate(pts)
    img_scale = max(1.0, float(np.max(np.linalg.norm(imgs, axis=-1))))
    if imgs.shape[1] == 1:
        df = np.abs(imgs[I, 0] - imgs[J, 0])
    else:
        df = np.linalg.norm(imgs[I] - imgs[J], axis=-1)
    ratio = df / dz
    best = float(np.min(ratio)) if ratio.size else np.inf
    witness = None
    hit = np.flatnonzero(df <= 1e-12 * img_scale)
    if hit.size:
        q = hit[0]
        witness = (pts[I[q]].copy(), pts[J[q]].copy())
    else:
        k = min(refine, ratio.size)
        idx = np.argpartition(ratio, k - 1)[:k] if k else np.array([], dtype=int)
        idx = idx[np.argsort(ratio[idx], kind="stable")]
        witness = _newton_witness(f, domain, base, pts, [(I[q], J[q]) for q in idx])
    crit = None
    min_deriv = None
    if isinstance(domain, Disc) and f.dim == 1:
        count = max(4 * grid_resolution, 720)
        crit, min_deriv = _critical_point_check(f, domain, count)
        if min_deriv <= 1e-9 * img_scale:
            # f' vanishes on the circle: count interior zeros just inside it
            inner = Disc(domain.center, domain.radius * (1 - 1e-4))
            crit, _ = _critical_point_check(f, inner, 4 * count)
    ok = witness is None and best > 0
    if crit is not None and crit > 0:
        ok = False
    return InjectivityReport(ok, best, witness, grid_resolution, len(pts), crit, min_deriv)


def _closed_contains(domain: Domain, z: np.ndarray, slack: float = 1e-9) -> bool:
    if isinstance(domain, Disc):
        return abs(z[0] - domain.center) <= domain.radius * (1 + slack)
    if isinstance(domain, Product) and all(isinstance(f, Disc) for f in domain.factors):
        return all(abs(z[i] - d.center) <= d.radius * (1 + slack) for i, d in enumerate(domain.factors))
    if isinstance(domain, Ball):
        return float(np.sum(np.abs(z - np.array(domain.center)) ** 2)) <= (domain.radius * (1 + slack)) ** 2
    return bool(domain.contains(z))


def _newton_witness(f, domain, base, pts, cands):
    if not cands:
        return None
    diam = float(np.max(np.linalg.norm(pts - pts[0], axis=-1))) or 1.0
    for i, j in cands:
        z, w = pts[i], pts[j]
        try:
            w2 = f.invert_at(f.evaluate(z), seed=w)
        except (NoConvergence, SingularJacobian, PoleHit, np.linalg.LinAlgError):
            continue
        if np.linalg.norm(w2 - z) > 1e-6 * diam:
            check = w2 if not isinstance(domain, Image) else domain.map.invert_at(w2)
            if _closed_contains(base, check):
                return (z.copy(), w2)
    return None


def _critical_point_check(f: HolomorphicMap, disc: Disc, points: int) -> tuple[int, float]:
    """Zeros of ``f'`` inside the disc (argument principle) and ``min |f'|`` on its boundary."""
    t = 2 * np.pi * np.arange(points) / points
    circle = disc.center + disc.radius * np.exp(1j * t)
    d = f.jacobian_determinant(circle[:, None])
    mags = np.abs(d)
    mind = float(np.min(mags))
    if mind == 0:
        return 0, 0.0
    ang = np.angle(d)
    jumps = np.diff(np.concatenate([ang, ang[:1]]))
    jumps = (jumps + np.pi) % (2 * np.pi) - np.pi
    winding = int(round(float(np.sum(jumps)) / (2 * np.pi)))
    return winding, mind


def divided_difference_min(f: HolomorphicMap, domain: Domain, samples: int = 720, certified: bool = False) -> float:
    """Minimum of ``|(f(z)-f(w))/(z-w)|`` over pairs, with ``|f'|`` on the diagonal.

    For univalent ``f`` this quotient is holomorphic and zero-free on the
    product domain, so its modulus is smallest on the product of boundaries;
    pairs are therefore drawn from the boundary curves.  ``certified``
    polishes the sampled minimizer with a local optimizer over the two
    boundary parameters.
    """
    if domain.dim != 1:
        raise DimensionMismatch("divided differences are planar")
    from .geometry import boundary_curves

    curves = boundary_curves(domain, samples)
    pts = np.concatenate(curves)
    vals = f.evaluate(pts[:, None])[:, 0]
    deriv = np.abs(f.jacobian_determinant(pts[:, None]))
    dz = pts[:, None] - pts[None, :]
    df = vals[:, None] - vals[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.abs(df / dz)
    np.fill_diagonal(q, deriv)
    q[~np.isfinite(q)] = np.inf
    k = int(np.argmin(q))
    best = float(q.flat[k])
    if not certified:
        return best
    if isinstance(domain, Disc):
        i, j = divmod(k, len(pts))
        c, r = domain.center, domain.radius

        def obj(th):
            z = c + r * np.exp(1j * th[0])
            w = c + r * np.exp(1j * th[1])
            if abs(z - w) < 1e-7:
                return float(np.abs(f.jacobian_determinant(np.array([[z]])))[0])
            fz, fw = f.evaluate(np.array([[z], [w]]))[:, 0]
            return float(abs((fz - fw) / (z - w)))

        th0 = np.angle(np.array([pts[i] - c, pts[j] - c]))
        res = minimize(obj, th0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14})
        best = min(best, float(res.fun))
    return best


# ---------------------------------------------------------------------------
# named maps


def identity_map(n: int = 1) -> HolomorphicMap:
    zs = variables(n)
    return HolomorphicMap(zs, zs, name="identity")


def scaling_map(a: complex, n: int = 1) -> HolomorphicMap:
    zs = variables(n)
    a = complex(a)
    return HolomorphicMap(tuple(Const(a) * z for z in zs), tuple(Const(1 / a) * z for z in zs), name=f"scale({a:g})")


def cardioid_map(c: complex = 0.3) -> HolomorphicMap:
    """``z -> z + c z^2``, univalent on the unit disc for ``|c| <= 1/2``."""
    z = Var(0)
    c = complex(c)
    return HolomorphicMap((z + Const(c) * z**2,), name=f"z+({c:g})z^2")


def planar_map(expr, name: str = "") -> HolomorphicMap:
    return HolomorphicMap((as_expr(expr),), name=name)


def bergman_coordinate_map() -> HolomorphicMap:
    """``(1/(3 - z1 - z2), z1)`` with its closed-form inverse."""
    z1, z2 = variables(2)
    comps = (1 / (3 - z1 - z2), z1)
    inv = (z2, 3 - z2 - 1 / z1)
    return HolomorphicMap(comps, inv, name="bergman-coordinate")


def exp_shear_map() -> HolomorphicMap:
    """``(e^{z1+z2} + z1, z1 + z2)``; unit Jacobian, entire inverse."""
    z1, z2 = variables(2)
    comps = (Exp(z1 + z2) + z1, z1 + z2)
    inv = (z1 - Exp(z2), z2 - z1 + Exp(z2))
    return HolomorphicMap(comps, inv, name="exp-shear")


def one_point_map() -> HolomorphicMap:
    """``(z1^2 - z2, z1 + z2)`` with Jacobian ``2 z1 + 1``."""
    z1, z2 = variables(2)
    return HolomorphicMap((z1**2 - z2, z1 + z2), name="one-point")


_NAMED = {
    "identity": lambda n=1: identity_map(int(n)),
    "scale": lambda a=2.0, n=1: scaling_map(_complex(a), int(n)),
    "cardioid": lambda c=0.3: cardioid_map(_complex(c)),
    "bergman-coordinate": bergman_coordinate_map,
    "exp-shear": exp_shear_map,
    "one-point": one_point_map,
}


def _complex(x) -> complex:
    if isinstance(x, (list, tuple)):
        return complex(float(x[0]), float(x[1]))
    return complex(x)


def named_map(name: str, **params) -> HolomorphicMap:
    try:
        factory = _NAMED[name]
    except KeyError as exc:
        raise SpecParseError(f"unknown named map {name!r}; known: {sorted(_NAMED)}") from exc
    return factory(**params)
