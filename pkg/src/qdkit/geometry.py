"""Domains in C^n: membership, sampling, boundary curves and chord-arc paths."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.stats import qmc

from .errors import DegenerateGap, DimensionMismatch, EmptyDomain, SpecParseError

BOUNDARY_POINTS = 720


class NonConvergedInverseWarning(UserWarning):
    """Newton inversion failed for some points; they were treated as outside."""


def _as_points(z, n: int) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if z.ndim == 0:
        z = z.reshape(1)
    if z.shape[-1] != n:
        if n == 1:
            z = z[..., None]
        else:
            raise DimensionMismatch(f"points of dimension {z.shape[-1]} for a domain of dimension {n}")
    return z


class Domain:
    """Base class for open domains."""

    dim: int = 1

    @property
    def planar(self) -> bool:
        return self.dim == 1

    def contains(self, z) -> bool:
        """Membership of a single point."""
        z = np.asarray(z, dtype=complex)
        if z.ndim > 1 or (z.ndim == 1 and z.shape[0] != self.dim):
            raise DimensionMismatch(f"expected a point of dimension {self.dim}")
        return bool(self.contains_many(z.reshape(1, self.dim))[0])

    def contains_many(self, z) -> np.ndarray:
        raise NotImplementedError

    def center_point(self) -> np.ndarray:
        raise NotImplementedError

    def inradius(self) -> float:
        """Radius of a polydisc around ``center_point`` contained in the domain."""
        raise NotImplementedError

    def volume(self) -> float | None:
        return None

    def to_json(self) -> dict:
        raise NotImplementedError

    def _unit_map(self, u: np.ndarray) -> np.ndarray | None:
        """Map points of the unit cube ``[0,1)^(2n)`` into the domain, if a direct map exists."""
        return None

    def _proposal_box(self) -> tuple[np.ndarray, np.ndarray]:
        """Real bounding box (lower, upper) of length ``2n`` for rejection sampling."""
        raise NotImplementedError

    def _tensor_grid(self, m: int) -> np.ndarray:
        """Deterministic interior grid with roughly ``m`` points per planar factor."""
        raise NotImplementedError


@dataclass(frozen=True)
class Disc(Domain):
    center: complex = 0j
    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("disc radius must be positive")
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "radius", float(self.radius))

    dim = 1

    def contains_many(self, z):
        z = _as_points(z, 1)[..., 0]
        return np.abs(z - self.center) < self.radius

    def center_point(self):
        return np.array([self.center])

    def inradius(self):
        return self.radius

    def volume(self):
        return math.pi * self.radius**2

    def to_json(self):
        return {"kind": "disc", "center": [self.center.real, self.center.imag], "radius": self.radius}

    def _unit_map(self, u):
        r = self.radius * np.sqrt(u[..., 0])
        return (self.center + r * np.exp(2j * np.pi * u[..., 1]))[..., None]

    def _proposal_box(self):
        c, r = self.center, self.radius
        return np.array([c.real - r, c.imag - r]), np.array([c.real + r, c.imag + r])

    def _tensor_grid(self, m):
        k = max(1, math.ceil(math.sqrt(m)))
        radii = self.radius * (np.arange(k) + 0.5) / k
        angles = 2 * np.pi * np.arange(k) / k
        pts = self.center + (radii[:, None] * np.exp(1j * angles[None, :])).ravel()
        return pts[:, None]

    def closure_grid(self, m: int) -> np.ndarray:
        """Polar grid on the closed disc, boundary circle included."""
        radii = self.radius * np.linspace(0, 1, max(m, 2))[1:]
        angles = 2 * np.pi * np.arange(4 * m) / (4 * m)
        pts = (radii[:, None] * np.exp(1j * angles[None, :])).ravel()
        return (self.center + np.concatenate([[0j], pts]))[:, None]

    def boundary_curves(self, points: int = BOUNDARY_POINTS) -> list[np.ndarray]:
        t = 2 * np.pi * np.arange(points) / points
        return [self.center + self.radius * np.exp(1j * t)]


@dataclass(frozen=True)
class Product(Domain):
    factors: tuple = ()

    def __post_init__(self):
        factors = tuple(self.factors)
        if not factors:
            raise ValueError("a product needs at least one factor")
        for f in factors:
            if f.dim != 1:
                raise ValueError("product factors must be planar")
        object.__setattr__(self, "factors", factors)

    @property
    def dim(self):
        return len(self.factors)

    def contains_many(self, z):
        z = _as_points(z, self.dim)
        out = np.ones(z.shape[:-1], dtype=bool)
        for i, f in enumerate(self.factors):
            out &= f.contains_many(z[..., i : i + 1])
        return out

    def center_point(self):
        return np.concatenate([f.center_point() for f in self.factors])

    def inradius(self):
        return min(f.inradius() for f in self.factors)

    def volume(self):
        vols = [f.volume() for f in self.factors]
        return None if any(v is None for v in vols) else math.prod(vols)

    def to_json(self):
        return {"kind": "product", "factors": [f.to_json() for f in self.factors]}

    def _unit_map(self, u):
        parts = []
        for i, f in enumerate(self.factors):
            p = f._unit_map(u[..., 2 * i : 2 * i + 2])
            if p is None:
                return None
            parts.append(p)
        return np.concatenate(parts, axis=-1)

    def _proposal_box(self):
        boxes = [f._proposal_box() for f in self.factors]
        return np.concatenate([b[0] for b in boxes]), np.concatenate([b[1] for b in boxes])

    def _tensor_grid(self, m):
        grids = [f._tensor_grid(m)[:, 0] for f in self.factors]
        mesh = np.meshgrid(*grids, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=-1)

    def closure_grid(self, m: int) -> np.ndarray:
        grids = [f.closure_grid(m)[:, 0] for f in self.factors]
        mesh = np.meshgrid(*grids, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=-1)


@dataclass(frozen=True)
class Polydisc(Product):
    """Product of discs."""

    def __post_init__(self):
        super().__post_init__()
        if not all(isinstance(f, Disc) for f in self.factors):
            raise ValueError("polydisc factors must be discs")

    @classmethod
    def unit(cls, n: int, radius: float = 1.0, center=None) -> "Polydisc":
        center = [0j] * n if center is None else list(center)
        return cls(tuple(Disc(c, radius) for c in center))

    @property
    def centers(self) -> np.ndarray:
        return np.array([f.center for f in self.factors])

    @property
    def radii(self) -> np.ndarray:
        return np.array([f.radius for f in self.factors])

    def to_json(self):
        return {
            "kind": "polydisc",
            "centers": [[c.real, c.imag] for c in self.centers],
            "radii": [float(r) for r in self.radii],
        }


@dataclass(frozen=True)
class Ball(Domain):
    n: int = 2
    center: tuple = ()
    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")
        center = tuple(complex(c) for c in self.center) or (0j,) * self.n
        if len(center) != self.n:
            raise DimensionMismatch("ball center has the wrong dimension")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self):
        return self.n

    def contains_many(self, z):
        z = _as_points(z, self.n)
        d = z - np.array(self.center)
        return np.sum(np.abs(d) ** 2, axis=-1) < self.radius**2

    def center_point(self):
        return np.array(self.center)

    def inradius(self):
        return self.radius / math.sqrt(self.n)

    def volume(self):
        return math.pi**self.n * self.radius ** (2 * self.n) / math.factorial(self.n)

    def to_json(self):
        return {
            "kind": "ball",
            "n": self.n,
            "center": [[c.real, c.imag] for c in self.center],
            "radius": self.radius,
        }

    def _proposal_box(self):
        lo, hi = [], []
        for c in self.center:
            lo += [c.real - self.radius, c.imag - self.radius]
            hi += [c.real + self.radius, c.imag + self.radius]
        return np.array(lo), np.array(hi)

    def _tensor_grid(self, m):
        disc = Disc(0j, self.radius)
        grid = disc._tensor_grid(m)[:, 0]
        mesh = np.meshgrid(*([grid] * self.n), indexing="ij")
        pts = np.stack([g.ravel() for g in mesh], axis=-1) + np.array(self.center)
        return pts[self.contains_many(pts)]

    def closure_grid(self, m: int) -> np.ndarray:
        disc = Disc(0j, self.radius)
        grid = disc.closure_grid(m)[:, 0]
        mesh = np.meshgrid(*([grid] * self.n), indexing="ij")
        pts = np.stack([g.ravel() for g in mesh], axis=-1)
        norms = np.sqrt(np.sum(np.abs(pts) ** 2, axis=-1))
        keep = norms <= self.radius * (1 + 1e-12)
        # push the outermost shell onto the sphere so the closure is represented
        shell = pts[norms > 0] / norms[norms > 0, None] * self.radius
        return np.concatenate([pts[keep], shell]) + np.array(self.center)


@dataclass(frozen=True)
class CircleDomain(Domain):
    """Outer disc with finitely many disjoint closed discs removed."""

    outer: Disc = field(default_factory=Disc)
    holes: tuple = ()

    dim = 1

    def __post_init__(self):
        holes = tuple(self.holes)
        object.__setattr__(self, "holes", holes)
        o = self.outer
        for i, h in enumerate(holes):
            if abs(h.center - o.center) + h.radius >= o.radius:
                raise ValueError(f"hole {i} is not contained in the outer disc")
            for j in range(i):
                g = holes[j]
                if abs(h.center - g.center) <= h.radius + g.radius:
                    raise ValueError(f"holes {j} and {i} intersect")

    def contains_many(self, z):
        z = _as_points(z, 1)[..., 0]
        inside = np.abs(z - self.outer.center) < self.outer.radius
        for h in self.holes:
            inside &= np.abs(z - h.center) > h.radius
        return inside

    def center_point(self):
        return self.outer.center_point()

    def inradius(self):
        return self.outer.radius

    def volume(self):
        return self.outer.volume() - sum(h.volume() for h in self.holes)

    def to_json(self):
        return {"kind": "circle-domain", "outer": self.outer.to_json(), "holes": [h.to_json() for h in self.holes]}

    def _proposal_box(self):
        return self.outer._proposal_box()

    def _tensor_grid(self, m):
        pts = self.outer._tensor_grid(m)
        return pts[self.contains_many(pts)]

    def boundary_curves(self, points: int = BOUNDARY_POINTS) -> list[np.ndarray]:
        curves = self.outer.boundary_curves(points)
        for h in self.holes:
            curves += h.boundary_curves(points)
        return curves

    def minimal_gap(self) -> float:
        """Smallest distance between two distinct boundary circles."""
        gaps = []
        o = self.outer
        for i, h in enumerate(self.holes):
            gaps.append(o.radius - abs(h.center - o.center) - h.radius)
            for g in self.holes[:i]:
                gaps.append(abs(h.center - g.center) - h.radius - g.radius)
        return min(gaps) if gaps else math.inf


@dataclass(frozen=True)
class Image(Domain):
    """Image of a base domain under a map declared injective on it."""

    base: Domain
    map: Any

    def __post_init__(self):
        if getattr(self.map, "dim", self.base.dim) != self.base.dim:
            raise DimensionMismatch("map dimension differs from the base domain")

    @property
    def dim(self):
        return self.base.dim

    def contains_many(self, z, return_flags: bool = False):
        z = _as_points(z, self.dim)
        flat = z.reshape(-1, self.dim)
        pre, converged = self.map.invert_many(flat, seed_domain=self.base)
        inside = converged & self.base.contains_many(pre)
        if not np.all(converged):
            warnings.warn(
                f"{int(np.sum(~converged))} inverse solves did not converge; treated as outside",
                NonConvergedInverseWarning,
                stacklevel=2,
            )
        inside = inside.reshape(z.shape[:-1])
        if return_flags:
            return inside, converged.reshape(z.shape[:-1])
        return inside

    def center_point(self):
        return np.asarray(self.map.evaluate(self.base.center_point()))

    def inradius(self):
        raise NotImplementedError("inradius of a mapped domain is not tracked")

    def to_json(self):
        return {"kind": "image", "base": self.base.to_json(), "map": self.map.to_json()}

    def _tensor_grid(self, m):
        return np.asarray(self.map.evaluate(self.base._tensor_grid(m)))

    def boundary_curves(self, points: int = BOUNDARY_POINTS) -> list[np.ndarray]:
        return [np.asarray(self.map.evaluate(c[:, None]))[:, 0] for c in boundary_curves(self.base, points)]


def contains(domain: Domain, z) -> bool:
    return domain.contains(z)


def boundary_curves(domain: Domain, points: int = BOUNDARY_POINTS) -> list[np.ndarray]:
    """Closed planar boundary curves sampled at ``points`` points each."""
    if domain.dim != 1 or not hasattr(domain, "boundary_curves"):
        raise NotImplementedError("boundary curves are available for planar domains only")
    return domain.boundary_curves(points)


def closure_grid(domain: Domain, m: int) -> np.ndarray:
    """Deterministic grid on the closure (boundary included) of a canonical domain."""
    if isinstance(domain, Image):
        return np.asarray(domain.map.evaluate(closure_grid(domain.base, m)))
    if hasattr(domain, "closure_grid"):
        return domain.closure_grid(m)
    raise NotImplementedError(f"no closure grid for {type(domain).__name__}")


def _even_subset(pts: np.ndarray, count: int) -> np.ndarray:
    if len(pts) <= count:
        return pts
    idx = np.unique(np.round(np.linspace(0, len(pts) - 1, count)).astype(int))
    return pts[idx]


def sample_interior(domain: Domain, strategy: str = "quasi-random", count: int = 100, seed: int = 0) -> np.ndarray:
    """Deterministic interior points, shape ``(count, n)``.

    ``tensor-grid`` uses polar grids per planar factor (subsampled evenly to
    ``count``); ``quasi-random`` uses a scrambled Sobol sequence mapped into the
    domain directly when possible and by rejection otherwise.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if strategy == "tensor-grid":
        return _tensor_sample(domain, count)
    if strategy == "quasi-random":
        return _sobol_sample(domain, count, seed)
    raise ValueError(f"unknown sampling strategy {strategy!r}")


def _tensor_sample(domain: Domain, count: int) -> np.ndarray:
    n = domain.dim
    m = max(1, math.ceil(count ** (1.0 / n)) ** 2)
    for _ in range(12):
        pts = domain._tensor_grid(m)
        if len(pts) >= count:
            return _even_subset(pts, count)
        m *= 2
    if len(pts) == 0:
        raise EmptyDomain("tensor grid produced no interior points")
    return pts


def _sobol_sample(domain: Domain, count: int, seed: int) -> np.ndarray:
    if isinstance(domain, Image):
        base = _sobol_sample(domain.base, count, seed)
        return np.asarray(domain.map.evaluate(base))
    n = domain.dim
    engine = qmc.Sobol(d=2 * n, scramble=True, seed=seed)
    direct = domain._unit_map(np.full((1, 2 * n), 0.5))
    if direct is not None:
        u = engine.random_base2(max(0, math.ceil(math.log2(count))))[:count]
        return domain._unit_map(u)
    lo, hi = domain._proposal_box()
    kept = []
    total = 0
    m = max(6, math.ceil(math.log2(4 * count)))
    for _ in range(64):
        u = engine.random(1 << m)
        parts = []
        for i in range(n):
            re = lo[2 * i] + (hi[2 * i] - lo[2 * i]) * u[:, 2 * i]
            im = lo[2 * i + 1] + (hi[2 * i + 1] - lo[2 * i + 1]) * u[:, 2 * i + 1]
            parts.append(re + 1j * im)
        pts = np.stack(parts, axis=-1)
        pts = pts[domain.contains_many(pts)]
        kept.append(pts)
        total += len(pts)
        if total >= count:
            return np.concatenate(kept)[:count]
    raise EmptyDomain(f"rejection sampling found {total} of {count} points")


# ---------------------------------------------------------------------------
# chord-arc paths


@dataclass(frozen=True)
class Segment:
    start: complex
    end: complex

    def length(self) -> float:
        return abs(self.end - self.start)

    def points(self, k: int) -> np.ndarray:
        t = np.linspace(0.0, 1.0, k)
        return self.start + t * (self.end - self.start)


@dataclass(frozen=True)
class Arc:
    """Circular arc ``center + radius * exp(i*(start_angle + s*sweep))``, s in [0,1]."""

    center: complex
    radius: float
    start_angle: float
    sweep: float

    @property
    def start(self) -> complex:
        return self.center + self.radius * complex(math.cos(self.start_angle), math.sin(self.start_angle))

    @property
    def end(self) -> complex:
        a = self.start_angle + self.sweep
        return self.center + self.radius * complex(math.cos(a), math.sin(a))

    def length(self) -> float:
        return self.radius * abs(self.sweep)

    def points(self, k: int) -> np.ndarray:
        s = np.linspace(0.0, 1.0, k)
        return self.center + self.radius * np.exp(1j * (self.start_angle + s * self.sweep))


@dataclass(frozen=True)
class PathPolyline:
    """Piecewise path of segments and symbolic circular arcs."""

    vertices: tuple
    pieces: tuple

    def length(self) -> float:
        return float(sum(p.length() for p in self.pieces))

    def discretize(self, count: int = 512) -> np.ndarray:
        """About ``count`` points along the path, spread in proportion to piece length."""
        if not self.pieces:
            return np.array(self.vertices[:1], dtype=complex)
        total = self.length()
        out = []
        for p in self.pieces:
            k = max(2, int(round(count * p.length() / total)) if total > 0 else 2)
            out.append(p.points(k))
        pts = np.concatenate(out)
        return _even_subset(pts, count) if len(pts) > count else pts

    def to_json(self) -> dict:
        pieces = []
        for p in self.pieces:
            if isinstance(p, Segment):
                pieces.append({"segment": [[p.start.real, p.start.imag], [p.end.real, p.end.imag]]})
            else:
                pieces.append(
                    {
                        "arc": {
                            "center": [p.center.real, p.center.imag],
                            "radius": p.radius,
                            "start_angle": p.start_angle,
                            "sweep": p.sweep,
                        }
                    }
                )
        return {"length": self.length(), "pieces": pieces}


def _segment_disc_hits(z: complex, w: complex, c: complex, r: float) -> tuple[float, float] | None:
    """Parameters ``t1 <= t2`` where the line ``z + t(w-z)`` meets the circle |x-c| = r."""
    d = w - z
    a = abs(d) ** 2
    b = 2 * ((z - c) * d.conjugate()).real
    q = abs(z - c) ** 2 - r**2
    disc = b * b - 4 * a * q
    if disc < 0:
        return None
    s = math.sqrt(disc)
    return (-b - s) / (2 * a), (-b + s) / (2 * a)


def _distance_to_segment(z: complex, w: complex, c: complex) -> float:
    d = w - z
    dd = abs(d) ** 2
    if dd == 0.0:
        return abs(z - c)
    t = ((c - z) * d.conjugate()).real / dd
    t = min(1.0, max(0.0, t))
    return abs(z + t * d - c)


def chord_arc_path(domain: Domain, z: complex, w: complex, gap_fraction: float = 0.5) -> PathPolyline:
    """Segment from ``z`` to ``w`` detouring around every hole it meets.

    Each hole of radius ``r`` met by the segment (tangency included) is
    bypassed along the shorter arc of the concentric circle of radius
    ``r + eps``, where ``eps`` is ``gap_fraction`` times the smallest gap
    between boundary circles, reduced when an endpoint lies closer.
    """
    z, w = complex(z), complex(w)
    if isinstance(domain, Disc):
        domain = CircleDomain(domain, ())
    if not isinstance(domain, CircleDomain):
        raise TypeError("chord_arc_path needs a disc or circle domain")
    for p in (z, w):
        if not domain.contains(np.array([p])):
            raise ValueError(f"{p} is not an interior point")
    if z == w:
        return PathPolyline((z,), ())
    gap = domain.minimal_gap()
    if not gap > 0:
        raise DegenerateGap("boundary circles touch")
    eps0 = gap_fraction * gap if math.isfinite(gap) else 0.0
    detours = []
    for h in domain.holes:
        if _distance_to_segment(z, w, h.center) > h.radius:
            continue
        eps = min(eps0, 0.5 * (abs(z - h.center) - h.radius), 0.5 * (abs(w - h.center) - h.radius))
        if not eps > 0:
            raise DegenerateGap("no room to enlarge a hole around the path endpoints")
        rho = h.radius + eps
        hits = _segment_disc_hits(z, w, h.center, rho)
        t1, t2 = hits
        if not (0.0 < t1 <= t2 < 1.0):
            raise DegenerateGap("enlarged hole does not separate the endpoints")
        p1 = z + t1 * (w - z)
        p2 = z + t2 * (w - z)
        a1 = math.atan2((p1 - h.center).imag, (p1 - h.center).real)
        a2 = math.atan2((p2 - h.center).imag, (p2 - h.center).real)
        sweep = (a2 - a1) % (2 * math.pi)
        if sweep > math.pi:
            sweep -= 2 * math.pi
        detours.append((t1, t2, p1, p2, Arc(h.center, rho, a1, sweep)))
    detours.sort(key=lambda d: d[0])
    pieces = []
    vertices = [z]
    cur = z
    for t1, t2, p1, p2, arc in detours:
        if p1 != cur:
            pieces.append(Segment(cur, p1))
        pieces.append(arc)
        vertices += [p1, p2]
        cur = p2
    if cur != w:
        pieces.append(Segment(cur, w))
    vertices.append(w)
    return PathPolyline(tuple(vertices), tuple(pieces))


@dataclass(frozen=True)
class ChordArcEstimate:
    value: float
    pair: tuple | None
    trials: int

    def __float__(self):
        return float(self.value)


def _is_convex(domain: Domain) -> bool:
    if isinstance(domain, (Disc, Ball)):
        return True
    if isinstance(domain, Product):
        return all(_is_convex(f) for f in domain.factors)
    return isinstance(domain, CircleDomain) and not domain.holes


def chord_arc_ratio_estimate(domain: Domain, trials: int = 1000, seed: int = 0, path_points: int = 256) -> ChordArcEstimate:
    """Largest sampled ratio of constructed path length to chord length."""
    if domain.dim != 1:
        raise DimensionMismatch("chord-arc estimates are planar")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if _is_convex(domain):
        return ChordArcEstimate(1.0, None, trials)
    rng = np.random.default_rng(seed)
    if isinstance(domain, Image):
        base_pts = sample_interior(domain.base, "quasi-random", 2 * trials, seed)[:, 0]
        rng.shuffle(base_pts)
        pairs = base_pts.reshape(trials, 2)
        best, best_pair = 1.0, None
        s = np.linspace(0, 1, path_points)
        for a, b in pairs:
            za, zb = domain.map.evaluate(np.array([[a], [b]]))[:, 0]
            chord = abs(za - zb)
            if chord == 0:
                continue
            straight = za + s * (zb - za)
            if np.all(domain.contains_many(straight[:, None])):
                length = chord
            else:
                curve = domain.map.evaluate((a + s * (b - a))[:, None])[:, 0]
                length = float(np.sum(np.abs(np.diff(curve))))
            if length / chord > best:
                best, best_pair = length / chord, (complex(za), complex(zb))
        return ChordArcEstimate(best, best_pair, trials)
    pts = sample_interior(domain, "quasi-random", 2 * trials, seed)[:, 0]
    rng.shuffle(pts)
    best, best_pair = 1.0, None
    for a, b in pts.reshape(trials, 2):
        if a == b:
            continue
        path = chord_arc_path(domain, a, b)
        ratio = path.length() / abs(a - b)
        if ratio > best:
            best, best_pair = ratio, (complex(a), complex(b))
    return ChordArcEstimate(best, best_pair, trials)


@dataclass(frozen=True)
class ChordArcCheck:
    trials: int
    contained: int
    within_bound: int
    max_ratio: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.contained == self.trials and self.within_bound == self.trials

    def to_json(self) -> dict:
        return {"trials": self.trials, "contained": self.contained, "within_bound": self.within_bound,
                "max_ratio": self.max_ratio, "bound": self.bound, "passed": self.passed}


def chord_arc_check(domain: Domain, trials: int = 1000, seed: int = 0, points: int = 512,
                    bound: float = math.pi / 2, rtol: float = 1e-12) -> ChordArcCheck:
    """Build paths for random pairs; count those inside the domain and within ``bound * |z - w|``."""
    rng = np.random.default_rng(seed)
    pts = sample_interior(domain, "quasi-random", 2 * trials, seed)[:, 0]
    rng.shuffle(pts)
    contained = within = 0
    worst = 1.0
    for a, b in pts.reshape(trials, 2):
        path = chord_arc_path(domain, a, b)
        chord = abs(a - b)
        if np.all(domain.contains_many(path.discretize(points)[:, None])):
            contained += 1
        if chord == 0 or path.length() <= bound * chord * (1 + rtol):
            within += 1
        if chord > 0:
            worst = max(worst, float(path.length() / chord))
    return ChordArcCheck(trials, contained, within, worst, bound)


# ---------------------------------------------------------------------------
# JSON


def _cnum(x) -> complex:
    if isinstance(x, (list, tuple)):
        return complex(float(x[0]), float(x[1]))
    return complex(x)


def domain_from_json(obj: dict, map_parser=None) -> Domain:
    """Inverse of ``Domain.to_json``; ``map_parser`` builds maps for image domains."""
    try:
        kind = obj["kind"]
        if kind == "disc":
            return Disc(_cnum(obj.get("center", 0)), float(obj.get("radius", 1.0)))
        if kind == "polydisc":
            radii = obj.get("radii")
            n = int(obj.get("n", len(radii) if radii else 0))
            centers = [_cnum(c) for c in obj.get("centers", [0] * n)]
            if radii is None:
                radii = [float(obj.get("radius", 1.0))] * len(centers)
            return Polydisc(tuple(Disc(c, r) for c, r in zip(centers, radii)))
        if kind == "product":
            return Product(tuple(domain_from_json(f, map_parser) for f in obj["factors"]))
        if kind == "ball":
            n = int(obj.get("n", 2))
            center = tuple(_cnum(c) for c in obj.get("center", [0] * n))
            return Ball(n, center, float(obj.get("radius", 1.0)))
        if kind == "circle-domain":
            return CircleDomain(domain_from_json(obj["outer"]), tuple(domain_from_json(h) for h in obj.get("holes", [])))
        if kind == "image":
            if map_parser is None:
                from .maps import HolomorphicMap

                map_parser = HolomorphicMap.from_json
            return Image(domain_from_json(obj["base"], map_parser), map_parser(obj["map"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecParseError(f"malformed domain description {obj!r}: {exc}") from exc
    raise SpecParseError(f"unknown domain kind {obj.get('kind')!r}")
