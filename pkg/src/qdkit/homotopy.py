"""Homotopies through quadrature domains.

Dilations ``f(tz)/t`` of a univalent map, sampled univalence radii, the
piecewise-linear rescaling schedule built from them, straight-line
homotopies with the chord-arc perturbation bound, and the deformation of
product domains by integrating a prescribed Jacobian in the last variable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import NotOriginFixing, ScheduleInfeasible, UnivalenceSampleFailure, URepresentationMismatch
from .expr import Antiderivative, Compose, Const, Var, as_expr
from .geometry import CircleDomain, Disc, Domain, chord_arc_ratio_estimate, closure_grid
from .maps import HolomorphicMap, divided_difference_min, injectivity_scan
from .parallel import map_ordered
from .span import MembershipConfig, SpanElement, membership_residual
from .transport import QuadratureIdentity, extract_quadrature_identity
from .verify import IntegrationScheme, VerificationReport, verify_identity

ORIGIN_TOL = 1e-12
PLATEAU_ONE = 1 - 1e-6


# dilation -------------------------------------------------------------------

def _linear_part(f: HolomorphicMap) -> HolomorphicMap:
    jac = f.jacobian_matrix(np.zeros(f.dim))
    zs = [Var(j) for j in range(f.dim)]
    comps = []
    for i in range(f.dim):
        terms = [Const(complex(jac[i, j])) * zs[j] for j in range(f.dim) if jac[i, j] != 0]
        e = terms[0] if terms else Const(0j)
        for t in terms[1:]:
            e = e + t
        comps.append(e)
    inverse = None
    if abs(np.linalg.det(jac)) > 0:
        inv = np.linalg.inv(jac)
        inverse = []
        for i in range(f.dim):
            terms = [Const(complex(inv[i, j])) * zs[j] for j in range(f.dim) if inv[i, j] != 0]
            e = terms[0]
            for t in terms[1:]:
                e = e + t
            inverse.append(e)
        inverse = tuple(inverse)
    return HolomorphicMap(tuple(comps), inverse, name="linear part")


def dilation_homotopy(f: HolomorphicMap, t: float) -> HolomorphicMap:
    """``phi_t(z) = f(tz)/t``, with ``phi_0(z) = f'(0) z``."""
    origin = f.evaluate(np.zeros(f.dim))
    if np.max(np.abs(origin)) > ORIGIN_TOL:
        raise NotOriginFixing(f"f(0) = {origin} is not the origin")
    t = float(t)
    if not 0 <= t <= 1:
        raise ValueError("t must lie in [0, 1]")
    if t == 0:
        return _linear_part(f)
    if t == 1:
        return f
    scaled = tuple(Const(t) * Var(j) for j in range(f.dim))
    comps = tuple(Compose(c, scaled) / t for c in f.components)
    inverse = None
    if f.inverse is not None:
        inverse = tuple(Compose(c, scaled) / t for c in f.inverse)
    return HolomorphicMap(comps, inverse, name=f"dilation t={t:g}" + (f" of {f.name}" if f.name else ""))


def univalence_radius(f: HolomorphicMap, resolution: int = 64, bisection_tol: float = 1e-3) -> float:
    """Largest ``rho <= 1`` with a passing injectivity scan on ``D_rho``, by bisection."""
    if f.dim != 1:
        raise ValueError("univalence radius is defined for planar maps")
    if injectivity_scan(f, Disc(0j, 1.0), resolution).injective_on_sample:
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > bisection_tol:
        mid = 0.5 * (lo + hi)
        if injectivity_scan(f, Disc(0j, mid), resolution).injective_on_sample:
            lo = mid
        else:
            hi = mid
    return lo


# rescaling schedule -------------------------------------------------------------

@dataclass(frozen=True)
class RescalingSchedule:
    """Piecewise-linear ``k``: 1 near the ends, ``m/2`` on ``[t1, t2]``, linear ramps between."""

    t1: float
    t2: float
    m: float

    @property
    def plateau(self) -> float:
        return min(self.m / 2, 1.0)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        m = min(self.m, 2.0)
        t1, t2 = self.t1, self.t2
        k = np.ones_like(t)
        down = (t > t1 / 2) & (t < t1)
        k = np.where(down, -((2 - m) / t1) * (t - t1 / 2) + 1, k)
        k = np.where((t >= t1) & (t <= t2), m / 2, k)
        up = (t > t2) & (t < (1 + t2) / 2)
        k = np.where(up, ((2 - m) / (1 - t2)) * (t - (1 + t2) / 2) + 1, k)
        return k if k.ndim else float(k)

    def to_json(self) -> dict:
        return {"t1": self.t1, "t2": self.t2, "m": self.m, "plateau": self.plateau}


def plateau_window(t_samples, r_samples, level: float = PLATEAU_ONE) -> tuple[float, float]:
    """End of the longest prefix and start of the longest suffix with ``r >= level``."""
    t = np.asarray(t_samples, dtype=float)
    r = np.asarray(r_samples, dtype=float)
    below = np.flatnonzero(r < level)
    if below.size == 0:
        return float(t[-1]), float(t[-1])
    first, last = below[0], below[-1]
    if first == 0 or last == len(t) - 1:
        raise ScheduleInfeasible("the radius estimate must equal 1 near t = 0 and t = 1")
    return float(t[first - 1]), float(t[last + 1])


def rescaling_schedule(t_samples, r_samples, t1: float | None = None, t2: float | None = None,
                       m: float | None = None) -> RescalingSchedule:
    """Rescaling function from sampled univalence radii; checks ``k <= r`` on every sample."""
    t = np.asarray(t_samples, dtype=float)
    r = np.asarray(r_samples, dtype=float)
    if t.shape != r.shape or t.ndim != 1 or np.any(np.diff(t) <= 0):
        raise ValueError("t_samples must be increasing and match r_samples")
    if m is None:
        m = float(np.min(r))
    if m <= 0:
        raise ScheduleInfeasible(f"minimum radius estimate {m} is not positive")
    if t1 is None or t2 is None:
        if np.all(r >= PLATEAU_ONE):
            return ConstantSchedule(m)
        a, b = plateau_window(t, r)
        t1 = a if t1 is None else t1
        t2 = b if t2 is None else t2
    if not 0 < t1 < t2 < 1:
        raise ScheduleInfeasible(f"need 0 < t1 < t2 < 1, got t1={t1}, t2={t2}")
    sched = RescalingSchedule(float(t1), float(t2), float(m))
    k = sched(t)
    bad = np.flatnonzero(k > r * (1 + 1e-12))
    if bad.size:
        i = bad[0]
        raise ScheduleInfeasible(f"k({t[i]:.4g}) = {k[i]:.4g} exceeds the radius estimate {r[i]:.4g}")
    return sched


@dataclass(frozen=True)
class ConstantSchedule:
    """``k = 1`` everywhere, used when the radius estimate never drops below 1."""

    m: float = 1.0

    @property
    def plateau(self) -> float:
        return 1.0

    def __call__(self, t):
        k = np.ones_like(np.asarray(t, dtype=float))
        return k if k.ndim else 1.0

    def to_json(self) -> dict:
        return {"t1": None, "t2": None, "m": self.m, "plateau": 1.0}


@dataclass
class HomotopySchedule:
    t_samples: np.ndarray
    maps: list
    r: np.ndarray
    k: object
    epsilon: float | None = None
    resolution: int = 64
    continuity: float | None = None

    def to_json(self) -> dict:
        k = self.k(self.t_samples)
        return {
            "t": self.t_samples.tolist(),
            "r": self.r.tolist(),
            "k": np.asarray(k).tolist(),
            "schedule": self.k.to_json(),
            "epsilon": self.epsilon,
            "scan_resolution": self.resolution,
            "continuity": self.continuity,
        }


def sup_distance(f: HolomorphicMap, g: HolomorphicMap, domain: Domain, m: int = 24) -> float:
    """``sup |f - g|`` over a closure grid."""
    pts = closure_grid(domain, m)
    return float(np.max(np.linalg.norm(f.evaluate(pts) - g.evaluate(pts), axis=-1)))


def homotopy_schedule(family, t_samples, resolution: int = 64, bisection_tol: float = 1e-3) -> HomotopySchedule:
    """Radii, rescaling and continuity for a planar family ``t -> HolomorphicMap``."""
    t = np.asarray(t_samples, dtype=float)
    maps = [family(x) for x in t]
    r = np.array(map_ordered(lambda f: univalence_radius(f, resolution, bisection_tol), maps))
    k = rescaling_schedule(t, r)
    unit = Disc()
    cont = max((sup_distance(a, b, unit) for a, b in zip(maps, maps[1:])), default=0.0)
    return HomotopySchedule(t, maps, r, k, None, resolution, cont)


# straight-line homotopy and perturbation bound ------------------------------------

def straight_line_homotopy(f: HolomorphicMap, g: HolomorphicMap, t: float) -> HolomorphicMap:
    """``(1 - t) f + t g``."""
    if f.dim != g.dim:
        raise ValueError("maps have different dimensions")
    t = float(t)
    if t == 0:
        return f
    if t == 1:
        return g
    comps = tuple(Const(1 - t) * a + Const(t) * b for a, b in zip(f.components, g.components))
    return HolomorphicMap(comps, name=f"straight line t={t:g}")


def chord_arc_constant(domain: Domain, trials: int = 1000, seed: int = 0) -> float:
    """1 for convex planar domains, ``pi/2`` for circle domains, estimated otherwise."""
    if isinstance(domain, Disc):
        return 1.0
    if isinstance(domain, CircleDomain):
        return math.pi / 2
    return float(chord_arc_ratio_estimate(domain, trials, seed))


def epsilon_criterion(f: HolomorphicMap, domain: Domain, samples: int = 720, chord_arc: float | None = None) -> float:
    """``m / M``: divided-difference minimum over the chord-arc constant."""
    m = divided_difference_min(f, domain, samples)
    big_m = chord_arc_constant(domain) if chord_arc is None else float(chord_arc)
    return m / big_m


# quadrature identities along a dilation ---------------------------------------------

@dataclass
class TraceEntry:
    t: float
    identity: QuadratureIdentity
    report: VerificationReport

    def to_json(self) -> dict:
        return {"t": self.t, "identity": {"terms": [x.to_json() for x in self.identity.terms]},
                "verification": self.report.to_json()}


@dataclass
class DilationTrace:
    entries: list
    continuity: float

    @property
    def passed(self) -> bool:
        return all(e.report.passed for e in self.entries)

    def to_json(self) -> dict:
        return {"passed": self.passed, "continuity": self.continuity, "entries": [e.to_json() for e in self.entries]}


def identity_for_map(f: HolomorphicMap, base: Domain, config: MembershipConfig | None = None) -> QuadratureIdentity:
    """Identity of ``f(base)`` using the fitted span representation of the Jacobian."""
    trace = membership_residual(f.jacobian_expr(), base, config=config)
    if trace.verdict != "in_span" or trace.fit is None:
        raise URepresentationMismatch(f"Jacobian was not found in the span (verdict {trace.verdict}, "
                                      f"best residual {trace.best_residual:.3e})")
    return extract_quadrature_identity(f, trace.fit)


def _coefficient_vector(q: QuadratureIdentity, keys: list) -> np.ndarray:
    return np.array([q.coefficient(node, alpha) for node, alpha in keys])


def coefficient_jump(identities: list) -> float:
    """Largest change of any identity coefficient or node between consecutive entries."""
    keys = []
    for q in identities:
        for term in q.terms:
            key = (term.node, term.alpha)
            if key not in keys:
                keys.append(key)
    jump = 0.0
    for a, b in zip(identities, identities[1:]):
        jump = max(jump, float(np.max(np.abs(_coefficient_vector(a, keys) - _coefficient_vector(b, keys)))))
        na, nb = np.array(a.nodes), np.array(b.nodes)
        if na.shape == nb.shape:
            jump = max(jump, float(np.max(np.abs(na - nb))) if na.size else 0.0)
    return jump


def dilation_qd_trace(f: HolomorphicMap, t_samples, tests=8, tol: float = 1e-5,
                      scheme: IntegrationScheme | None = None, base: Domain | None = None) -> DilationTrace:
    """Extract and verify the identity of ``phi_t(D)`` for each ``t``."""
    base = base or Disc()

    def one(t):
        phi = dilation_homotopy(f, t)
        q = identity_for_map(phi, base)
        return TraceEntry(float(t), q, verify_identity(q, tests, scheme, tol))

    entries = map_ordered(one, list(t_samples))
    return DilationTrace(entries, coefficient_jump([e.identity for e in entries]))


# convex deformation ------------------------------------------------------------------

@dataclass(frozen=True)
class DeformationRecipe:
    """Base domain, shadow function ``gamma(z')`` and Jacobian target ``g``."""

    base: Domain
    g: SpanElement
    gamma: object = field(default_factory=lambda: Const(0j))


class DeformResult(NamedTuple):
    map: HolomorphicMap
    identity: QuadratureIdentity
    closeness: float


def deformation_map(recipe: DeformationRecipe) -> HolomorphicMap:
    """``(z', U(z', z_n) + gamma(z'))`` with ``U = int_{gamma(z')}^{z_n} g(z', tau) d tau``."""
    n = recipe.base.dim
    gamma = as_expr(recipe.gamma)
    u = Antiderivative(recipe.g.as_expression(), n - 1, gamma)
    comps = tuple(Var(j) for j in range(n - 1)) + (u + gamma,)
    return HolomorphicMap(comps, name="convex deformation")


def jacobian_error(f: HolomorphicMap, g: SpanElement, points: np.ndarray) -> float:
    return float(np.max(np.abs(f.jacobian_determinant(points) - g.evaluate(points))))


def deform_convex(recipe: DeformationRecipe, grid: int = 6, scan_resolution: int = 64,
                  jacobian_tol: float = 1e-10) -> DeformResult:
    """Deformed domain, its quadrature identity and the sup-distance of the map to the identity."""
    base = recipe.base
    n = base.dim
    pts = closure_grid(base, grid)
    gvals = recipe.g.evaluate(pts)
    if np.max(np.abs(gvals - 1)) >= 1:
        raise ValueError("the Jacobian target must stay within distance 1 of the constant 1")
    gamma = as_expr(recipe.gamma)
    if n > 1:
        shadow = pts.copy()
        shadow[:, -1] = np.broadcast_to(gamma.evaluate(pts), len(pts))
        if not np.all(base.contains_many(shadow * (1 - 1e-9))):
            raise ValueError("(z', gamma(z')) leaves the base domain")
    f = deformation_map(recipe)
    err = jacobian_error(f, recipe.g, pts)
    if err > jacobian_tol:
        raise ValueError(f"Jacobian of the deformation differs from g by {err:.3e}")
    scan = injectivity_scan(f, base, scan_resolution)
    if not scan.injective_on_sample:
        raise UnivalenceSampleFailure(f"deformation failed the injectivity scan (witness {scan.witness})")
    q = extract_quadrature_identity(f, recipe.g)
    closeness = float(np.max(np.linalg.norm(f.evaluate(pts) - pts, axis=-1)))
    return DeformResult(f, q, closeness)


__all__ = [
    "ConstantSchedule",
    "DeformResult",
    "DeformationRecipe",
    "DilationTrace",
    "HomotopySchedule",
    "RescalingSchedule",
    "TraceEntry",
    "chord_arc_constant",
    "coefficient_jump",
    "deform_convex",
    "deformation_map",
    "dilation_homotopy",
    "dilation_qd_trace",
    "epsilon_criterion",
    "homotopy_schedule",
    "identity_for_map",
    "jacobian_error",
    "plateau_window",
    "rescaling_schedule",
    "straight_line_homotopy",
    "sup_distance",
    "univalence_radius",
]
