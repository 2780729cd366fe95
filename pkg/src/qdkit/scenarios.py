"""Bundled scenario catalog.

Each scenario is plain JSON-like data: a domain, a map, the default
subcommand, parameters and tolerances.  Scenarios whose interesting outcome
is a negative membership verdict carry ``expected`` verdicts.  For QDP
tables the keys are ``"u"`` (the Jacobian alone), ``"f<i>"`` (powers of the
i-th component only) and ``"all"``.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import SpecParseError, UnknownScenario

Z1 = "z1"
Z2 = "z2"


def _poly(*terms):
    """``sum c * z^k`` in one variable as prefix JSON, ``terms = [(c, k), ...]``."""
    parts = []
    for c, k in terms:
        mono = Z1 if k == 1 else {"pow": [Z1, k]}
        parts.append(c if k == 0 else (mono if c == 1 else {"mul": [c, mono]}))
    return parts[0] if len(parts) == 1 else {"add": parts}


UNIT_DISC = {"kind": "disc", "center": [0.0, 0.0], "radius": 1.0}
UNIT_BIDISC = {"kind": "polydisc", "n": 2, "radius": 1.0}


@dataclass(frozen=True)
class Scenario:
    id: str
    description: str
    command: str
    domain: dict
    map: dict | None = None
    params: dict = field(default_factory=dict)
    tolerance: float = 1e-8
    expected: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"id": self.id, "description": self.description, "command": self.command,
               "domain": self.domain, "params": self.params, "tolerance": self.tolerance}
        if self.map is not None:
            out["map"] = self.map
        if self.expected:
            out["expected"] = self.expected
        return out

    @classmethod
    def from_json(cls, obj: dict, default_id: str = "inline") -> "Scenario":
        if not isinstance(obj, dict):
            raise SpecParseError("a scenario spec must be a JSON object")
        if "domain" not in obj:
            raise SpecParseError("a scenario spec needs a 'domain'")
        return cls(
            id=str(obj.get("id", default_id)),
            description=str(obj.get("description", "")),
            command=str(obj.get("command", "identity")),
            domain=obj["domain"],
            map=obj.get("map"),
            params=dict(obj.get("params", {})),
            tolerance=float(obj.get("tolerance", 1e-8)),
            expected=dict(obj.get("expected", {})),
        )


_CATALOG = [
    Scenario(
        "disc-mean-value",
        "Mean value identity of the unit disc: int g = pi g(0).",
        "identity",
        UNIT_DISC,
        {"named": "identity", "n": 1},
        {"degree": 10},
        1e-8,
    ),
    Scenario(
        "bidisc-product",
        "Product of two disc identities on the bidisc: int g = pi^2 g(0).",
        "identity",
        UNIT_BIDISC,
        {"named": "identity", "n": 2},
        {"degree": 10, "product": True},
        1e-8,
    ),
    Scenario(
        "cardioid",
        "Image of the disc under z + 0.3 z^2: two-term identity at the origin.",
        "identity",
        UNIT_DISC,
        {"named": "cardioid", "c": 0.3},
        {"degree": 8},
        1e-5,
    ),
    Scenario(
        "bergman-coordinate-not-qd",
        "Map built from kernel quotients whose Jacobian -1/(3-z1-z2)^2 is not in the span.",
        "membership",
        UNIT_BIDISC,
        {"named": "bergman-coordinate"},
        {"candidate": "jacobian"},
        1e-6,
        {"jacobian": "not_in_span"},
    ),
    Scenario(
        "exp-qd-not-qdp",
        "Image of the bidisc under (z1 + exp(z1+z2), z1+z2): quadrature domain that is not QDP.",
        "qdp-check",
        UNIT_BIDISC,
        {"named": "exp-shear"},
        {"max_degree": 3, "alphas": "axes", "degree": 6},
        1e-5,
        {"u": "in_span", "f1": "not_in_span", "f2": "in_span"},
    ),
    Scenario(
        "nonalgebraic-kernel",
        "Kernel of the exp-shear image against its closed form and the reproducing property.",
        "kernel",
        {"kind": "image", "base": UNIT_BIDISC, "map": {"named": "exp-shear"}},
        None,
        {"pairs": 100, "reference": "exp-shear", "points": 20, "degree": 8, "reference_tol": 1e-10},
        1e-4,
    ),
    Scenario(
        "one-point-qdp",
        "Image of the 0.4-polydisc under (z1^2 - z2, z1 + z2): one-node QDP.",
        "qdp-check",
        {"kind": "polydisc", "n": 2, "radius": 0.4},
        {"named": "one-point"},
        {"max_degree": 2, "degree": 6},
        1e-5,
        {"all": "in_span"},
    ),
    Scenario(
        "dilation-homotopy",
        "Dilations f(tz)/t of z + 0.3 z^2 with the identity extracted at each t.",
        "homotopy",
        UNIT_DISC,
        {"components": [_poly((1, 1), (0.3, 2))], "name": "z+0.3z^2"},
        {"mode": "dilation", "samples": 50, "degree": 8},
        1e-5,
    ),
    Scenario(
        "straight-line-epsilon",
        "Straight line from the identity to a cubic perturbation below the chord-arc bound.",
        "homotopy",
        UNIT_DISC,
        {"named": "identity", "n": 1},
        {"mode": "straight-line", "target": {"components": [_poly((1, 1), (0.2, 2), (-0.1, 3))]},
         "samples": 11, "degree": 8, "scan_resolution": 200},
        1e-5,
    ),
    Scenario(
        "convex-deform",
        "Bidisc deformed by integrating g = 1 + 0.4 z2 in the last variable.",
        "deform",
        UNIT_BIDISC,
        None,
        {"g": {"add": [1, {"mul": [0.4, Z2]}]}, "g_degree": 1, "gamma": 0, "degree": 6,
         "expected_closeness": 0.2},
        1e-5,
    ),
    Scenario(
        "chord-arc-two-holes",
        "Paths around two holes stay inside and within pi/2 times the chord.",
        "chord-arc",
        {"kind": "circle-domain", "outer": UNIT_DISC,
         "holes": [{"kind": "disc", "center": [-0.45, 0.0], "radius": 0.2},
                   {"kind": "disc", "center": [0.45, 0.1], "radius": 0.25}]},
        None,
        {"trials": 1000, "points": 512},
        1e-12,
    ),
    Scenario(
        "rescaling-schedule",
        "Family z + sin(pi t) z^2 whose univalence radius dips to 1/2; rescaling k <= r.",
        "homotopy",
        UNIT_DISC,
        None,
        {"mode": "schedule", "family": "quadratic-sine", "samples": 21, "scan_resolution": 64},
        1e-3,
    ),
]

CATALOG = {s.id: s for s in _CATALOG}


def catalog() -> list[Scenario]:
    return list(_CATALOG)


def get_scenario(name: str) -> Scenario:
    try:
        return copy.deepcopy(CATALOG[name])
    except KeyError as exc:
        raise UnknownScenario(f"unknown scenario {name!r}; run 'qd catalog' for the list") from exc


def load_spec(text: str) -> Scenario:
    """Scenario from inline JSON or a path to a JSON file."""
    path = Path(text)
    source = text
    try:
        if not text.lstrip().startswith("{") and path.exists():
            source = path.read_text()
        obj = json.loads(source)
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecParseError(f"cannot read scenario spec: {exc}") from exc
    return Scenario.from_json(obj)


def exp_shear_kernel(zeta, omega) -> np.ndarray:
    """Closed-form kernel of the exp-shear image of the bidisc."""
    zeta = np.asarray(zeta, dtype=complex)
    omega = np.asarray(omega, dtype=complex)
    a1 = zeta[..., 0] - np.exp(zeta[..., 1])
    b1 = omega[..., 0] - np.exp(omega[..., 1])
    a2 = zeta[..., 1] - zeta[..., 0] + np.exp(zeta[..., 1])
    b2 = omega[..., 1] - omega[..., 0] + np.exp(omega[..., 1])
    return (1 - a1 * np.conj(b1)) ** -2 * (1 - a2 * np.conj(b2)) ** -2 / np.pi**2


KERNEL_REFERENCES = {"exp-shear": exp_shear_kernel}


def quadratic_sine_family(t: float):
    from .expr import Var
    from .maps import planar_map

    z = Var(0)
    a = float(np.sin(np.pi * t))
    return planar_map(z + a * z**2, name=f"z+{a:.4g}z^2")


FAMILIES = {"quadratic-sine": quadratic_sine_family}
