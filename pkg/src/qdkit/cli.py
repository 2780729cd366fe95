"""``qd``: batch front end over the scenario catalog.

Every run prints (or writes to ``--out``) one JSON report with schema
``qd-report/1``.  Exit codes: 0 pass, 2 verification failure, 1 error.
Scenarios whose expected outcome includes negative verdicts pass when the
verdicts match; the report then carries the raw exit code and an
``expected-negative`` annotation.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, svg
from .errors import QDError
from .expr import as_expr, from_json as expr_from_json
from .geometry import Domain, Image, chord_arc_check, domain_from_json, sample_interior
from .homotopy import (
    DeformationRecipe,
    deform_convex,
    dilation_homotopy,
    dilation_qd_trace,
    epsilon_criterion,
    homotopy_schedule,
    jacobian_error,
    straight_line_homotopy,
)
from .jets import multi_indices
from .kernels import kernel_eval
from .maps import HolomorphicMap, identity_map, injectivity_scan
from .scenarios import FAMILIES, KERNEL_REFERENCES, Scenario, catalog, get_scenario, load_spec
from .span import MembershipConfig, centered_lattice, membership_residual, polynomial_span, product_span
from .transport import extract_quadrature_identity
from .verify import (
    IntegrationScheme,
    inner_points,
    qdp_check,
    qmc_tests,
    reproducing_check,
    verify_identity,
)

SCHEMA = "qd-report/1"
EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2
COMMANDS = ("kernel", "membership", "identity", "qdp-check", "homotopy", "deform", "chord-arc", "catalog")
QMC_TOL = 1e-3


@dataclass
class Outcome:
    result: dict
    passed: bool
    negative: bool = False  # some verdict was negative or inconclusive
    frames: list = field(default_factory=list)  # (label, domain) pairs for SVG output


# JSON -------------------------------------------------------------------------

def to_jsonable(obj):
    """Plain JSON data: complex numbers as ``[re, im]``, non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k) if not isinstance(k, tuple) else ",".join(map(str, k)): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return to_jsonable(obj.item())
    if isinstance(obj, complex):
        return [to_jsonable(obj.real), to_jsonable(obj.imag)]
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if hasattr(obj, "to_json"):
        return to_jsonable(obj.to_json())
    return obj


def dumps(report: dict) -> str:
    return json.dumps(to_jsonable(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


# helpers ----------------------------------------------------------------------

def _map(sc: Scenario, dim: int) -> HolomorphicMap:
    return HolomorphicMap.from_json(sc.map) if sc.map is not None else identity_map(dim)


def _degree(sc: Scenario, args, default: int = 8) -> int:
    return int(sc.params.get("degree", default))


def _max_degree(sc: Scenario, args, default: int = 3) -> int:
    return int(args.max_degree) if args.max_degree is not None else int(sc.params.get("max_degree", default))


def _image(base: Domain, f: HolomorphicMap) -> Domain:
    return base if f.name == "identity" else Image(base, f)


def _u_representation(f: HolomorphicMap, base: Domain, product: bool):
    """Span element equal to the Jacobian, from the membership fit (per factor for products)."""
    if product:
        traces = [membership_residual(as_expr(1.0), fac) for fac in base.factors]
        if any(t.verdict != "in_span" for t in traces):
            return None, {"factors": [t.to_json() for t in traces]}
        return product_span([t.fit for t in traces]), {"factors": [t.to_json() for t in traces]}
    trace = membership_residual(f.jacobian_expr(), base)
    return (trace.fit if trace.verdict == "in_span" else None), trace.to_json()


def _qmc_report(identity, samples: int, seed: int):
    scheme = IntegrationScheme("quasi-monte-carlo", samples=samples, seed=seed)
    return verify_identity(identity, qmc_tests(identity.domain.dim), scheme, QMC_TOL)


def _expected_verdict(expected: dict, alpha: tuple) -> str | None:
    if "all" in expected:
        return expected["all"]
    nonzero = [i for i, a in enumerate(alpha) if a]
    if not nonzero:
        return expected.get("u")
    if len(nonzero) == 1:
        return expected.get(f"f{nonzero[0] + 1}")
    return None


def _alphas(spec, dim: int, max_degree: int) -> list:
    if spec == "axes":
        out = [(0,) * dim]
        for i in range(dim):
            for k in range(1, max_degree + 1):
                a = [0] * dim
                a[i] = k
                out.append(tuple(a))
        return out
    if spec is None or spec == "all":
        return [tuple(a) for a in multi_indices(dim, max_degree)]
    return [tuple(a) for a in spec]


# runners ----------------------------------------------------------------------

def run_identity(sc: Scenario, args) -> Outcome:
    base = domain_from_json(sc.domain)
    f = _map(sc, base.dim)
    u_repr, membership = _u_representation(f, base, bool(sc.params.get("product")))
    if u_repr is None:
        return Outcome({"membership": membership, "reason": "Jacobian not found in the span"}, False, True)
    q = extract_quadrature_identity(f, u_repr)
    report = verify_identity(q, _degree(sc, args), tol=sc.tolerance)
    result = {"membership": membership, "identity": q.to_json(), "verification": report.to_json()}
    passed = report.passed
    samples = int(args.qmc_samples or sc.params.get("qmc_samples", 0))
    if samples and isinstance(q.domain, Image):
        qrep = _qmc_report(q, samples, args.seed)
        result["qmc_verification"] = qrep.to_json()
        passed = passed and qrep.passed
    return Outcome(result, passed, frames=[(sc.id, _image(base, f))])


def run_membership(sc: Scenario, args) -> Outcome:
    domain = domain_from_json(sc.domain)
    cand = sc.params.get("candidate", "jacobian")
    if cand == "jacobian":
        expr = _map(sc, domain.dim).jacobian_expr()
        key = "jacobian"
    else:
        expr = expr_from_json(cand)
        key = "candidate"
    lattice = int(sc.params.get("lattice", 1))
    grid = None
    if lattice > 1:
        grid = centered_lattice(domain, lattice)
    config = MembershipConfig(max_order=int(sc.params.get("max_order", 6)), seed=args.seed)
    trace = membership_residual(expr, domain, node_grid=grid, config=config)
    expected = sc.expected.get(key)
    passed = trace.verdict == expected if expected else trace.verdict == "in_span"
    result = {"candidate": key, "trace": trace.to_json(), "best_residual": trace.best_residual,
              "expected": expected}
    return Outcome(result, passed, trace.verdict != "in_span")


def run_qdp(sc: Scenario, args) -> Outcome:
    domain = domain_from_json(sc.domain)
    f = _map(sc, domain.dim)
    alphas = _alphas(sc.params.get("alphas"), domain.dim, _max_degree(sc, args))
    expected = {a: v for a in alphas if (v := _expected_verdict(sc.expected, a)) is not None}
    table = qdp_check(f, domain, alphas=alphas, expected=expected)
    result = {"table": table.to_json(), "matches_expectations": table.matches_expectations}
    passed = table.matches_expectations
    scan = injectivity_scan(f, domain, int(sc.params.get("scan_resolution", 32)))
    result["injectivity"] = scan.to_json()
    passed = passed and scan.injective_on_sample
    zero = tuple([0] * domain.dim)
    if zero in alphas and table.row(zero).verdict == "in_span":
        q = extract_quadrature_identity(f, table.row(zero).trace.fit)
        report = verify_identity(q, _degree(sc, args, 6), tol=sc.tolerance)
        result["identity"] = q.to_json()
        result["verification"] = report.to_json()
        passed = passed and report.passed
    return Outcome(result, passed, not table.all_in_span, frames=[(sc.id, _image(domain, f))])


def run_kernel(sc: Scenario, args) -> Outcome:
    domain = domain_from_json(sc.domain)
    p = sc.params
    rep = reproducing_check(domain, degree=int(p.get("degree", 8)), count=int(p.get("points", 20)), seed=args.seed)
    result = {"reproducing": rep}
    passed = rep["max_residual"] < sc.tolerance
    ref = p.get("reference")
    if ref is not None:
        pairs = int(p.get("pairs", 100))
        pts = inner_points(domain, 2 * pairs, seed=args.seed + 1)
        z, w = pts[:pairs], pts[pairs:]
        got = kernel_eval(domain, z, w)
        want = KERNEL_REFERENCES[ref](z, w)
        err = float(np.max(np.abs(got - want) / np.abs(want)))
        tol = float(p.get("reference_tol", 1e-10))
        result["reference"] = {"name": ref, "pairs": pairs, "max_relative_error": err, "tol": tol}
        passed = passed and err < tol
    return Outcome(result, passed, frames=[(sc.id, domain)])


def _dilation(sc: Scenario, args, base: Domain, f: HolomorphicMap) -> Outcome:
    samples = int(args.frames or sc.params.get("samples", 50))
    t = np.linspace(0.0, 1.0, samples)
    trace = dilation_qd_trace(f, t, tests=_degree(sc, args), tol=sc.tolerance, base=base)
    frames = [(f"t={x:.4f}", Image(base, dilation_homotopy(f, x))) for x in t]
    return Outcome({"mode": "dilation", "trace": trace.to_json()}, trace.passed, frames=frames)


def _straight_line(sc: Scenario, args, base: Domain, f: HolomorphicMap) -> Outcome:
    p = sc.params
    g = HolomorphicMap.from_json(p["target"])
    eps = epsilon_criterion(f, base)
    boundary = np.concatenate(base.boundary_curves(720))[:, None]
    perturbation = float(np.max(np.abs(g.jacobian_determinant(boundary) - f.jacobian_determinant(boundary))))
    result = {"mode": "straight-line", "epsilon": eps, "perturbation": perturbation,
              "accepted": perturbation < eps, "target": g.to_json()}
    if not perturbation < eps:
        return Outcome(result, False, True)
    resolution = int(p.get("scan_resolution", 200))
    samples = int(args.frames or p.get("samples", 11))
    entries, frames, passed = [], [], True
    for t in np.linspace(0.0, 1.0, samples):
        phi = straight_line_homotopy(f, g, float(t))
        scan = injectivity_scan(phi, base, resolution)
        trace = membership_residual(phi.jacobian_expr(), base)
        entry = {"t": float(t), "injective_on_sample": scan.injective_on_sample, "membership": trace.to_json()}
        ok = scan.injective_on_sample and trace.verdict == "in_span"
        if trace.verdict == "in_span":
            q = extract_quadrature_identity(phi, trace.fit)
            report = verify_identity(q, _degree(sc, args), tol=sc.tolerance)
            entry["identity"] = {"terms": [x.to_json() for x in q.terms]}
            entry["verification"] = report.to_json()
            ok = ok and report.passed
        entries.append(entry)
        frames.append((f"t={t:.4f}", _image(base, phi)))
        passed = passed and ok
    result["entries"] = entries
    return Outcome(result, passed, frames=frames)


def _schedule(sc: Scenario, args, base: Domain) -> Outcome:
    p = sc.params
    family = FAMILIES[p.get("family", "quadratic-sine")]
    samples = int(args.frames or p.get("samples", 21))
    t = np.linspace(0.0, 1.0, samples)
    sched = homotopy_schedule(family, t, int(p.get("scan_resolution", 64)), float(sc.tolerance))
    k = np.asarray(sched.k(t))
    passed = bool(np.all(k <= sched.r * (1 + 1e-12)))
    frames = [(f"t={x:.4f}", Image(base, m)) for x, m in zip(t, sched.maps)]
    return Outcome({"mode": "schedule", "family": p.get("family"), "schedule": sched.to_json()}, passed, frames=frames)


def run_homotopy(sc: Scenario, args) -> Outcome:
    base = domain_from_json(sc.domain)
    mode = args.mode or sc.params.get("mode", "dilation")
    if mode == "schedule":
        return _schedule(sc, args, base)
    f = _map(sc, base.dim)
    if mode == "dilation":
        return _dilation(sc, args, base, f)
    if mode == "straight-line":
        return _straight_line(sc, args, base, f)
    raise ValueError(f"unknown homotopy mode {mode!r}")


def run_deform(sc: Scenario, args) -> Outcome:
    base = domain_from_json(sc.domain)
    p = sc.params
    g = polynomial_span(expr_from_json(p["g"]), base, int(p.get("g_degree", 1)))
    recipe = DeformationRecipe(base, g, expr_from_json(p.get("gamma", 0)))
    res = deform_convex(recipe)
    pts = sample_interior(base, "quasi-random", int(p.get("jacobian_points", 500)), seed=args.seed)
    jac = jacobian_error(res.map, g, pts)
    report = verify_identity(res.identity, _degree(sc, args, 6), tol=sc.tolerance)
    result = {"map": res.map.to_json(), "identity": res.identity.to_json(), "verification": report.to_json(),
              "jacobian_error": jac, "closeness": res.closeness}
    passed = report.passed and jac < 1e-10
    if "expected_closeness" in p:
        gap = abs(res.closeness - float(p["expected_closeness"]))
        result["closeness_error"] = gap
        passed = passed and gap <= 1e-12
    return Outcome(result, passed, frames=[(sc.id, Image(base, res.map))])


def run_chord_arc(sc: Scenario, args) -> Outcome:
    domain = domain_from_json(sc.domain)
    p = sc.params
    check = chord_arc_check(domain, int(p.get("trials", 1000)), args.seed, int(p.get("points", 512)),
                            rtol=float(sc.tolerance))
    return Outcome(check.to_json(), check.passed, frames=[(sc.id, domain)])


RUNNERS = {
    "identity": run_identity,
    "membership": run_membership,
    "qdp-check": run_qdp,
    "kernel": run_kernel,
    "homotopy": run_homotopy,
    "deform": run_deform,
    "chord-arc": run_chord_arc,
}


# entry point ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--scenario", help="catalog scenario id")
    src.add_argument("--spec", help="inline JSON scenario or path to a JSON file")
    common.add_argument("--out", help="write the JSON report here instead of stdout")
    common.add_argument("--svg", help="SVG file, or directory for homotopy frames")
    common.add_argument("--seed", type=int, default=0, help="seed for every random sample (default 0)")
    common.add_argument("--no-timestamp", action="store_true", help="omit the timestamp from the report")
    common.add_argument("--max-degree", type=int, help="largest |alpha| in QDP tables")
    common.add_argument("--frames", type=int, help="number of t samples for homotopies")
    common.add_argument("--qmc-samples", type=int, help="add a direct-sampling check with this many points")

    parser = argparse.ArgumentParser(prog="qd", description="Quadrature-domain verification toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("kernel", parents=[common], help="reproducing property and closed-form kernel checks")
    sub.add_parser("membership", parents=[common], help="membership of a candidate in the finite span")
    sub.add_parser("identity", parents=[common], help="extract and verify a quadrature identity")
    sub.add_parser("qdp-check", parents=[common], help="membership table of u * f^alpha")
    hom = sub.add_parser("homotopy", parents=[common], help="homotopies through quadrature domains")
    hom.add_argument("--mode", choices=("dilation", "straight-line", "schedule"))
    sub.add_parser("deform", parents=[common], help="deform a product domain by a prescribed Jacobian")
    sub.add_parser("chord-arc", parents=[common], help="chord-arc paths in circle domains")
    sub.add_parser("catalog", parents=[common], help="list the bundled scenarios")
    return parser


def _scenario(args) -> Scenario:
    if args.spec:
        sc = load_spec(args.spec)
    elif args.scenario:
        sc = get_scenario(args.scenario)
    else:
        raise QDError("give --scenario or --spec")
    return sc


def _write_svg(target: str, frames: list, command: str) -> list:
    if not frames:
        return []
    path = Path(target)
    if command == "homotopy" or target.endswith("/") or path.is_dir():
        return [str(p) for p in svg.write_frames(frames, path)]
    label, dom = frames[0]
    return [str(svg.write_domain(dom, path, label))]


def execute(args) -> tuple[dict, int]:
    """Run one command; returns the report and the process exit code."""
    report = {"schema": SCHEMA, "command": args.command, "seed": args.seed, "version": __version__}
    if not args.no_timestamp:
        report["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    try:
        if args.command == "catalog":
            report["scenarios"] = [{"id": s.id, "command": s.command, "description": s.description}
                                   for s in catalog()]
            report["status"] = "pass"
            report["exit_code"] = EXIT_PASS
            return report, EXIT_PASS
        sc = _scenario(args)
        report["scenario"] = sc.to_json()
        out = RUNNERS[args.command](sc, args)
        report["result"] = out.result
        if args.svg:
            report["svg"] = _write_svg(args.svg, out.frames, args.command)
    except (QDError, ValueError, NotImplementedError, KeyError, OSError) as exc:
        report["status"] = "error"
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        report["exit_code"] = EXIT_ERROR
        return report, EXIT_ERROR

    if out.passed and out.negative and sc.expected:
        report["status"] = "mixed"
        report["raw_exit_code"] = EXIT_FAIL
        report["annotations"] = ["expected-negative"]
        code = EXIT_PASS
    elif out.passed:
        report["status"] = "pass"
        code = EXIT_PASS
    else:
        report["status"] = "fail"
        code = EXIT_FAIL
    report["exit_code"] = code
    return report, code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    report, code = execute(args)
    text = dumps(report)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
