"""Minimal SVG output for planar boundaries."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .geometry import BOUNDARY_POINTS, CircleDomain, Disc, Domain, Image, Product

SIZE = 480
MARGIN = 20


def boundary_loops(domain: Domain, points: int = BOUNDARY_POINTS) -> list[np.ndarray]:
    """Closed planar curves bounding ``domain``.

    Higher-dimensional domains are drawn through their slice in the last
    coordinate with the other coordinates at the center.
    """
    if domain.dim == 1:
        if isinstance(domain, Image):
            return [domain.map.evaluate(c[:, None])[:, 0] for c in boundary_loops(domain.base, points)]
        if isinstance(domain, (Disc, CircleDomain)):
            return domain.boundary_curves(points)
        raise NotImplementedError(f"no boundary for {type(domain).__name__}")
    if isinstance(domain, Image):
        base = domain.base
        if not isinstance(base, Product):
            raise NotImplementedError("slices are drawn for product bases")
        curve = boundary_loops(base.factors[-1], points)[0]
        pts = np.tile(base.center_point(), (len(curve), 1))
        pts[:, -1] = curve
        return [domain.map.evaluate(pts)[:, -1]]
    if isinstance(domain, Product):
        return boundary_loops(domain.factors[-1], points)
    raise NotImplementedError(f"no boundary for {type(domain).__name__}")


def _path(curve: np.ndarray, lo: np.ndarray, scale: float) -> str:
    x = MARGIN + (curve.real - lo[0]) * scale
    y = SIZE - MARGIN - (curve.imag - lo[1]) * scale
    pts = " L ".join(f"{a:.3f} {b:.3f}" for a, b in zip(x, y))
    return f"M {pts} Z"


def render(loops: list[np.ndarray], title: str = "") -> str:
    """SVG document filling the region bounded by ``loops`` with the even-odd rule."""
    allpts = np.concatenate(loops)
    lo = np.array([allpts.real.min(), allpts.imag.min()])
    hi = np.array([allpts.real.max(), allpts.imag.max()])
    scale = (SIZE - 2 * MARGIN) / max(float(np.max(hi - lo)), 1e-12)
    d = " ".join(_path(c, lo, scale) for c in loops)
    head = f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">'
    parts = [head]
    if title:
        parts.append(f"<title>{title}</title>")
    parts.append(f'<path d="{d}" fill="#9ecae1" fill-rule="evenodd" stroke="#08519c" stroke-width="1"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_domain(domain: Domain, path, title: str = "") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render(boundary_loops(domain), title))
    return path


def write_frames(domains: list, directory, stem: str = "frame") -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    for i, (label, dom) in enumerate(domains):
        out.append(write_domain(dom, directory / f"{stem}_{i:03d}.svg", label))
    return out
