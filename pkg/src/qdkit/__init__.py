"""Numerical toolkit for quadrature domains in one and several complex variables."""

__version__ = "0.1.0"

from .geometry import Ball, CircleDomain, Disc, Domain, Image, Polydisc, Product, domain_from_json
from .homotopy import dilation_homotopy, homotopy_schedule, straight_line_homotopy, univalence_radius
from .jets import Jet
from .kernels import kernel_derivative, kernel_eval, transform_kernel
from .maps import HolomorphicMap, injectivity_scan, named_map
from .span import SpanElement, kernel_span, membership_residual
from .transport import QuadratureIdentity, extract_quadrature_identity
from .verify import integrate, qdp_check, verify_identity

__all__ = [
    "Ball", "CircleDomain", "Disc", "Domain", "Image", "Polydisc", "Product", "domain_from_json",
    "dilation_homotopy", "homotopy_schedule", "straight_line_homotopy", "univalence_radius",
    "Jet", "kernel_derivative", "kernel_eval", "transform_kernel",
    "HolomorphicMap", "injectivity_scan", "named_map",
    "SpanElement", "kernel_span", "membership_residual",
    "QuadratureIdentity", "extract_quadrature_identity",
    "integrate", "qdp_check", "verify_identity",
]
