"""Quadrature helpers shared by the momentum-space evaluators.

Two layers: an adaptive Gauss-Kronrod wrapper for scalar complex integrands
(relative target 1e-11, absolute floor 1e-15), and fixed panelised
Gauss-Legendre nodes for vectorised field evaluations, with the panel count
chosen from the integrand's phase span so oscillations stay resolved.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy import integrate

__all__ = ["complex_quad", "panel_nodes", "phase_aware_panels"]

REL_TARGET = 1e-11
ABS_FLOOR = 1e-15

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(40)


def complex_quad(f: Callable[[float], complex], a: float, b: float,
                 rel: float = REL_TARGET, abs_floor: float = ABS_FLOOR,
                 limit: int = 400) -> complex:
    """Adaptive quadrature of a complex scalar integrand on [a, b]."""
    val, err = integrate.quad(f, a, b, epsabs=abs_floor, epsrel=rel,
                              limit=limit, complex_func=True)
    if not np.isfinite(val):
        raise RuntimeError(f"quadrature failed on [{a}, {b}]: value {val}, error estimate {err}")
    return val


def panel_nodes(a: float, b: float, n_panels: int) -> tuple[np.ndarray, np.ndarray]:
    """Flat Gauss-Legendre nodes/weights for n_panels equal panels on [a, b]."""
    if not (b > a):
        raise ValueError(f"need b > a, got [{a}, {b}]")
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    pts = (half[:, None] * _GL_NODES[None, :] + mid[:, None]).ravel()
    wts = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return pts, wts


def phase_aware_panels(a: float, b: float, phase_span: float, minimum: int = 24) -> int:
    """Panel count keeping <= ~20 rad of phase per 40-node panel."""
    if not math.isfinite(phase_span):
        raise ValueError("phase_span must be finite")
    return max(minimum, int(abs(phase_span) / 20.0) + 1)
