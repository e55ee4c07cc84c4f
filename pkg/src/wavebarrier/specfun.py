"""Special functions used by the propagation kernel and the closed forms.

Complex error functions are routed through the scaled Faddeeva function
w(z) = e^{-z^2} erfc(-iz): products of growing exponentials with decaying
erfc factors are representable only in that combined form.  Evaluation is
delegated to scipy.special behind the range-checked surfaces below; the
high-precision references used to qualify them live in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

__all__ = [
    "AccuracySpec",
    "bessel_j",
    "erf_real",
    "erfc_complex",
    "faddeeva",
    "gamma_real",
]

_BESSEL_L_MAX = 64
_BESSEL_X_MAX = 1e6
_GAMMA_X_MAX = 50.0


@dataclass(frozen=True)
class AccuracySpec:
    """Accuracy contract for the special-function layer."""

    target_rel_error: float = 1e-12
    max_argument: float = 50.0

    def __post_init__(self) -> None:
        if not (0.0 < self.target_rel_error <= 1e-6):
            raise ValueError(f"target_rel_error must be in (0, 1e-6], got {self.target_rel_error}")


def _check_finite(z: complex | float, name: str) -> None:
    if not np.all(np.isfinite(np.atleast_1d(z))):
        raise ValueError(f"{name} requires finite input, got {z!r}")


def faddeeva(z):
    """Scaled complex error function w(z) = e^{-z^2} erfc(-iz).

    Accepts scalars or arrays; no overflow for Im z >= 0.
    """
    _check_finite(z, "faddeeva")
    return _sp.wofz(z)


def erfc_complex(z):
    """Complementary error function of a complex argument, erfc(z) = e^{-z^2} w(iz).

    Raises OverflowError where |e^{-z^2}| overflows double precision (the
    function value itself is not representable there; use :func:`faddeeva`
    and keep the exponent symbolic instead).
    """
    _check_finite(z, "erfc_complex")
    z = np.asarray(z, dtype=complex)
    expo = -(z * z)
    if np.any(expo.real > 709.0):
        raise OverflowError(
            "erfc overflows double precision for Re(z^2) < -709; "
            "evaluate via faddeeva() with the exponential factored out"
        )
    out = np.exp(expo) * _sp.wofz(1j * z)
    return out if out.ndim else complex(out)


def erf_real(x):
    """Real error function; erf + erfc = 1 on the real line."""
    _check_finite(x, "erf_real")
    return _sp.erf(x)


def bessel_j(l: int, x):
    """Bessel function of the first kind J_l(x) for integer order 0 <= l <= 64."""
    if not (isinstance(l, (int, np.integer)) and 0 <= l <= _BESSEL_L_MAX):
        raise ValueError(f"order must be an integer in [0, {_BESSEL_L_MAX}], got {l!r}")
    x_arr = np.asarray(x, dtype=float)
    _check_finite(x_arr, "bessel_j")
    if np.any(x_arr < 0) or np.any(x_arr > _BESSEL_X_MAX):
        raise ValueError(f"argument must lie in [0, {_BESSEL_X_MAX:g}]")
    out = _sp.jv(l, x_arr)
    return out if out.ndim else float(out)


def gamma_real(x: float) -> float:
    """Gamma function on (0, 50]."""
    _check_finite(x, "gamma_real")
    if not (0.0 < x <= _GAMMA_X_MAX):
        raise ValueError(f"gamma_real supports 0 < x <= {_GAMMA_X_MAX:g}, got {x}")
    return float(_sp.gamma(x))
