"""Momentum-space solution of tunneling through the rectangular barrier.

The transmitted wave for x > d resolves into a train of sub-packets

    psi_T(x,t) ~ sum_l e^{-X_l gamma0} (2 pi hbar)^{-1/2}
                 int e^{-i p^2 t/(2 m hbar)} e^{i p (x-d)/hbar}
                     R(p)^{2l} (1 - R(p)^2) f(p) dp,
    X_l = d (2l+1),  gamma0 = sqrt(2mV - p0^2)/hbar,

each one a copy of the freely evolved packet shifted by d, attenuated by
e^{-X_l gamma0}, and lagging by delta_x_l = 2(1+2l) hbar / sqrt(2mV - p0^2)
through the linear part of the phase of R^{2l}(1-R^2).  Delay times T_l
follow as delta_x_l m / p0; T_0 is the thick-barrier saturation value.
The reflected and in-barrier forms, the conservation identity of the two
closed factors, and the Erfc propagation kernel live here as well.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special as _sp

from .model import BarrierSpec, PhysicalScales
from .packet import (
    MomentumWindow,
    PacketSpec,
    consistency_condition,
    momentum_reference,
    variances,
)
from .quadrature import panel_nodes, phase_aware_panels

__all__ = [
    "PacketTermSummary",
    "PhaseLinearization",
    "ReflectionFactor",
    "TransmissionFactors",
    "barrier_wavefunction",
    "closed_factors",
    "conservation_check",
    "delay_times",
    "free_evolution",
    "kernel_K",
    "kernel_U0",
    "momentum_domain",
    "phase_linearization",
    "reflection_factor",
    "rho",
    "transmitted_factor_series",
    "transmitted_term",
    "transmitted_wavefunction",
    "reflected_wavefunction",
]

VALIDITY_TIME_FACTOR = 10.0  # results at t < 10 hbar/V carry a warning
TRUNCATION_THRESHOLD = 1e-15


@dataclass(frozen=True)
class ReflectionFactor:
    """Stationary reflection amplitude R = -1 + 2k - 2 sqrt(k(k-1)), k = p^2/(2mV)."""

    value: complex
    k: float

    @property
    def magnitude(self) -> float:
        return abs(self.value)

    @property
    def arg(self) -> float:
        return cmath.phase(self.value)


def _reflection_value(k) -> np.ndarray:
    """Branch fixed to -1 + 2k - 2i sqrt(k(1-k)) below the barrier top."""
    k = np.asarray(k, dtype=float)
    below = k < 1.0
    out = np.empty(k.shape, dtype=complex)
    kb = k[below]
    out[below] = -1.0 + 2.0 * kb - 2j * np.sqrt(kb * (1.0 - kb))
    ka = k[~below]
    out[~below] = -1.0 + 2.0 * ka - 2.0 * np.sqrt(ka * (ka - 1.0))
    return out


def reflection_factor(p: float, barrier: BarrierSpec) -> ReflectionFactor:
    """R(p) with the tunneling branch; k = 1 and p = 0 are branch points and rejected."""
    if not (p > 0):
        raise ValueError(f"p must be > 0, got {p}")
    k = barrier.k0(p)
    if abs(k - 1.0) < 1e-12:
        raise ValueError("k = 1 is the square-root branch point; R is not defined there")
    return ReflectionFactor(value=complex(_reflection_value(k)), k=k)


def rho(s: complex, barrier: BarrierSpec) -> complex:
    """Transfer symbol rho(s) = 2/(1 + sqrt(1 - V/(i hbar s))) - 1 (principal root).

    On the stationary ray i hbar s = p^2/(2m) it reduces to R(p).
    """
    if s == 0:
        raise ValueError("rho(s) is singular at s = 0")
    hbar = barrier.scales.hbar
    return 2.0 / (1.0 + np.sqrt(1.0 - barrier.V / (1j * hbar * np.asarray(s, dtype=complex)))) - 1.0


def kernel_U0(x: float, p, t: float, barrier: BarrierSpec):
    """Non-oscillatory part of the kernel for p^2 < 2mV:
    (2 pi hbar)^{-1/2} e^{-i p^2 t/(2 m hbar)} e^{-x sqrt(2mV - p^2)/hbar}."""
    sc = barrier.scales
    p = np.asarray(p, dtype=float)
    g = np.sqrt(2.0 * sc.mass * barrier.V - p**2)
    return (np.exp(-1j * p**2 * t / (2 * sc.mass * sc.hbar) - x * g / sc.hbar)
            / math.sqrt(2 * math.pi * sc.hbar))


def kernel_K(x: float, p, t: float, barrier: BarrierSpec):
    """Erfc propagation kernel, evaluated through the scaled Faddeeva function.

    K(x,p,t) = e^{-iVt/hbar + i m x^2/(2 hbar t)} / (2 sqrt(2 pi hbar))
               * [w(c1 + c2 q) + w(c1 - c2 q)],
    c1 = e^{i pi/4} x sqrt(m/(2 hbar t)), c2 = e^{i pi/4} sqrt(t/(2 hbar m)),
    q = sqrt(p^2 - 2mV) (principal; +i sqrt(2mV - p^2) below the top).
    Combining the e^{-A^2} factors of Erfc(A) = e^{-A^2} w(iA) with the
    oscillating prefactors keeps every factor representable in doubles.
    """
    if not (t > 0):
        raise ValueError(f"t must be > 0, got {t}")
    sc = barrier.scales
    p = np.asarray(p, dtype=float)
    q = np.sqrt((p**2 - 2.0 * sc.mass * barrier.V).astype(complex))
    rot = cmath.exp(1j * math.pi / 4)
    c1 = rot * x * math.sqrt(sc.mass / (2 * sc.hbar * t))
    c2 = rot * math.sqrt(t / (2 * sc.hbar * sc.mass))
    pref = cmath.exp(-1j * barrier.V * t / sc.hbar + 1j * sc.mass * x * x / (2 * sc.hbar * t))
    out = pref / (2 * math.sqrt(2 * math.pi * sc.hbar)) * (_sp.wofz(c1 + c2 * q) + _sp.wofz(c1 - c2 * q))
    return out if np.ndim(out) else complex(out)


def momentum_domain(packet: PacketSpec, barrier: BarrierSpec | None,
                    n_sigma: float = 8.0) -> tuple[float, float]:
    """Integration window [p0 - n sigma_p, p0 + n sigma_p], clipped to (0, sqrt(2mV))."""
    _, dp2 = variances(packet.L, packet.scales.a, packet.scales.hbar)
    sigma = math.sqrt(dp2)
    lo = packet.p0 - n_sigma * sigma
    hi = packet.p0 + n_sigma * sigma
    lo = max(lo, 1e-12 * packet.p0)
    if barrier is not None:
        hi = min(hi, barrier.momentum_top())
    if not (hi > lo):
        raise ValueError("empty momentum integration window")
    return lo, hi


def _momentum_nodes(packet: PacketSpec, barrier: BarrierSpec | None, x_span: float,
                    t: float, n_sigma: float = 8.0) -> tuple[np.ndarray, np.ndarray]:
    sc = packet.scales
    lo, hi = momentum_domain(packet, barrier, n_sigma)
    span = abs(hi**2 - lo**2) * t / (2 * sc.mass * sc.hbar) + x_span * (hi - lo) / sc.hbar
    return panel_nodes(lo, hi, phase_aware_panels(lo, hi, span))


def free_evolution(f: Callable[[np.ndarray], np.ndarray], x, t: float,
                   scales: PhysicalScales, sign: int = +1, *,
                   p_window: tuple[float, float], n_panels: int | None = None):
    """Free propagation (2 pi hbar)^{-1/2} int e^{-i p^2 t/(2m hbar)} e^{+/- i p x/hbar} f(p) dp.

    At t = 0 this inverts the momentum representation.  The window must cover
    the support of f to the required accuracy.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    scalar_in = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    lo, hi = p_window
    span = abs(hi**2 - lo**2) * t / (2 * scales.mass * scales.hbar) \
        + float(np.max(np.abs(x))) * (hi - lo) / scales.hbar
    pts, wts = panel_nodes(lo, hi, n_panels or phase_aware_panels(lo, hi, span))
    amp = wts * f(pts) * np.exp(-1j * pts**2 * t / (2 * scales.mass * scales.hbar))
    phases = np.exp(1j * sign * np.outer(x, pts) / scales.hbar)
    out = phases @ amp / math.sqrt(2 * math.pi * scales.hbar)
    if not np.all(np.isfinite(out)):
        raise RuntimeError(
            f"momentum quadrature produced non-finite values on [{lo:g}, {hi:g}] "
            f"at t = {t:g} ({len(pts)} nodes); check f for singularities"
        )
    return complex(out[0]) if scalar_in else out


@dataclass(frozen=True)
class TermResult:
    """A transmitted sub-packet evaluation with its validity flags."""

    values: np.ndarray
    l: int
    attenuation: float
    consistency_ok: bool
    time_valid: bool


def _check_tunneling(packet: PacketSpec, barrier: BarrierSpec) -> float:
    k0 = barrier.k0(packet.p0)
    if not (0.0 < k0 < 1.0):
        raise ValueError(
            f"series solutions require the tunneling regime 0 < k0 < 1, got k0 = {k0:g}"
        )
    return k0


def attenuation(l: int, packet: PacketSpec, barrier: BarrierSpec) -> float:
    """Magnitude e^{-d(2l+1) sqrt(2mV - p0^2)/hbar} of sub-packet l."""
    return math.exp(-barrier.d * (2 * l + 1) * barrier.gamma(packet.p0))


def transmitted_term(l: int, x, t: float, packet: PacketSpec, barrier: BarrierSpec,
                     window: "MomentumWindow | None" = None) -> TermResult:
    """Sub-packet l of the transmitted wave (phase-resolved R(p) kept in the integral).

    When a momentum window is supplied, the relevance condition for this l is
    evaluated and a violation is flagged on the result (not raised).
    """
    if l < 0:
        raise ValueError(f"l must be >= 0, got {l}")
    if not (t > 0):
        raise ValueError(f"t must be > 0, got {t}")
    k0 = _check_tunneling(packet, barrier)
    sc = packet.scales
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xd = x - barrier.d
    pts, wts = _momentum_nodes(packet, barrier, float(np.max(np.abs(xd))), t)
    k = pts**2 / (2 * sc.mass * barrier.V)
    R = _reflection_value(k)
    amp = wts * momentum_reference(pts, packet) * R ** (2 * l) * (1.0 - R * R) \
        * np.exp(-1j * pts**2 * t / (2 * sc.mass * sc.hbar))
    vals = np.exp(1j * np.outer(xd, pts) / sc.hbar) @ amp / math.sqrt(2 * math.pi * sc.hbar)
    vals = attenuation(l, packet, barrier) * vals
    consistency_ok = True
    if window is not None:
        rec = consistency_condition(barrier.D, l, packet.P0, k0, window, packet.L)
        consistency_ok = rec.satisfied
    time_valid = t >= VALIDITY_TIME_FACTOR * sc.hbar / barrier.V
    return TermResult(values=vals, l=l, attenuation=attenuation(l, packet, barrier),
                      consistency_ok=consistency_ok, time_valid=time_valid)


@dataclass(frozen=True)
class TransmissionFactors:
    """The p0-frozen closed factors of the reflected/transmitted packets."""

    reflected: complex
    transmitted: complex

    def conservation(self) -> float:
        return abs(self.reflected) ** 2 + abs(self.transmitted) ** 2


def closed_factors(k0: float, thickness: float) -> TransmissionFactors:
    """Closed factors at opacity thickness = d sqrt(2mV - p0^2)/hbar.

    transmitted = e^{-dg} (1 - R^2) / (1 - e^{-2dg} R^2),
    reflected   = R (1 - e^{-2dg}) / (1 - e^{-2dg} R^2);
    |reflected|^2 + |transmitted|^2 = 1 for unimodular R.
    """
    if not (0.0 < k0 < 1.0):
        raise ValueError(f"tunneling regime requires 0 < k0 < 1, got {k0}")
    if not (thickness > 0):
        raise ValueError(f"thickness must be > 0, got {thickness}")
    R = complex(_reflection_value(k0))
    eta2 = math.exp(-2.0 * thickness)
    den = 1.0 - eta2 * R * R
    return TransmissionFactors(
        reflected=R * (1.0 - eta2) / den,
        transmitted=math.exp(-thickness) * (1.0 - R * R) / den,
    )


def conservation_check(k0: float, thickness: float) -> float:
    """|reflected factor|^2 + |transmitted factor|^2; equals 1 identically."""
    return closed_factors(k0, thickness).conservation()


def transmitted_factor_series(k0: float, thickness: float, l_max: int) -> complex:
    """Partial sum sum_{l<=l_max} e^{-(2l+1) dg} R^{2l} (1 - R^2) of the closed factor."""
    R = complex(_reflection_value(k0))
    total = 0.0 + 0.0j
    for l in range(l_max + 1):
        total += math.exp(-(2 * l + 1) * thickness) * R ** (2 * l) * (1.0 - R * R)
    return total


def truncation_l_max(thickness: float, threshold: float = TRUNCATION_THRESHOLD) -> int:
    """First l whose attenuation relative to l = 0 drops below the threshold."""
    if not (thickness > 0):
        raise ValueError(f"thickness must be > 0, got {thickness}")
    return max(0, math.ceil(-math.log(threshold) / (2.0 * thickness)))


@dataclass(frozen=True)
class TransmittedField:
    values: np.ndarray
    l_max: int
    truncation_rule: str
    time_valid: bool


def transmitted_wavefunction(x, t: float, packet: PacketSpec, barrier: BarrierSpec,
                             l_max: int | None = None, mode: str = "closed",
                             enforce_consistency: bool = False,
                             consistency_l_max: int | None = None) -> TransmittedField:
    """Transmitted wave for x > d: closed geometric factor or truncated term sum.

    Both modes multiply the freely evolved packet shifted by d; the sum mode
    uses the p0-frozen per-term factors, so the two agree to the truncation
    threshold.  With ``enforce_consistency`` the series is additionally capped
    at the last l passing the relevance condition (pass it via
    ``consistency_l_max``), and the binding rule is recorded.
    """
    if mode not in ("closed", "sum"):
        raise ValueError(f"mode must be 'closed' or 'sum', got {mode!r}")
    k0 = _check_tunneling(packet, barrier)
    sc = packet.scales
    thickness = barrier.d * barrier.gamma(packet.p0)
    free = free_evolution(lambda p: momentum_reference(p, packet),
                          np.asarray(x, dtype=float) - barrier.d, t, sc, +1,
                          p_window=momentum_domain(packet, barrier))
    rule = "closed-form"
    if mode == "closed":
        factor = closed_factors(k0, thickness).transmitted
        l_used = -1
    else:
        l_att = truncation_l_max(thickness) if l_max is None else l_max
        rule = "attenuation-threshold" if l_max is None else "explicit-l-max"
        l_used = l_att
        if enforce_consistency and consistency_l_max is not None and consistency_l_max < l_att:
            l_used = consistency_l_max
            rule = "consistency-condition"
        factor = transmitted_factor_series(k0, thickness, l_used)
    time_valid = t >= VALIDITY_TIME_FACTOR * sc.hbar / barrier.V
    return TransmittedField(values=factor * np.atleast_1d(free), l_max=l_used,
                            truncation_rule=rule, time_valid=time_valid)


def reflected_wavefunction(x, t: float, packet: PacketSpec, barrier: BarrierSpec):
    """Wave on x < 0: incoming free packet plus the mirrored reflected packet."""
    k0 = _check_tunneling(packet, barrier)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x >= 0):
        raise ValueError("reflected_wavefunction is defined for x < 0")
    sc = packet.scales
    thickness = barrier.d * barrier.gamma(packet.p0)
    window = momentum_domain(packet, None, n_sigma=10.0)
    f = lambda p: momentum_reference(p, packet)
    incoming = free_evolution(f, x, t, sc, +1, p_window=window)
    mirrored = free_evolution(f, x, t, sc, -1, p_window=window)
    return incoming + closed_factors(k0, thickness).reflected * np.atleast_1d(mirrored)


def barrier_wavefunction(x, t: float, packet: PacketSpec, barrier: BarrierSpec):
    """Wave inside 0 < x < d: evanescent profile times the x-independent integral.

    factor(x) = [1 - e^{-2(d-x) g} R] / (1 - e^{-2 d g} R^2) (R+1) e^{-x g};
    as d -> infinity it reduces to the potential-step factor (1+R) e^{-x g}.
    """
    k0 = _check_tunneling(packet, barrier)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any((x <= 0) | (x >= barrier.d)):
        raise ValueError("barrier_wavefunction is defined for 0 < x < d")
    sc = packet.scales
    g = barrier.gamma(packet.p0)
    R = complex(_reflection_value(k0))
    den = 1.0 - math.exp(-2.0 * barrier.d * g) * R * R
    factor = (1.0 - np.exp(-2.0 * (barrier.d - x) * g) * R) / den * (R + 1.0) * np.exp(-x * g)
    phi = free_evolution(lambda p: momentum_reference(p, packet), np.array([0.0]), t, sc, +1,
                         p_window=momentum_domain(packet, None, n_sigma=10.0))
    return factor * np.atleast_1d(phi)[0]


@dataclass(frozen=True)
class PhaseLinearization:
    """First-order phase data of R and 1 - R^2 at p0."""

    arg_R: float
    arg_1mR2: float
    slope: float


def phase_linearization(p0: float, barrier: BarrierSpec) -> PhaseLinearization:
    """arg R = -Arccos(2k0-1), arg(1-R^2) = Arctan[(2k0-1)/(2 sqrt(k0-k0^2))],
    common slope 2/sqrt(2mV - p0^2) per unit (p - p0).

    Re R = 2k - 1 for every square-root branch, so -Arccos(2k-1) is the only
    arccos form consistent with the branch pinned here (and the only one whose
    derivative reproduces the positive slope); at k0 = 1/2 it equals -pi/2.
    """
    k0 = barrier.k0(p0)
    if not (0.0 < k0 < 1.0):
        raise ValueError(f"phase linearization requires 0 < k0 < 1, got k0 = {k0:g}")
    sc = barrier.scales
    return PhaseLinearization(
        arg_R=-math.acos(2.0 * k0 - 1.0),
        arg_1mR2=math.atan((-1.0 + 2.0 * k0) / (2.0 * math.sqrt(k0 - k0 * k0))),
        slope=2.0 / math.sqrt(2.0 * sc.mass * barrier.V - p0**2),
    )


@dataclass(frozen=True)
class PacketTermSummary:
    """Per-sub-packet record: attenuation, phase slope, shift, delay, centroid."""

    l: int
    attenuation: float
    phase_slope: float
    shift: float
    delay: float
    centroid: float | None = None


def delay_times(l: int, p0: float, barrier: BarrierSpec,
                scales: PhysicalScales | None = None) -> PacketTermSummary:
    """Shift delta_x_l = 2(1+2l) hbar/sqrt(2mV - p0^2) and delay T_l = delta_x_l m/p0.

    Independent of the width d; d enters only the attenuation magnitude.
    T_0 is the thick-barrier (Hartmann) saturation time 2 m hbar/(p0 sqrt(2mV-p0^2)).
    """
    if l < 0:
        raise ValueError(f"l must be >= 0, got {l}")
    sc = scales or barrier.scales
    k0 = barrier.k0(p0)
    if not (0.0 < k0 < 1.0):
        raise ValueError(f"delay times require 0 < k0 < 1, got k0 = {k0:g}")
    root = math.sqrt(2.0 * sc.mass * barrier.V - p0**2)
    shift = 2.0 * (1 + 2 * l) * sc.hbar / root
    return PacketTermSummary(
        l=l,
        attenuation=math.exp(-barrier.d * (2 * l + 1) * root / sc.hbar),
        phase_slope=2.0 * (1 + 2 * l) / root,
        shift=shift,
        delay=shift * sc.mass / p0,
    )


def hartmann_time(p0: float, barrier: BarrierSpec) -> float:
    """Thick-barrier delay T_0 = 2 m hbar / (p0 sqrt(2mV - p0^2))."""
    return delay_times(0, p0, barrier).delay


def distinguishability_ratio(packet: PacketSpec, barrier: BarrierSpec) -> float:
    """(delta_x_{l+1} - delta_x_l)/Delta x ~ (8 Delta p/p0) sqrt(k0/(1-k0))."""
    k0 = _check_tunneling(packet, barrier)
    dx2, _ = variances(packet.L, packet.scales.a, packet.scales.hbar)
    d0 = delay_times(0, packet.p0, barrier)
    d1 = delay_times(1, packet.p0, barrier)
    return (d1.shift - d0.shift) / math.sqrt(dx2)
