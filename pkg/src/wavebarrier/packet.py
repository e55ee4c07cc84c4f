"""The compact-support initial wave packet and its closed-form attributes.

The packet is a Gaussian times a quartic cut-off polynomial,

    psi(x) = N^{-1/2} e^{i p0 (x-x0)/hbar} e^{-(x-x0)^2/(2a)}
             [(x-x0)^2/a - L^2]^2          for |x-x0| < L sqrt(a),
    psi(x) = 0                             otherwise,

continuously differentiable at the support edges and vanishing identically
for x >= 0 whenever x0 + L sqrt(a) <= 0.  Its full-line extension psi0 (same
formula without the cut-off) has the Gaussian-polynomial momentum
representation f0(p) = e^{-i p x0/hbar} F(p - p0) with F real; eps is the
L2 norm of psi0 - psi.  All closed forms below share the bracket

    S(L) = e^{-L^2} B1(L) + B2(L) sqrt(pi) Erf(L),

with B1, B2 the degree-7/8 polynomials of the normalisation constant.
For L > 10 the eps-type expressions are evaluated through an exact
tail-integral identity in log space: the printed closed form cancels
roughly eight orders in L before its leading term survives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special as _sp

from .model import BarrierSpec, PhysicalScales
from .quadrature import panel_nodes

__all__ = [
    "ConsistencyRecord",
    "MomentumWindow",
    "PacketDerived",
    "PacketSpec",
    "ReferenceShift",
    "consistency_condition",
    "epsilon_norm",
    "log_epsilon_norm",
    "momentum_reference",
    "normalization",
    "packet_value",
    "reference_shift_bound",
    "tail_probability",
    "variances",
]

_LOG_SPACE_L = 10.0


def _b1(L: float) -> float:
    return 2 * L * (-105 + 50 * L**2 - 20 * L**4 + 8 * L**6)


def _b2(L: float) -> float:
    return 105 - 120 * L**2 + 72 * L**4 - 32 * L**6 + 16 * L**8


def _b1x(L: float) -> float:
    return 2 * L * (-945 + 210 * L**2 - 52 * L**4 + 8 * L**6)


def _b2x(L: float) -> float:
    return 945 - 840 * L**2 + 360 * L**4 - 96 * L**6 + 16 * L**8


def _b1p(L: float) -> float:
    return 2 * L * (-225 + 18 * L**2 + 12 * L**4 + 8 * L**6)


def _b2p(L: float) -> float:
    return 225 + 8 * L**2 * (-21 + 5 * L**2 + 4 * L**4 + 2 * L**6)


def _s_bracket(L: float) -> float:
    return math.exp(-(L**2)) * _b1(L) + _b2(L) * math.sqrt(math.pi) * _sp.erf(L)


def _poly_q(kappa: np.ndarray, L: float) -> np.ndarray:
    """Momentum-side quartic: kappa^4 + (2L^2-6) kappa^2 + (L^4 - 2L^2 + 3)."""
    k2 = kappa * kappa
    return k2 * k2 + (2 * L**2 - 6) * k2 + (L**4 - 2 * L**2 + 3)


@dataclass(frozen=True)
class PacketSpec:
    """Initial packet parameters: centre x0 < 0, momentum p0 > 0, support L sqrt(a)."""

    x0: float
    p0: float
    L: float
    scales: PhysicalScales = field(default_factory=PhysicalScales)

    def __post_init__(self) -> None:
        if not (self.p0 > 0):
            raise ValueError(f"p0 must be > 0, got {self.p0}")
        if not (self.L > 2):
            raise ValueError(f"L must be > 2 (quoted variance/eps bounds), got {self.L}")
        edge = self.x0 + self.L * self.scales.length_unit
        if edge > 0:
            raise ValueError(
                f"support must lie left of the barrier: x0 + L sqrt(a) = {edge:g} > 0"
            )

    @property
    def P0(self) -> float:
        return self.p0 / self.scales.momentum_unit

    @property
    def X0(self) -> float:
        return self.x0 / self.scales.length_unit

    def derived(self) -> "PacketDerived":
        a, hbar = self.scales.a, self.scales.hbar
        dx2, dp2 = variances(self.L, a, hbar)
        return PacketDerived(
            N=normalization(self.L, a),
            dx2=dx2,
            dp2=dp2,
            eps=epsilon_norm(self.L),
            f0=lambda p: momentum_reference(p, self),
        )


@dataclass(frozen=True)
class PacketDerived:
    """Closed-form attributes of a packet: normalisation, variances, eps, f0."""

    N: float
    dx2: float
    dp2: float
    eps: float
    f0: Callable[[np.ndarray], np.ndarray]


def normalization(L: float, a: float = 1.0) -> float:
    """Normalisation constant N = (sqrt(a)/16) S(L); psi/sqrt(N) has unit norm."""
    if not (L > 0):
        raise ValueError(f"L must be > 0, got {L}")
    return math.sqrt(a) / 16.0 * _s_bracket(L)


def packet_value(x: np.ndarray, spec: PacketSpec):
    """Initial wavefunction at position(s) x; exactly zero outside the support."""
    x = np.asarray(x, dtype=float)
    a = spec.scales.a
    root_a = spec.scales.length_unit
    u = (x - spec.x0) / root_a
    out = np.zeros(x.shape, dtype=complex)
    inside = np.abs(u) < spec.L
    ui = u[inside]
    envelope = np.exp(-(ui**2) / 2.0) * (ui**2 - spec.L**2) ** 2
    phase = np.exp(1j * spec.p0 * (x[inside] - spec.x0) / spec.scales.hbar)
    out[inside] = envelope * phase / math.sqrt(normalization(spec.L, a))
    return out if out.ndim else complex(out)


def variances(L: float, a: float = 1.0, hbar: float = 1.0) -> tuple[float, float]:
    """Position and momentum variances of the normalised packet.

    Limits a/2 and hbar^2/(2a) as L -> infinity; the e^{-L^2} bracket terms
    matter only for small L.
    """
    if not (L > 0):
        raise ValueError(f"L must be > 0, got {L}")
    s = _s_bracket(L)
    erf_term = math.sqrt(math.pi) * _sp.erf(L)
    expL = math.exp(-(L**2))
    dx2 = a * (expL * _b1x(L) + _b2x(L) * erf_term) / (2.0 * s)
    dp2 = hbar**2 * (expL * _b1p(L) + _b2p(L) * erf_term) / (2.0 * a * s)
    return dx2, dp2


def _log_tail_integral(L: float) -> float:
    """log of I(L) = int_0^inf e^{-2Lv - v^2} v^4 (2L + v)^4 dv (I -> 12/L for large L)."""
    pts, wts = panel_nodes(0.0, 30.0 / L + 6.0, 60)
    vals = np.exp(-2 * L * pts - pts**2) * pts**4 * (2 * L + pts) ** 4
    return math.log(float(np.dot(wts, vals)))


def log_epsilon_norm(L: float) -> float:
    """log of eps(L), stable for any L > 0.

    Uses the identity eps^2 = 32 e^{-L^2} I(L) / S(L) with I(L) the
    substituted outside-support integral; equal to the printed closed form
    but free of its deep cancellation.
    """
    if not (L > 0):
        raise ValueError(f"L must be > 0, got {L}")
    log_eps2 = math.log(32.0) - L**2 + _log_tail_integral(L) - math.log(_s_bracket(L))
    return 0.5 * log_eps2


def epsilon_norm(L: float) -> float:
    """L2 norm eps of the difference between the packet and its full-line extension.

    Direct closed form (Erfc bracket over S) below L = 10, log-space tail
    integral above; underflows gracefully to 0 for very large L.
    """
    if not (L > 0):
        raise ValueError(f"L must be > 0, got {L}")
    if L <= _LOG_SPACE_L:
        s = _s_bracket(L)
        num = -math.exp(-(L**2)) * _b1(L) + _b2(L) * math.sqrt(math.pi) * _sp.erfc(L)
        return math.sqrt(max(num, 0.0) / s)
    log_eps = log_epsilon_norm(L)
    return math.exp(log_eps) if log_eps > -700.0 else 0.0


def epsilon_bound(L: float) -> float:
    """Asymptotic envelope sqrt(24/sqrt(pi)) e^{-L^2/2} L^{-9/2}, valid for L > 3."""
    return math.exp(log_epsilon_bound(L))


def log_epsilon_bound(L: float) -> float:
    return 0.5 * math.log(24.0 / math.sqrt(math.pi)) - L**2 / 2.0 - 4.5 * math.log(L)


def momentum_reference(p, spec: PacketSpec):
    """Momentum representation f0(p) of the full-line reference packet.

    f0(p) = 4 a^{1/4} hbar^{-1/2} S^{-1/2} e^{-i P X0} e^{-(P-P0)^2/2} Q(P-P0)
    with Q the quartic of :func:`_poly_q`; F = |f0| is real and even in P-P0,
    so <x> = x0 and <p> = p0 exactly (up to the eps^2 normalisation).
    """
    p = np.asarray(p, dtype=float)
    sc = spec.scales
    P = p / sc.momentum_unit
    kappa = P - spec.P0
    pref = 4.0 * sc.a**0.25 / math.sqrt(sc.hbar * _s_bracket(spec.L))
    out = pref * np.exp(-(kappa**2) / 2.0) * _poly_q(kappa, spec.L) * np.exp(-1j * P * spec.X0)
    return out if out.ndim else complex(out)


@dataclass(frozen=True)
class MomentumWindow:
    """Symmetric momentum window (p_min, p_max) about p0 with p_min = 2 p0 - p_max."""

    p0: float
    K: float

    def __post_init__(self) -> None:
        if not (self.p0 > 0):
            raise ValueError(f"p0 must be > 0, got {self.p0}")
        if not (self.K >= 1.0):
            raise ValueError(f"window ratio K = p_max/p0 must be >= 1, got {self.K}")

    @property
    def p_max(self) -> float:
        return self.K * self.p0

    @property
    def p_min(self) -> float:
        return (2.0 - self.K) * self.p0

    def validate_against(self, barrier: BarrierSpec) -> None:
        top = barrier.momentum_top()
        if not (self.p_max < top):
            raise ValueError(
                f"window must stay below the barrier top: p_max = {self.p_max:g} >= sqrt(2mV) = {top:g}"
            )


def tail_probability(window: MomentumWindow, spec: PacketSpec) -> float:
    """Reference-packet probability outside (p_min, p_max), closed form.

    K = 1 is the degenerate boundary and returns the full norm 1 + eps^2.
    """
    if window.p_max < spec.p0:
        raise ValueError(f"p_max = {window.p_max:g} < p0 = {spec.p0:g}")
    if not math.isclose(window.p0, spec.p0, rel_tol=1e-12):
        raise ValueError(
            f"window is centred at p0 = {window.p0:g} but the packet has p0 = {spec.p0:g}"
        )
    L, P0 = spec.L, spec.P0
    K = window.K
    B = (K - 1.0) * P0
    W = (
        (-39 + 72 * L**2 - 88 * L**4 + 32 * L**6)
        + 2 * (K - 1) ** 2 * (83 + 24 * L**2 * (-3 + L**2)) * P0**2
        + 4 * (K - 1) ** 4 * (-17 + 8 * L**2) * P0**4
        + 8 * (K - 1) ** 6 * P0**6
    )
    num = 2.0 * math.exp(-(B**2)) * B * W + _b2(L) * math.sqrt(math.pi) * _sp.erfc(B)
    return num / abs(_s_bracket(L))


@dataclass(frozen=True)
class ConsistencyRecord:
    """Outcome of the sub-packet relevance condition for one l."""

    l: int
    lhs: float
    rhs: float
    margin: float
    satisfied: bool


_FUZZ = 0.5  # e-folds of slack for the order-of-magnitude comparison


def consistency_condition(D: float, l: int, P0: float, k0: float,
                          window: MomentumWindow, L: float) -> ConsistencyRecord:
    """Check D P0 (2l+1) sqrt((1-k0)/k0) <= -ln(eps + P_rest) (within 0.5 e-folds).

    The left side is the attenuation exponent of sub-packet l; the right side
    is the log of the neglected probability budget.
    """
    if not (0.0 < k0 < 1.0):
        raise ValueError(f"tunneling regime requires 0 < k0 < 1, got {k0}")
    if l < 0:
        raise ValueError(f"l must be >= 0, got {l}")
    spec = PacketSpec(x0=-L, p0=P0, L=L)
    window_d = MomentumWindow(p0=P0, K=window.K)
    lhs = D * P0 * (2 * l + 1) * math.sqrt((1.0 - k0) / k0)
    rhs = -math.log(epsilon_norm(L) + tail_probability(window_d, spec))
    return ConsistencyRecord(l=l, lhs=lhs, rhs=rhs, margin=rhs - lhs,
                             satisfied=lhs <= rhs + _FUZZ)


@dataclass(frozen=True)
class ReferenceShift:
    """Shift of <x> incurred by substituting the full-line reference packet."""

    delta_x_ref: float
    log_abs_delta_x_ref: float
    bound: float

    def negligible_vs(self, delta_x_l: float) -> bool:
        """True when |delta_x_ref| is at least two orders below the sub-packet shift."""
        if delta_x_l <= 0:
            raise ValueError(f"delta_x_l must be > 0, got {delta_x_l}")
        return self.log_abs_delta_x_ref < math.log(delta_x_l) - math.log(100.0)


def reference_shift_bound(spec: PacketSpec) -> ReferenceShift:
    """delta_x_ref = x0 eps^2 with envelope |x0| (24/sqrt(pi)) e^{-L^2} L^{-9}."""
    L = spec.L
    if spec.x0 == 0.0:
        return ReferenceShift(delta_x_ref=0.0, log_abs_delta_x_ref=-math.inf, bound=0.0)
    log_eps2 = 2.0 * log_epsilon_norm(L)
    log_shift = math.log(abs(spec.x0)) + log_eps2
    shift = math.copysign(math.exp(log_shift), spec.x0) if log_shift > -700.0 else 0.0
    log_bound = math.log(abs(spec.x0)) + math.log(24.0 / math.sqrt(math.pi)) - L**2 - 9.0 * math.log(L)
    bound = math.exp(log_bound) if log_bound > -700.0 else 0.0
    return ReferenceShift(delta_x_ref=shift, log_abs_delta_x_ref=log_shift, bound=bound)
