"""Inverse rho-power identities, tail bounds, and the convolution audit."""

import math

import numpy as np
import pytest
from scipy import special

from wavebarrier import laplace
from wavebarrier.analytic import rho
from wavebarrier.model import BarrierSpec
from wavebarrier.packet import PacketSpec


class TestInverseRhoPower:
    def test_small_t_limit_l1(self):
        # l = 1: J_1(x) ~ x/2 gives the limit V/(4 i hbar)
        V = 3.0
        got = laplace.inverse_rho_power(1, 1e-9, V)
        assert got == pytest.approx(V / 4j, rel=1e-6)

    def test_small_t_limit_l2(self):
        V = 3.0
        got = laplace.inverse_rho_power(2, 1e-9, V)
        assert abs(got) < 1e-8

    def test_l0_is_distributional(self):
        with pytest.raises(ValueError, match="delta"):
            laplace.inverse_rho_power(0, 1.0, 1.0)

    @pytest.mark.parametrize("l", [1, 2, 3, 4, 5, 6])
    @pytest.mark.parametrize("s_fac", [0.5, 1.0, 2.0])
    def test_forward_transform(self, l, s_fac):
        V = 1.0
        bar = BarrierSpec(V=V, d=1.0)
        s = s_fac * V
        val = laplace.complex_quad(
            lambda t: math.exp(-s * t) * laplace.inverse_rho_power(l, t, V),
            1e-300, 240.0 / s, limit=2000)
        assert val == pytest.approx(rho(s, bar) ** l, abs=1e-6)


class TestCoefficientFunctions:
    def test_delta_weights(self):
        assert laplace.coefficient_function("g", 0, 1.0).delta_weight == 1.0
        assert laplace.coefficient_function("b", 0, 1.0).delta_weight == 1.0
        for kind in ("a", "c"):
            assert laplace.coefficient_function(kind, 0, 1.0).delta_weight == 0.0
        for kind in ("a", "b", "c", "g"):
            assert laplace.coefficient_function(kind, 1, 1.0).delta_weight == 0.0

    def test_g0_smooth_part(self):
        # g_0 = delta - Linv(rho^2)
        cf = laplace.coefficient_function("g", 0, 2.0)
        t = 0.7
        assert cf.smooth(t) == pytest.approx(-laplace.inverse_rho_power(2, t, 2.0), rel=1e-14)

    @pytest.mark.parametrize("kind", ["a", "b", "c", "g"])
    def test_linearity_against_symbol(self, kind):
        # five sample points on the positive real s-axis
        V = 1.0
        bar = BarrierSpec(V=V, d=1.0)
        cf = laplace.coefficient_function(kind, 1, V)
        for s in (0.5, 0.7, 1.3, 2.0, 2.9):
            got = laplace.forward_laplace(cf, s, V)
            assert got == pytest.approx(cf.symbol(s, bar), abs=1e-6)

    def test_delta_part_forward(self):
        # the l = 0 members include the exact delta weight in the transform
        V = 1.0
        bar = BarrierSpec(V=V, d=1.0)
        for kind in ("b", "g"):
            cf = laplace.coefficient_function(kind, 0, V)
            got = laplace.forward_laplace(cf, 1.0, V)
            assert got == pytest.approx(cf.symbol(1.0, bar), abs=1e-6)

    def test_kind_validation(self):
        with pytest.raises(ValueError, match="kind"):
            laplace.coefficient_function("z", 0, 1.0)


class TestDeltaLBound:
    def test_power_law_slope(self):
        b1 = laplace.delta_l_bound(3, 1.0, 1.0, epsilon=0.25)
        b16 = laplace.delta_l_bound(3, 16.0, 1.0, epsilon=0.25)
        assert b16 / b1 == pytest.approx(16.0 ** -0.25, rel=1e-12)

    def test_monotone_in_l(self):
        vals = [laplace.delta_l_bound(l, 5.0, 1.0) for l in range(1, 6)]
        assert vals == sorted(vals)

    def test_epsilon_domain(self):
        with pytest.raises(ValueError, match="epsilon"):
            laplace.delta_l_bound(1, 1.0, 1.0, epsilon=0.5)
        with pytest.raises(ValueError, match="epsilon"):
            laplace.DeltaLBound(l=1, epsilon=0.0, V=1.0)

    def test_bound_object(self):
        b = laplace.DeltaLBound(l=2, epsilon=0.25, V=4.0)
        ts = np.array([1.0, 2.0, 4.0])
        vals = b(ts)
        assert np.all(np.diff(vals) < 0)

    @pytest.mark.parametrize("l", [1, 2, 3, 4])
    @pytest.mark.parametrize("y0", [10.0, 100.0, 1000.0])
    def test_dominates_direct_tail(self, l, y0):
        V = 8.0
        t = 2.0 * y0 / V
        bound = laplace.delta_l_bound(l, t, V)
        for p in (0.0, math.sqrt(V), math.sqrt(1.5 * V)):
            upper = laplace.oscillatory_tail_abs(l, t, V, p)
            assert upper <= bound


class TestBesselMoment:
    @pytest.mark.parametrize("l", [0, 1, 2, 3, 4, 5])
    @pytest.mark.parametrize("eps", [0.125, 0.25, 0.375])
    def test_closed_vs_quadrature(self, l, eps):
        out = laplace.bessel_moment_integral(l, eps)
        assert out["quadrature"] == pytest.approx(out["closed"], rel=1e-6)

    def test_l0_quarter_value(self):
        out = laplace.bessel_moment_integral(0, 0.25)
        g = special.gamma
        expected = math.sqrt(2) * g(0.5) * g(0.25) / (2 * g(0.75) ** 3)
        assert out["closed"] == pytest.approx(expected, rel=1e-12)

    def test_gamma_recurrence_ratio(self):
        eps = 0.25
        for l in range(4):
            a = laplace.bessel_moment_integral(l, eps, n_terms=64)["closed"]
            b = laplace.bessel_moment_integral(l + 1, eps, n_terms=64)["closed"]
            assert b / a == pytest.approx((l + eps) / (1 + l - eps), rel=1e-12)

    def test_decreasing_in_l(self):
        vals = [laplace.bessel_moment_integral(l, 0.25, n_terms=64)["closed"] for l in range(6)]
        assert vals == sorted(vals, reverse=True)


@pytest.fixture(scope="module")
def audit_setup():
    """Low-momentum scenario where both sides are far above quadrature noise."""
    packet = PacketSpec(x0=-3.0, p0=2.0, L=3.0)
    barrier = BarrierSpec(V=8.0, d=0.5)  # k0 = 1/4, validity floor 10/V = 1.25
    return packet, barrier


class TestConvolutionReference:
    def test_within_envelope_and_shrinking(self, audit_setup):
        packet, barrier = audit_setup
        x = barrier.d + 1.0
        t1 = 3.0 * 10.0 / barrier.V  # three times the validity floor
        a1 = laplace.convolution_reference(0, x, t1, packet, barrier)
        a2 = laplace.convolution_reference(0, x, 2 * t1, packet, barrier)
        assert a1.within_envelope and a2.within_envelope
        # meaningful signal, not noise
        assert abs(a1.product) > 1e-3
        ratio = a2.discrepancy / a1.discrepancy
        # consistent with the t^{-1/4} trend within a factor of two (one-sided:
        # faster decay than the bound's trend is fine)
        assert ratio <= 2.0 * 2.0 ** -0.25

    def test_l1_within_envelope(self, audit_setup):
        packet, barrier = audit_setup
        out = laplace.convolution_reference(1, barrier.d + 1.0, 3.75, packet, barrier)
        assert out.within_envelope

    def test_delta_part_dominates_at_small_V(self):
        # V -> 0: the smooth part of g_0 is O(V^2), so the delta-convolution
        # identity makes conv equal the bare free-evolution integral
        from wavebarrier.analytic import free_evolution
        from wavebarrier.packet import momentum_reference
        packet = PacketSpec(x0=-3.0, p0=2.0, L=3.0)
        barrier = BarrierSpec(V=1e-3, d=0.5)
        t = 2.0
        out = laplace.convolution_reference(0, barrier.d + 1.0, t, packet, barrier)
        free = free_evolution(lambda p: momentum_reference(p, packet), 1.0, t,
                              packet.scales, +1, p_window=(max(1e-12, 2.0 - 9.0), 2.0 + 9.0))
        assert abs(out.convolution - free) < 2e-6 * abs(free)

    def test_budget_guards(self, audit_setup):
        packet, barrier = audit_setup
        with pytest.raises(ValueError, match="l <= 2"):
            laplace.convolution_reference(3, barrier.d + 1.0, 2.0, packet, barrier)
        with pytest.raises(ValueError, match="x must be"):
            laplace.convolution_reference(0, 0.1, 2.0, packet, barrier)
