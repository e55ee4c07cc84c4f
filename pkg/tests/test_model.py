import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wavebarrier.model import (
    BarrierSpec,
    ComplexField,
    DimensionlessParams,
    PhysicalScales,
    Region,
    classify_region,
    from_dimensionless,
    to_dimensionless,
)

KINDS = ("position", "momentum", "length", "time", "energy")

positive = st.floats(min_value=1e-3, max_value=1e3)


class TestScaling:
    def test_momentum_example(self):
        sc = PhysicalScales(hbar=2.0, mass=1.5, a=9.0)
        p = 10.0 * sc.hbar / math.sqrt(sc.a)
        assert to_dimensionless(p, "momentum", sc) == pytest.approx(10.0, rel=1e-14)

    def test_position_examples(self):
        sc = PhysicalScales(a=4.0)
        assert to_dimensionless(0.0, "position", sc) == 0.0
        assert to_dimensionless(-20.0 * math.sqrt(sc.a), "position", sc) == pytest.approx(-20.0, rel=1e-14)

    def test_from_dimensionless_examples(self):
        assert from_dimensionless(10.0, "momentum", PhysicalScales()) == pytest.approx(10.0)
        assert from_dimensionless(1.0, "length", PhysicalScales(a=4.0)) == pytest.approx(2.0)
        # evaluation time of the three-term data set: t_R + 2 sqrt(a) m/p0 with t_R = 2
        assert from_dimensionless(2.2, "time", PhysicalScales()) == pytest.approx(2.2)

    @given(value=st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
           hbar=positive, mass=positive, a=positive,
           kind=st.sampled_from(KINDS))
    def test_round_trip(self, value, hbar, mass, a, kind):
        sc = PhysicalScales(hbar=hbar, mass=mass, a=a)
        back = to_dimensionless(from_dimensionless(value, kind, sc), kind, sc)
        assert back == pytest.approx(value, rel=1e-14, abs=1e-300)

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown kind"):
            to_dimensionless(1.0, "charge", PhysicalScales())
        with pytest.raises(ValueError, match="unknown kind"):
            from_dimensionless(1.0, "charge", PhysicalScales())

    def test_invalid_scales(self):
        with pytest.raises(ValueError):
            PhysicalScales(hbar=0.0)
        with pytest.raises(ValueError):
            PhysicalScales(a=-1.0)


class TestBarrier:
    def test_k0_and_regime(self):
        bar = BarrierSpec(V=100.0, d=1.0)
        assert bar.k0(10.0) == pytest.approx(0.5)
        assert bar.is_tunneling(10.0)
        assert not bar.is_tunneling(15.0)

    @given(k0=st.floats(min_value=0.01, max_value=0.99), V=positive)
    def test_gamma_identity(self, k0, V):
        # gamma = (p0/hbar) sqrt((1-k0)/k0) algebraically
        sc = PhysicalScales()
        p0 = math.sqrt(2 * sc.mass * V * k0)
        bar = BarrierSpec(V=V, d=1.0, scales=sc)
        expected = p0 / sc.hbar * math.sqrt((1 - k0) / k0)
        assert bar.gamma(p0) == pytest.approx(expected, rel=1e-13)

    def test_gamma_requires_tunneling(self):
        bar = BarrierSpec(V=1.0, d=1.0)
        with pytest.raises(ValueError, match="0 < k0 < 1"):
            bar.gamma(5.0)

    def test_invalid(self):
        with pytest.raises(ValueError):
            BarrierSpec(V=0.0, d=1.0)
        with pytest.raises(ValueError):
            BarrierSpec(V=1.0, d=-2.0)


class TestComplexField:
    def test_region_tags(self):
        x = np.array([-1.0, 0.0, 0.5, 1.0, 2.0])
        tags = classify_region(x, d=1.0)
        assert list(tags) == [Region.LEFT, Region.BARRIER, Region.BARRIER,
                              Region.RIGHT, Region.RIGHT]

    def test_field_construction(self):
        x = np.linspace(-1, 2, 7)
        f = ComplexField.from_values(x, np.ones(7) * 1j, time=0.5, d=1.0)
        assert np.all(f.density() == 1.0)
        assert f.regions[0] is Region.LEFT

    def test_field_validation(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            ComplexField.from_values(np.array([0.0, 0.0, 1.0]), np.zeros(3), 0.0, 1.0)
        with pytest.raises(ValueError, match="equal length"):
            ComplexField.from_values(np.array([0.0, 1.0]), np.zeros(3), 0.0, 1.0)
        with pytest.raises(ValueError, match="time"):
            ComplexField.from_values(np.array([0.0, 1.0]), np.zeros(2), -1.0, 1.0)


def test_dimensionless_params_invariant():
    DimensionlessParams(P0=10.0, X0=-20.0, D=1.0, time_unit=1.0)
    with pytest.raises(ValueError):
        DimensionlessParams(P0=-1.0, X0=0.0, D=1.0, time_unit=1.0)
