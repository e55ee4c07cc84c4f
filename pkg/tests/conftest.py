import numpy as np
import pytest

from wavebarrier.model import BarrierSpec, PhysicalScales
from wavebarrier.packet import MomentumWindow, PacketSpec


@pytest.fixture(scope="session")
def unit_scales():
    return PhysicalScales()


@pytest.fixture(scope="session")
def fig1_packet(unit_scales):
    """X0 = -20, P0 = 10, L = 20 packet (hbar = m = a = 1)."""
    return PacketSpec(x0=-20.0, p0=10.0, L=20.0, scales=unit_scales)


@pytest.fixture(scope="session")
def fig1_barrier(unit_scales):
    """k0 = 1/2 at p0 = 10 and width D = 1."""
    return BarrierSpec(V=100.0, d=1.0, scales=unit_scales)


@pytest.fixture(scope="session")
def fig1_window():
    return MomentumWindow(p0=10.0, K=1.4)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(7041963)
