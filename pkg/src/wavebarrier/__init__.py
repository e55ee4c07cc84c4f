"""Wave-packet dynamics at a rectangular barrier.

Closed-form momentum-space propagation of a compact-support packet through a
rectangular barrier, resolved into a train of attenuated, delayed sub-packets,
together with a Crank-Nicolson time-domain solver used as an independent
cross-check, and a config-driven CLI that emits reproducible CSV/JSON data.
"""

__version__ = "0.1.0"

from .model import BarrierSpec, ComplexField, DimensionlessParams, PhysicalScales, Region
from .packet import MomentumWindow, PacketDerived, PacketSpec

__all__ = [
    "__version__",
    "BarrierSpec",
    "ComplexField",
    "DimensionlessParams",
    "MomentumWindow",
    "PacketDerived",
    "PacketSpec",
    "PhysicalScales",
    "Region",
]
