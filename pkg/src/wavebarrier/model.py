"""Physical scales, barrier geometry, and shared field containers.

Everything downstream works in the dimensionless variables

    P = sqrt(a) p / hbar,   X = x / sqrt(a),   D = d / sqrt(a),
    T = t hbar / (m a),     E' = E m a / hbar^2,

where ``a`` is the squared length scale of the initial packet.  Conversion to
and from physical units happens only at I/O boundaries.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BarrierSpec",
    "ComplexField",
    "DimensionlessParams",
    "PhysicalScales",
    "Region",
    "from_dimensionless",
    "to_dimensionless",
]

_KINDS = ("position", "momentum", "length", "time", "energy")


@dataclass(frozen=True)
class PhysicalScales:
    """hbar, particle mass, and the packet width parameter ``a`` (a length^2)."""

    hbar: float = 1.0
    mass: float = 1.0
    a: float = 1.0

    def __post_init__(self) -> None:
        for name in ("hbar", "mass", "a"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v}")

    @property
    def length_unit(self) -> float:
        return math.sqrt(self.a)

    @property
    def momentum_unit(self) -> float:
        return self.hbar / math.sqrt(self.a)

    @property
    def time_unit(self) -> float:
        return self.mass * self.a / self.hbar

    @property
    def energy_unit(self) -> float:
        return self.hbar**2 / (self.mass * self.a)


def to_dimensionless(value: float, kind: str, scales: PhysicalScales) -> float:
    """Convert a physical quantity of the given kind to its dimensionless form."""
    if kind not in _KINDS:
        raise ValueError(f"unknown kind {kind!r}; expected one of {_KINDS}")
    if kind in ("position", "length"):
        return value / scales.length_unit
    if kind == "momentum":
        return value / scales.momentum_unit
    if kind == "time":
        return value / scales.time_unit
    return value / scales.energy_unit


def from_dimensionless(value: float, kind: str, scales: PhysicalScales) -> float:
    """Inverse of :func:`to_dimensionless`."""
    if kind not in _KINDS:
        raise ValueError(f"unknown kind {kind!r}; expected one of {_KINDS}")
    if kind in ("position", "length"):
        return value * scales.length_unit
    if kind == "momentum":
        return value * scales.momentum_unit
    if kind == "time":
        return value * scales.time_unit
    return value * scales.energy_unit


@dataclass(frozen=True)
class DimensionlessParams:
    """Dimensionless packet/barrier parameters: P0, X0, D and the time unit."""

    P0: float
    X0: float
    D: float
    time_unit: float

    def __post_init__(self) -> None:
        if not (self.P0 > 0):
            raise ValueError(f"P0 must be > 0, got {self.P0}")


@dataclass(frozen=True)
class BarrierSpec:
    """Rectangular barrier of height ``V`` on 0 < x < d (zero elsewhere)."""

    V: float
    d: float
    scales: PhysicalScales = field(default_factory=PhysicalScales)

    def __post_init__(self) -> None:
        if not (math.isfinite(self.V) and self.V > 0):
            raise ValueError(f"V must be finite and > 0, got {self.V}")
        if not (math.isfinite(self.d) and self.d > 0):
            raise ValueError(f"d must be finite and > 0, got {self.d}")

    @property
    def D(self) -> float:
        """Width in units of sqrt(a)."""
        return self.d / self.scales.length_unit

    def k0(self, p0: float) -> float:
        """Energy ratio p0^2 / (2 m V)."""
        return p0**2 / (2.0 * self.scales.mass * self.V)

    def is_tunneling(self, p0: float) -> bool:
        return 0.0 < self.k0(p0) < 1.0

    def gamma(self, p0: float) -> float:
        """Evanescent decay rate sqrt(2 m V - p0^2)/hbar; tunneling regime only."""
        k0 = self.k0(p0)
        if not 0.0 < k0 < 1.0:
            raise ValueError(f"gamma is defined only for 0 < k0 < 1, got k0 = {k0}")
        return math.sqrt(2.0 * self.scales.mass * self.V - p0**2) / self.scales.hbar

    def momentum_top(self) -> float:
        """Momentum at the barrier top, sqrt(2 m V)."""
        return math.sqrt(2.0 * self.scales.mass * self.V)


class Region(enum.Enum):
    LEFT = "left"
    BARRIER = "barrier"
    RIGHT = "right"


def classify_region(x: np.ndarray, d: float) -> np.ndarray:
    """Region tag per position: x < 0 left, 0 <= x < d barrier, x >= d right."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape, dtype=object)
    out[x < 0.0] = Region.LEFT
    out[(x >= 0.0) & (x < d)] = Region.BARRIER
    out[x >= d] = Region.RIGHT
    return out


@dataclass(frozen=True)
class ComplexField:
    """A sampled complex wavefunction on a strictly increasing spatial grid."""

    grid: np.ndarray
    values: np.ndarray
    time: float
    regions: np.ndarray

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=complex)
        if grid.ndim != 1 or values.shape != grid.shape:
            raise ValueError("grid and values must be 1-d arrays of equal length")
        if len(grid) > 1 and not np.all(np.diff(grid) > 0):
            raise ValueError("grid must be strictly increasing")
        if self.time < 0:
            raise ValueError(f"time must be >= 0, got {self.time}")
        if np.asarray(self.regions).shape != grid.shape:
            raise ValueError("regions must match grid length")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_values(cls, grid: np.ndarray, values: np.ndarray, time: float, d: float) -> "ComplexField":
        grid = np.asarray(grid, dtype=float)
        return cls(grid=grid, values=np.asarray(values, dtype=complex), time=time,
                   regions=classify_region(grid, d))

    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2
