"""Run configuration: parsing, validation, and the canonical echo form.

Configs are JSON documents.  Quantities are physical (with the default
scales hbar = m = a = 1 they coincide with the dimensionless ones).  The
barrier takes exactly one of V/k0 and one of d/D — or both of a pair when
they agree to 1e-12, so a normalised echo re-parses byte-identically.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

from .model import BarrierSpec, PhysicalScales
from .packet import MomentumWindow, PacketSpec

__all__ = ["ConfigError", "RunConfig", "parse_config", "default_config_text"]

MODES = ("analytic", "oracle", "compare", "figure1", "validate", "packet-info")


class ConfigError(ValueError):
    """Invalid configuration; message names the offending key path."""


def _reject_duplicates(pairs):
    d = {}
    for k, v in pairs:
        if k in d:
            raise ConfigError(f"duplicate key {k!r}")
        d[k] = v
    return d


def _need_number(obj: dict, path: str, key: str, default=None):
    if key not in obj:
        if default is not None:
            return default
        raise ConfigError(f"{path}.{key}: missing required key")
    v = obj[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError(f"{path}.{key}: expected a number, got {type(v).__name__}")
    return float(v)


_DEFAULTS: dict[str, Any] = {
    "scales": {"hbar": 1.0, "mass": 1.0, "a": 1.0},
    "packet": {"x0": -20.0, "p0": 10.0, "L": 20.0},
    "barrier": {"k0": 0.5, "D": 1.0},
    "window": {"K": 1.4},
    "times": [2.2],
    "grid": {"min": -5.0, "max": 11.0, "n": 641},
    "oracle": {"dx": 0.004, "dt": 4.0e-4, "t_end": 4.0,
               "x_min": -44.0, "x_max": 38.0, "measure_times": [3.6, 3.8, 4.0]},
    "mode": "figure1",
    "out_prefix": "wavebarrier_run",
    "workers": 1,
    "force": False,
}


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration with derived pairs filled in."""

    scales: PhysicalScales
    x0: float
    p0: float
    L: float
    V: float           # 0 means the free control
    d: float
    K: float
    times: tuple[float, ...]
    grid_min: float
    grid_max: float
    grid_n: int
    oracle: dict[str, Any]
    mode: str
    out_prefix: str
    workers: int
    force: bool
    k0: float = field(init=False)
    D: float = field(init=False)

    def __post_init__(self) -> None:
        k0 = self.p0**2 / (2.0 * self.scales.mass * self.V) if self.V > 0 else math.inf
        object.__setattr__(self, "k0", k0)
        object.__setattr__(self, "D", self.d / self.scales.length_unit)

    @property
    def packet(self) -> PacketSpec:
        return PacketSpec(x0=self.x0, p0=self.p0, L=self.L, scales=self.scales)

    @property
    def barrier(self) -> BarrierSpec | None:
        if self.V == 0:
            return None
        return BarrierSpec(V=self.V, d=self.d, scales=self.scales)

    @property
    def window(self) -> MomentumWindow:
        return MomentumWindow(p0=self.p0, K=self.K)

    def normalized(self) -> dict[str, Any]:
        """Canonical echo: every field explicit, both members of derived pairs."""
        return {
            "scales": {"hbar": self.scales.hbar, "mass": self.scales.mass, "a": self.scales.a},
            "packet": {"x0": self.x0, "p0": self.p0, "L": self.L},
            "barrier": {"V": self.V, "k0": self.k0 if math.isfinite(self.k0) else None,
                        "d": self.d, "D": self.D},
            "window": {"K": self.K},
            "times": list(self.times),
            "grid": {"min": self.grid_min, "max": self.grid_max, "n": self.grid_n},
            "oracle": dict(sorted(self.oracle.items())),
            "mode": self.mode,
            "out_prefix": self.out_prefix,
            "workers": self.workers,
            "force": self.force,
        }

    def normalized_text(self) -> str:
        return json.dumps(self.normalized(), sort_keys=True, separators=(",", ":"))


def _resolve_barrier(b: dict, scales: PhysicalScales, p0: float) -> tuple[float, float]:
    """Return (V, d) from any consistent combination of V/k0 and d/D."""
    for key in b:
        if key not in ("V", "k0", "d", "D"):
            raise ConfigError(f"barrier.{key}: unknown key")
    has_v, has_k0 = "V" in b, "k0" in b and b["k0"] is not None
    if not has_v and not has_k0:
        raise ConfigError("barrier: one of V or k0 is required")
    V = _need_number(b, "barrier", "V") if has_v else None
    if has_k0:
        k0 = _need_number(b, "barrier", "k0")
        if k0 <= 0:
            raise ConfigError(f"barrier.k0: must be > 0, got {k0}")
        V_from_k0 = p0**2 / (2.0 * scales.mass * k0)
        if V is None:
            V = V_from_k0
        elif V > 0 and not math.isclose(V, V_from_k0, rel_tol=1e-12):
            raise ConfigError(
                f"barrier: V = {V} and k0 = {k0} disagree (k0 implies V = {V_from_k0})"
            )
    if V < 0:
        raise ConfigError(f"barrier.V: must be >= 0, got {V}")
    if V > 0:
        k0_eff = p0**2 / (2.0 * scales.mass * V)
        if k0_eff >= 1.0:
            raise ConfigError(
                f"barrier: k0 = {k0_eff:g} >= 1; the series solutions cover only "
                "under-barrier momentum windows (choose p0 below the barrier top)"
            )
    has_d, has_D = "d" in b, "D" in b
    if not has_d and not has_D:
        raise ConfigError("barrier: one of d or D is required")
    d = _need_number(b, "barrier", "d") if has_d else None
    if has_D:
        D = _need_number(b, "barrier", "D")
        d_from_D = D * scales.length_unit
        if d is None:
            d = d_from_D
        elif not math.isclose(d, d_from_D, rel_tol=1e-12):
            raise ConfigError(f"barrier: d = {d} and D = {D} disagree (D implies d = {d_from_D})")
    if d <= 0:
        raise ConfigError(f"barrier.d: must be > 0, got {d}")
    return V, d


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON config, reporting the first offending key."""
    try:
        raw = json.loads(text, object_pairs_hook=_reject_duplicates)
    except ConfigError:
        raise
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("top level: expected an object")
    known = set(_DEFAULTS)
    for key in raw:
        if key not in known:
            raise ConfigError(f"{key}: unknown key")

    merged = {k: raw.get(k, _DEFAULTS[k]) for k in _DEFAULTS}
    for section in ("scales", "packet", "barrier", "window", "grid", "oracle"):
        if not isinstance(merged[section], dict):
            raise ConfigError(f"{section}: expected an object")
        if section != "barrier":
            base = dict(_DEFAULTS[section])
            for k in merged[section]:
                if k not in base:
                    raise ConfigError(f"{section}.{k}: unknown key")
            base.update(merged[section])
            merged[section] = base
    # the barrier pairs default independently: a partial override keeps the
    # other pair's default instead of dropping it
    bar = dict(merged["barrier"])
    if "V" not in bar and ("k0" not in bar or bar.get("k0") is None):
        bar["k0"] = _DEFAULTS["barrier"]["k0"]
    if "d" not in bar and "D" not in bar:
        bar["D"] = _DEFAULTS["barrier"]["D"]
    merged["barrier"] = bar

    s = merged["scales"]
    scales = PhysicalScales(hbar=_need_number(s, "scales", "hbar"),
                            mass=_need_number(s, "scales", "mass"),
                            a=_need_number(s, "scales", "a"))
    p = merged["packet"]
    x0 = _need_number(p, "packet", "x0")
    p0 = _need_number(p, "packet", "p0")
    L = _need_number(p, "packet", "L")
    if p0 <= 0:
        raise ConfigError(f"packet.p0: must be > 0, got {p0}")
    if L <= 2:
        raise ConfigError(f"packet.L: must be > 2, got {L}")
    edge = x0 + L * scales.length_unit
    if edge > 0:
        raise ConfigError(
            f"packet.x0: support reaches x = {edge:g} > 0; need x0 + L sqrt(a) <= 0"
        )
    V, d = _resolve_barrier(merged["barrier"], scales, p0)

    K = _need_number(merged["window"], "window", "K")
    if K < 1.0:
        raise ConfigError(f"window.K: must be >= 1, got {K}")
    if V > 0:
        top = math.sqrt(2.0 * scales.mass * V)
        if K * p0 >= top:
            raise ConfigError(
                f"window.K: p_max = {K * p0:g} must stay below the barrier top {top:g}"
            )

    times = merged["times"]
    if not (isinstance(times, list) and times and
            all(isinstance(t, (int, float)) and not isinstance(t, bool) and t > 0 for t in times)):
        raise ConfigError("times: expected a non-empty list of positive numbers")

    g = merged["grid"]
    grid_n = g["n"]
    if not isinstance(grid_n, int) or isinstance(grid_n, bool) or grid_n < 2:
        raise ConfigError(f"grid.n: expected an integer >= 2, got {grid_n!r}")
    gmin, gmax = _need_number(g, "grid", "min"), _need_number(g, "grid", "max")
    if not gmin < gmax:
        raise ConfigError(f"grid: need min < max, got [{gmin}, {gmax}]")

    mode = merged["mode"]
    if mode not in MODES:
        raise ConfigError(f"mode: expected one of {MODES}, got {mode!r}")
    workers = merged["workers"]
    if not isinstance(workers, int) or isinstance(workers, bool) or workers < 1:
        raise ConfigError(f"workers: expected an integer >= 1, got {workers!r}")
    if not isinstance(merged["force"], bool):
        raise ConfigError(f"force: expected a boolean, got {merged['force']!r}")
    if not isinstance(merged["out_prefix"], str) or not merged["out_prefix"]:
        raise ConfigError("out_prefix: expected a non-empty string")

    o = merged["oracle"]
    oracle = {
        "dx": _need_number(o, "oracle", "dx"),
        "dt": _need_number(o, "oracle", "dt"),
        "t_end": _need_number(o, "oracle", "t_end"),
        "x_min": _need_number(o, "oracle", "x_min"),
        "x_max": _need_number(o, "oracle", "x_max"),
        "measure_times": list(o["measure_times"]),
    }
    if not all(isinstance(t, (int, float)) and t > 0 for t in oracle["measure_times"]):
        raise ConfigError("oracle.measure_times: expected positive numbers")

    return RunConfig(
        scales=scales, x0=x0, p0=p0, L=L, V=V, d=d, K=K,
        times=tuple(float(t) for t in times),
        grid_min=gmin, grid_max=gmax, grid_n=grid_n,
        oracle=oracle, mode=mode, out_prefix=merged["out_prefix"],
        workers=workers, force=bool(merged["force"]),
    )


def apply_overrides(text: str, overrides: list[str]) -> str:
    """Apply repeatable KEY=VALUE overrides (dotted keys) to a JSON config text."""
    raw = json.loads(text) if text.strip() else {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected KEY=VALUE")
        key, _, value = item.partition("=")
        try:
            parsed = json.loads(value)
        except json.JSONDecodeError:
            parsed = value
        node = raw
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r}: {part} is not an object")
        node[parts[-1]] = parsed
    return json.dumps(raw)


def default_config_text() -> str:
    return json.dumps(_DEFAULTS, indent=2, sort_keys=True)
