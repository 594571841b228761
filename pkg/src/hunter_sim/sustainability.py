"""Energy, cooling and thermal models for simulated hosts.

All functions are pure. Power values are in watts, energy in joules,
temperatures in degrees Celsius, durations in seconds.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

SPEC_LOADS = tuple(round(0.1 * i, 1) for i in range(11))


class ModelInputError(ValueError):
    """Raised when a model input is outside its valid domain."""


@dataclass(frozen=True)
class PowerProfile:
    """Piecewise-linear load-to-watts curve, SPEC power_ssj style."""

    loads: tuple[float, ...]
    watts: tuple[float, ...]

    def __post_init__(self):
        loads = tuple(float(x) for x in self.loads)
        watts = tuple(float(x) for x in self.watts)
        object.__setattr__(self, "loads", loads)
        object.__setattr__(self, "watts", watts)
        if len(loads) != len(watts) or len(loads) < 2:
            raise ModelInputError("power profile needs matching load/watt lists with >= 2 knots")
        if loads[0] != 0.0 or loads[-1] != 1.0:
            raise ModelInputError("power profile must contain load 0 and load 1")
        if any(b <= a for a, b in zip(loads, loads[1:])):
            raise ModelInputError("power profile loads must be strictly ascending")
        if any(w < 0 for w in watts):
            raise ModelInputError("power profile watts must be non-negative")
        if any(b < a for a, b in zip(watts, watts[1:])):
            raise ModelInputError("power profile must be non-decreasing in load")

    @classmethod
    def from_csv(cls, path: str | Path) -> "PowerProfile":
        """Read a ``load,power_watts`` CSV, one row per knot."""
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["load", "power_watts"]:
                raise ModelInputError(f"{path}: header must be 'load,power_watts'")
            loads, watts = [], []
            for lineno, row in enumerate(reader, start=2):
                try:
                    loads.append(float(row["load"]))
                    watts.append(float(row["power_watts"]))
                except (TypeError, ValueError) as exc:
                    raise ModelInputError(f"{path}: row {lineno}: {exc}") from None
        return cls(tuple(loads), tuple(watts))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["load", "power_watts"])
            for load, w in zip(self.loads, self.watts):
                writer.writerow([repr(load), repr(w)])

    @property
    def max_power(self) -> float:
        return self.watts[-1]

    def knot_values(self, loads: Sequence[float] = SPEC_LOADS) -> np.ndarray:
        """Power sampled at the standard 11 SPEC loads (fixed-width feature vector)."""
        return np.array([power_at_load(self, x) for x in loads])


@dataclass(frozen=True)
class EnergyParams:
    """Per-host constants of the component energy model.

    ``capacitance``/``voltage``/``frequency`` give the constant CV^2 f term,
    ``mu1``/``mu2`` the utilization-dependent terms; all per core.
    """

    capacitance: float = 0.0
    voltage: float = 0.0
    frequency: float = 0.0
    mu1: float = 0.0
    mu2: float = 0.0
    idle_core_power: float = 0.0
    storage_read: float = 0.0
    storage_write: float = 0.0
    storage_idle: float = 0.0
    sram: float = 0.0
    dram: float = 0.0
    router: float = 0.0
    switches: float = 0.0
    gateways: float = 0.0
    lan_cards: float = 0.0
    motherboard: float = 0.0
    connectors: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "connectors", tuple(float(c) for c in self.connectors))
        for name in self.__dataclass_fields__:
            value = getattr(self, name)
            values = value if isinstance(value, tuple) else (value,)
            if any(v < 0 for v in values):
                raise ModelInputError(f"energy parameter {name} must be non-negative")

    @property
    def cv2f(self) -> float:
        return self.capacitance * self.voltage**2 * self.frequency

    @property
    def constant_power(self) -> float:
        """Memory + network + extra + idle storage power (W), independent of load."""
        return (
            self.storage_idle
            + self.sram
            + self.dram
            + self.router
            + self.switches
            + self.gateways
            + self.lan_cards
            + self.motherboard
            + sum(self.connectors)
        )


@dataclass(frozen=True)
class CoolingParams:
    ac: float = 0.0
    compressor: float = 0.0
    fan: float = 0.0
    pump: float = 0.0
    # datacenter heat (W) at which cooling runs at full duty
    heat_max: float = 1.0

    def __post_init__(self):
        if min(self.ac, self.compressor, self.fan, self.pump) < 0:
            raise ModelInputError("cooling powers must be non-negative")
        if self.heat_max <= 0:
            raise ModelInputError("heat_max must be positive")

    @property
    def full_power(self) -> float:
        return self.ac + self.compressor + self.fan + self.pump

    def duty(self, dc_heat: float) -> float:
        return min(1.0, max(0.0, dc_heat / self.heat_max))


@dataclass(frozen=True)
class ThermalParams:
    resistance: float = 0.5
    heat_capacity: float = 0.03
    ambient: float = 25.0
    # CRAC inlet rise at full datacenter dynamic power
    inlet_rise: float = 10.0
    # maximum safe temperature, used for normalization
    t_max: float = 100.0

    def __post_init__(self):
        if self.resistance <= 0 or self.heat_capacity <= 0:
            raise ModelInputError("thermal resistance and heat capacity must be positive")
        if self.t_max <= self.ambient:
            raise ModelInputError("t_max must exceed ambient")

    def normalized(self, temperature: float) -> float:
        return min(1.0, max(0.0, (temperature - self.ambient) / (self.t_max - self.ambient)))


def _check_fraction(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0 or math.isnan(value):
        raise ModelInputError(f"{name} must lie in [0, 1], got {value!r}")


def dynamic_core_power(params: EnergyParams, util: float) -> float:
    return (params.cv2f + params.mu1 * util + params.mu2 * util * util) / 2.0


def processor_energy(params: EnergyParams, core_utils: Sequence[float], dt: float) -> float:
    total = 0.0
    for u in core_utils:
        _check_fraction("core utilization", u)
        total += dynamic_core_power(params, u) + params.idle_core_power
    return total * dt


def processor_dynamic_power(params: EnergyParams, core_utils: Sequence[float]) -> float:
    """Dynamic part of processor power (W); the heat source for the thermal model."""
    return sum(dynamic_core_power(params, u) for u in core_utils)


def component_energy(params: EnergyParams, read: float, write: float, dt: float) -> float:
    """Storage, memory, network and peripheral energy over ``dt``.

    ``read``/``write`` are storage activity fractions in [0, 1].
    """
    _check_fraction("read activity", read)
    _check_fraction("write activity", write)
    storage = read * params.storage_read + write * params.storage_write + params.storage_idle
    memory = params.sram + params.dram
    network = params.router + params.switches + params.gateways + params.lan_cards
    extra = params.motherboard + sum(params.connectors)
    return (storage + memory + network + extra) * dt


def cooling_energy(params: CoolingParams, dc_heat: float, dt: float) -> float:
    if dc_heat < 0:
        raise ModelInputError("datacenter heat must be non-negative")
    return params.duty(dc_heat) * params.full_power * dt


def host_power(params: EnergyParams, cores: int, load: float, read: float = 0.0, write: float = 0.0) -> float:
    """Instantaneous computing power (W) of one host, load split evenly over cores."""
    utils = [load] * cores
    return processor_energy(params, utils, 1.0) + component_energy(params, read, write, 1.0)


def derive_power_profile(params: EnergyParams, cores: int, loads: Sequence[float] = SPEC_LOADS) -> PowerProfile:
    """Sample the component model at the SPEC loads (idle storage activity)."""
    return PowerProfile(tuple(loads), tuple(host_power(params, cores, x) for x in loads))


@dataclass(frozen=True)
class HostActivity:
    """What a host did over one interval, as consumed by :func:`total_energy`."""

    energy: EnergyParams
    cores: int
    load: float
    read: float = 0.0
    write: float = 0.0


@dataclass(frozen=True)
class EnergyBreakdown:
    computing: float
    cooling: float
    host_computing: tuple[float, ...] = field(default=())
    host_dynamic_power: tuple[float, ...] = field(default=())

    @property
    def total(self) -> float:
        return self.computing + self.cooling


def total_energy(hosts: Sequence[HostActivity], cooling: CoolingParams, dt: float) -> EnergyBreakdown:
    """Computing energy of every host plus cooling energy for the heat they emit."""
    per_host, dyn = [], []
    for h in hosts:
        utils = [h.load] * h.cores
        per_host.append(processor_energy(h.energy, utils, dt) + component_energy(h.energy, h.read, h.write, dt))
        dyn.append(processor_dynamic_power(h.energy, utils))
    cool = cooling_energy(cooling, sum(dyn), dt)
    return EnergyBreakdown(sum(per_host), cool, tuple(per_host), tuple(dyn))


def crac_inlet(params: ThermalParams, total_dynamic: float, max_total_dynamic: float) -> float:
    """Inlet air temperature, rising linearly with normalized datacenter heat."""
    if max_total_dynamic <= 0:
        return params.ambient
    frac = min(1.0, max(0.0, total_dynamic / max_total_dynamic))
    return params.ambient + params.inlet_rise * frac


def host_temperature(params: ThermalParams, p_dyn: float, t_initial: float, inlet: float | None = None) -> float:
    """CPU temperature: P*R + inlet + T_initial * exp(-R*C)."""
    if p_dyn < 0:
        raise ModelInputError("dynamic power must be non-negative")
    if inlet is None:
        inlet = params.ambient
    r = params.resistance
    return p_dyn * r + inlet + t_initial * math.exp(-r * params.heat_capacity)


def power_at_load(profile: PowerProfile, load: float) -> float:
    _check_fraction("load", load)
    return float(np.interp(load, profile.loads, profile.watts))


def performance_to_power(profile: PowerProfile, ips_capacity: float, load: float) -> float:
    """Delivered instructions per second per watt; 0 at zero load."""
    if load == 0.0:
        return 0.0
    watts = power_at_load(profile, load)
    if watts <= 0.0:
        return math.inf
    return load * ips_capacity / watts
