"""Experiment configuration: a single YAML file validated with pydantic.

Every key is optional; an empty file gives the 10-host testbed with the
HUNTER scheduler. The README lists the full key set.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import fleet
from .model import Host, SimEnvironment
from .scheduler import SchedulerConfig
from .surrogate.train import TrainConfig
from .sustainability import CoolingParams, PowerProfile, ThermalParams
from .workload import WorkloadConfig

OUT_DIR_ENV = "HUNTER_OUT_DIR"


class ConfigError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class HostGroup(_Strict):
    host_class: Literal["B2s", "B4ms", "B8ms"] = Field(alias="class")
    private: bool = True
    count: int = Field(ge=1)


class HostsConfig(_Strict):
    layout: list[HostGroup] = Field(
        default_factory=lambda: [HostGroup(**{"class": c, "private": p, "count": n}) for c, p, n in fleet.TESTBED_10]
    )
    scale: int = Field(1, ge=1)
    # optional power-profile CSVs per host class
    profiles: dict[str, str] = Field(default_factory=dict)


class CoolingConfig(_Strict):
    ac: float = Field(120.0, ge=0)
    compressor: float = Field(60.0, ge=0)
    fan: float = Field(30.0, ge=0)
    pump: float = Field(20.0, ge=0)


class EnvironmentConfig(_Strict):
    interval_length: float = Field(300.0, gt=0)
    ambient: float = 25.0
    resistance: float = Field(0.5, gt=0)
    heat_capacity: float = Field(0.03, gt=0)
    inlet_rise: float = Field(10.0, ge=0)
    t_max: float = 100.0
    cooling: CoolingConfig = Field(default_factory=CoolingConfig)

    @model_validator(mode="after")
    def _t_max_above_ambient(self):
        if self.t_max <= self.ambient:
            raise ValueError("t_max must exceed ambient")
        return self


class WorkloadSection(_Strict):
    arrival_rate: float = Field(1.2, gt=0)
    tasks_per_job: tuple[int, int] = (3, 5)
    sla_base: float = Field(1.0, ge=0)
    sla_factor: float = Field(1.5, ge=0)
    container_size: tuple[float, float] = (3000.0, 6000.0)
    trace_dir: Optional[str] = None

    @field_validator("tasks_per_job")
    @classmethod
    def _range(cls, v):
        if not 3 <= v[0] <= v[1] <= 5:
            raise ValueError("tasks_per_job must lie within [3, 5]")
        return v


class HunterSection(_Strict):
    k: Union[int, Literal["auto"]] = "auto"
    bandwidth: float = Field(100.0, gt=0)
    min_container: float = Field(3000.0, gt=0)
    alpha: float = Field(1 / 3, ge=0, le=1)
    beta: float = Field(1 / 3, ge=0, le=1)
    gamma: float = Field(1 / 3, ge=0, le=1)
    cpu_cap: float = Field(0.8, gt=0, le=1)
    learning_rate: float = Field(1e-4, gt=0)
    fine_tune: bool = True

    @field_validator("k")
    @classmethod
    def _k(cls, v):
        if isinstance(v, int) and v < 1:
            raise ValueError("k must be >= 1")
        return v

    @model_validator(mode="after")
    def _convex(self):
        if abs(self.alpha + self.beta + self.gamma - 1.0) > 1e-6:
            raise ValueError("alpha + beta + gamma must equal 1")
        return self


class SurrogateSection(_Strict):
    hidden: int = Field(64, ge=1)
    steps: int = Field(4, ge=1)
    attention: bool = True
    weights: Optional[str] = None
    pretrain_intervals: int = Field(1000, ge=1)
    lr: float = Field(1e-4, gt=0)
    weight_decay: float = Field(0.01, ge=0)
    batch_size: int = Field(16, ge=1)
    max_epochs: int = Field(200, ge=1)
    patience: int = Field(10, ge=1)
    val_fraction: float = Field(0.2, gt=0, lt=1)


class ExperimentConfig(_Strict):
    seed: int = 0
    n_intervals: int = Field(100, ge=1)
    replications: int = Field(5, ge=1)
    scheduler: Literal["hunter", "random", "bestfit"] = "hunter"
    output_dir: str = "results"
    hosts: HostsConfig = Field(default_factory=HostsConfig)
    environment: EnvironmentConfig = Field(default_factory=EnvironmentConfig)
    workload: WorkloadSection = Field(default_factory=WorkloadSection)
    hunter: HunterSection = Field(default_factory=HunterSection)
    surrogate: SurrogateSection = Field(default_factory=SurrogateSection)

    # -- builders for the domain objects --------------------------------------

    def build_hosts(self) -> list[Host]:
        profiles = {name: PowerProfile.from_csv(path) for name, path in self.hosts.profiles.items()}
        layout = tuple((g.host_class, g.private, g.count) for g in self.hosts.layout)
        return fleet.build_fleet(layout, self.hosts.scale, profiles=profiles, ambient=self.environment.ambient)

    def build_environment(self, hosts: list[Host]) -> SimEnvironment:
        e = self.environment
        heat_max = sum(h.max_dynamic_power for h in hosts)
        c = e.cooling
        return SimEnvironment(
            interval_length=e.interval_length,
            cooling=CoolingParams(c.ac, c.compressor, c.fan, c.pump, heat_max=heat_max),
            thermal=ThermalParams(e.resistance, e.heat_capacity, e.ambient, e.inlet_rise, e.t_max),
        )

    def workload_config(self, seed: int) -> WorkloadConfig:
        w = self.workload
        return WorkloadConfig(
            arrival_rate=w.arrival_rate,
            tasks_per_job=tuple(w.tasks_per_job),
            interval_length=self.environment.interval_length,
            sla_base=w.sla_base,
            sla_factor=w.sla_factor,
            container_size=tuple(w.container_size),
            seed=seed,
        )

    def scheduler_config(self) -> SchedulerConfig:
        h = self.hunter
        return SchedulerConfig(
            k=h.k,
            bandwidth=h.bandwidth,
            interval_length=self.environment.interval_length,
            min_container=h.min_container,
            alpha=h.alpha,
            beta=h.beta,
            gamma=1.0 - h.alpha - h.beta,
            cpu_cap=h.cpu_cap,
            learning_rate=h.learning_rate,
            fine_tune=h.fine_tune,
        )

    def train_config(self) -> TrainConfig:
        s = self.surrogate
        return TrainConfig(
            lr=s.lr,
            weight_decay=s.weight_decay,
            batch_size=s.batch_size,
            max_epochs=s.max_epochs,
            patience=s.patience,
            val_fraction=s.val_fraction,
            seed=self.seed,
        )

    def resolve_output_dir(self, override: str | None = None) -> Path:
        return Path(override or os.environ.get(OUT_DIR_ENV) or self.output_dir)


def load_config(path: str | Path | None = None, **overrides) -> ExperimentConfig:
    data = {}
    if path is not None:
        try:
            with open(path) as fh:
                data = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: invalid YAML: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        cfg = ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"invalid configuration:\n{exc}") from None
    base = Path(path).parent if path is not None else Path(".")
    for name, p in list(cfg.hosts.profiles.items()):
        full = Path(p) if Path(p).is_absolute() else base / p
        if not full.is_file():
            raise ConfigError(f"power profile for {name} not found: {full}")
        cfg.hosts.profiles[name] = str(full)
    for attr, section in (("trace_dir", cfg.workload), ("weights", cfg.surrogate)):
        p = getattr(section, attr)
        if p is not None and not Path(p).is_absolute():
            setattr(section, attr, str(base / p))
    return cfg


def dump_config(cfg: ExperimentConfig, path: str | Path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(cfg.model_dump(by_alias=True, mode="json"), fh, sort_keys=False)
