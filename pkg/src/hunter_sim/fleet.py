"""Host classes modelled on the Azure B-series VMs used for the testbed.

The energy constants are chosen so that every class has its
performance-to-power sweet spot around 70% CPU load, and bigger machines
deliver more IPS per watt.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import Host
from .sustainability import EnergyParams, PowerProfile, derive_power_profile

IPS_PER_CORE = 2000.0


@dataclass(frozen=True)
class HostClass:
    name: str
    cores: int
    ram_mb: float
    disk_mb: float
    bandwidth: float
    price_per_hour: float
    energy: EnergyParams
    ips_per_core: float = IPS_PER_CORE


HOST_CLASSES = {
    "B2s": HostClass(
        "B2s", 2, 4096.0, 32768.0, 100.0, 0.0416,
        EnergyParams(
            capacitance=1e-9, voltage=1.225, frequency=2.0e9, mu1=12.0, mu2=40.0,
            idle_core_power=3.0, storage_read=2.0, storage_write=2.5, storage_idle=2.0,
            sram=1.0, dram=3.0, router=0.5, switches=0.5, gateways=0.3, lan_cards=0.7,
            motherboard=2.0, connectors=(0.3, 0.3),
        ),
    ),
    "B4ms": HostClass(
        "B4ms", 4, 16384.0, 65536.0, 100.0, 0.166,
        EnergyParams(
            capacitance=1e-9, voltage=1.118, frequency=2.0e9, mu1=10.0, mu2=25.0,
            idle_core_power=2.5, storage_read=2.5, storage_write=3.0, storage_idle=2.0,
            sram=1.0, dram=2.5, router=0.5, switches=0.5, gateways=0.3, lan_cards=0.7,
            motherboard=1.5, connectors=(0.25, 0.25),
        ),
    ),
    "B8ms": HostClass(
        "B8ms", 8, 32768.0, 131072.0, 100.0, 0.333,
        EnergyParams(
            capacitance=1e-9, voltage=1.0, frequency=2.0e9, mu1=6.0, mu2=16.0,
            idle_core_power=1.5, storage_read=3.0, storage_write=3.5, storage_idle=2.5,
            sram=1.0, dram=3.0, router=0.5, switches=0.5, gateways=0.3, lan_cards=0.7,
            motherboard=2.0, connectors=(0.2, 0.2),
        ),
    ),
}

# (class, is_private, count) for the 10-host testbed; the 50-host setup is x5
TESTBED_10 = (
    ("B2s", True, 4),
    ("B4ms", True, 2),
    ("B4ms", False, 2),
    ("B8ms", False, 2),
)

PRIVATE_LATENCY = 0.002
PUBLIC_LATENCY = 0.08


def make_host(host_id: int, cls: HostClass, is_private: bool, profile: PowerProfile | None = None, ambient: float = 25.0) -> Host:
    return Host(
        id=host_id,
        name=f"{cls.name}-{host_id}",
        cores=cls.cores,
        ips_per_core=cls.ips_per_core,
        ram_capacity=cls.ram_mb,
        disk_capacity=cls.disk_mb,
        bandwidth_capacity=cls.bandwidth,
        energy=cls.energy,
        power_profile=profile or derive_power_profile(cls.energy, cls.cores),
        price_per_hour=cls.price_per_hour,
        is_private=is_private,
        network_latency=PRIVATE_LATENCY if is_private else PUBLIC_LATENCY,
        temperature=ambient,
    )


def build_fleet(layout=TESTBED_10, scale: int = 1, classes: dict[str, HostClass] | None = None,
                profiles: dict[str, PowerProfile] | None = None, ambient: float = 25.0) -> list[Host]:
    classes = HOST_CLASSES if classes is None else classes
    profiles = profiles or {}
    hosts = []
    for name, private, count in layout:
        for _ in range(count * scale):
            hosts.append(make_host(len(hosts), classes[name], private, profiles.get(name), ambient))
    return hosts
