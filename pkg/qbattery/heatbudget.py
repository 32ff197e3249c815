"""
Cryogenic heat and room-temperature energy budget.

Compares the standard architecture, where every qubit has its own drive line,
with the shared-cavity architecture, where one battery drive line serves a group
of qubits and is only used before the computation. Cable and channel parameters
live in data/heat_channels.json; active loads are derived from pulse powers,
duty cycles, line sharing and attenuator placement.

All powers are per qubit in nW unless a name says otherwise.
"""

import json
import logging
import math
from functools import lru_cache
from importlib import resources
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

logger = logging.getLogger(__name__)

ArchitectureName = Literal["standard", "shared_cavity", "standard_sc", "shared_cavity_sc"]
Profile = Literal["derived", "quoted"]
Channel = Literal["drive", "flux", "readout_drive", "output", "pump"]

ARCHITECTURE_ALIASES = {
    "standard": "standard",
    "shared": "shared_cavity",
    "shared_cavity": "shared_cavity",
    "standard-sc": "standard_sc",
    "standard_sc": "standard_sc",
    "shared-sc": "shared_cavity_sc",
    "shared_cavity_sc": "shared_cavity_sc",
}

# Reference loads are matched to this relative residual before a warning
REFERENCE_TOLERANCE = 0.01


class CableKind(BaseModel):
    """Passive heat of one cable at the cold plate and the mixing chamber."""

    name: str
    passive_cp_nw: float = Field(ge=0)
    passive_mxc_nw: float = Field(ge=0)
    superconducting: bool = False

    model_config = ConfigDict(frozen=True)


class PulsedChannel(BaseModel):
    """Microwave channel whose average power is set by pulses and a duty cycle."""

    pulse_dbm: list[float]
    duty_cycle: float = Field(ge=0, le=1)
    scale: float = Field(default=1.0, ge=0)
    qubits_per_line: int = Field(default=1, ge=1)
    mxc_attenuation_db: float = Field(ge=0)
    cp_attenuation_db: float = Field(ge=0)
    rt_attenuation_db: float = Field(ge=0)

    model_config = ConfigDict(frozen=True)

    @property
    def device_power_w(self) -> float:
        """Average power per qubit arriving at the device."""
        pulses = sum(10 ** ((p - 30) / 10) for p in self.pulse_dbm)
        return self.duty_cycle * self.scale * pulses / self.qubits_per_line

    @property
    def mxc_nw(self) -> float:
        return self.device_power_w * 10 ** (self.mxc_attenuation_db / 10) * 1e9

    @property
    def cp_nw(self) -> float:
        total_db = self.mxc_attenuation_db + self.cp_attenuation_db
        return self.device_power_w * 10 ** (total_db / 10) * 1e9


class FluxChannel(BaseModel):
    """DC flux bias dissipation, scaled from the worst case."""

    worst_case_mxc_nw: float = Field(ge=0)
    worst_case_cp_nw: float = Field(ge=0)
    entangling_overhead: float = Field(ge=0)
    shielding_reduction: float = Field(gt=0)
    rt_attenuation_db: float = Field(ge=0)

    model_config = ConfigDict(frozen=True)

    @property
    def factor(self) -> float:
        return (1 + self.entangling_overhead) / self.shielding_reduction

    @property
    def mxc_nw(self) -> float:
        return self.worst_case_mxc_nw * self.factor

    @property
    def cp_nw(self) -> float:
        return self.worst_case_cp_nw * self.factor


class ArchitectureConfig(BaseModel):
    """Cables per qubit and cable technology of each channel."""

    name: ArchitectureName
    shared_cavity: bool
    qubits_per_battery: int = Field(default=10, ge=1)
    cables: dict[Channel, float]
    cable_kinds: dict[Channel, str]

    model_config = ConfigDict(frozen=True)

    def cable_count(self, channel: Channel) -> float:
        count = self.cables.get(channel, 0.0)
        if count < 0:
            msg = f"Negative cable count for {channel} in {self.name}"
            raise ValueError(msg)
        return count


class StagePower(BaseModel):
    cp: float
    mxc: float


class HeatParameters(BaseModel):
    """Contents of the channel data file."""

    cooling_uw: StagePower
    cycle_time_s: float = Field(gt=0)
    shared_overhead_rounds: float = Field(ge=0)
    cables: dict[str, CableKind]
    pulsed_channels: dict[str, PulsedChannel]
    flux: FluxChannel
    architectures: dict[ArchitectureName, ArchitectureConfig]
    quoted_active_nw: dict[str, StagePower]
    reference: dict[str, dict[str, dict[str, float]]]


class HeatReport(BaseModel):
    """Per-qubit heat at both stages and the resulting fridge qubit limit."""

    architecture: ArchitectureName
    profile: Profile
    passive_cp: float
    passive_mxc: float
    active_cp: float
    active_mxc: float
    total_cp: float
    total_mxc: float
    qubit_limit_cp: int | None = None
    qubit_limit_mxc: int | None = None
    qubit_limit: int | None = None
    limiting_stage: Literal["cp", "mxc"] | None = None
    active_channels: dict[str, StagePower] = Field(default_factory=dict)


@lru_cache(maxsize=1)
def load_parameters() -> HeatParameters:
    """Read the packaged channel data file."""
    source = resources.files("qbattery") / "data" / "heat_channels.json"
    raw = json.loads(source.read_text(encoding="utf-8"))
    for name, cable in raw["cables"].items():
        cable["name"] = name
    for name, arch in raw["architectures"].items():
        arch["name"] = name
    parameters = HeatParameters.model_validate(raw)
    logger.debug(f"Loaded heat parameters for {len(parameters.architectures)} architectures")
    return parameters


def resolve_architecture(name: str) -> ArchitectureConfig:
    """Look up an architecture by its name or a CLI alias.

    Raises:
        ValueError: If the name is unknown.
    """
    key = ARCHITECTURE_ALIASES.get(name)
    if key is None:
        msg = f"Unknown architecture {name!r}; choose from {sorted(ARCHITECTURE_ALIASES)}"
        raise ValueError(msg)
    return load_parameters().architectures[key]


def _architecture(arch: ArchitectureConfig | str) -> ArchitectureConfig:
    return resolve_architecture(arch) if isinstance(arch, str) else arch


def passive_per_qubit(arch: ArchitectureConfig | str) -> tuple[float, float]:
    """Sum of cables per qubit times per-cable passive heat, as (cp, mxc)."""
    arch = _architecture(arch)
    cables = load_parameters().cables
    cp = mxc = 0.0
    for channel, kind in arch.cable_kinds.items():
        count = arch.cable_count(channel)
        cp += count * cables[kind].passive_cp_nw
        mxc += count * cables[kind].passive_mxc_nw
    return cp, mxc


def active_channels(
    arch: ArchitectureConfig | str, profile: Profile = "derived"
) -> dict[str, StagePower]:
    """Active load of each channel that dissipates in this architecture.

    Shared-cavity drive lines only charge the battery before the computation,
    superconducting flux lines carry no resistive load and the readout output
    is passive.
    """
    arch = _architecture(arch)
    parameters = load_parameters()
    flux_kind = parameters.cables[arch.cable_kinds["flux"]]
    channels: list[str] = ["readout_drive", "pump"]
    if not arch.shared_cavity:
        channels.insert(0, "drive")
    if not flux_kind.superconducting:
        channels.append("flux")

    loads = {}
    for channel in channels:
        if profile == "quoted":
            loads[channel] = parameters.quoted_active_nw[channel]
        elif channel == "flux":
            loads[channel] = StagePower(cp=parameters.flux.cp_nw, mxc=parameters.flux.mxc_nw)
        else:
            pulsed = parameters.pulsed_channels[channel]
            loads[channel] = StagePower(cp=pulsed.cp_nw, mxc=pulsed.mxc_nw)
    return loads


def active_per_qubit(
    arch: ArchitectureConfig | str, profile: Profile = "derived"
) -> tuple[float, float]:
    """Summed active load as (cp, mxc)."""
    loads = active_channels(arch, profile).values()
    return sum(load.cp for load in loads), sum(load.mxc for load in loads)


def _check_reference(report: HeatReport) -> None:
    reference = load_parameters().reference
    pairs = [
        ("passive", report.passive_cp, reference["passive_nw"][report.architecture]["cp"]),
        ("passive", report.passive_mxc, reference["passive_nw"][report.architecture]["mxc"]),
        ("total", report.total_cp, reference["total_nw"][report.architecture]["cp"]),
        ("total", report.total_mxc, reference["total_nw"][report.architecture]["mxc"]),
    ]
    for label, value, expected in pairs:
        residual = abs(value - expected) / expected
        if residual > REFERENCE_TOLERANCE:
            logger.warning(
                f"{report.architecture} ({report.profile}) {label} load {value:.4g} nW "
                f"differs from the reference {expected:.4g} nW by {residual:.1%}"
            )


def heat_report(arch: ArchitectureConfig | str, profile: Profile = "derived") -> HeatReport:
    """Passive, active and total per-qubit heat at both stages."""
    arch = _architecture(arch)
    passive_cp, passive_mxc = passive_per_qubit(arch)
    loads = active_channels(arch, profile)
    active_cp = sum(load.cp for load in loads.values())
    active_mxc = sum(load.mxc for load in loads.values())
    report = HeatReport(
        architecture=arch.name,
        profile=profile,
        passive_cp=passive_cp,
        passive_mxc=passive_mxc,
        active_cp=active_cp,
        active_mxc=active_mxc,
        total_cp=passive_cp + active_cp,
        total_mxc=passive_mxc + active_mxc,
        active_channels=loads,
    )
    _check_reference(report)
    return report


def qubit_limit(
    arch: ArchitectureConfig | str,
    cooling_cp: float | None = None,
    cooling_mxc: float | None = None,
    profile: Profile = "derived",
) -> HeatReport:
    """Number of qubits a fridge can cool, per stage and overall.

    Args:
        arch: Architecture or its name.
        cooling_cp: Cold-plate cooling power in uW (default from the data file).
        cooling_mxc: Mixing-chamber cooling power in uW.
        profile: "derived" from pulse powers or "quoted" rounded channel loads.

    Returns:
        HeatReport with floor(cooling / total) per stage and their minimum.

    Raises:
        ValueError: If a cooling power is not positive or a stage total is zero.
    """
    cooling = load_parameters().cooling_uw
    cooling_cp = cooling.cp if cooling_cp is None else cooling_cp
    cooling_mxc = cooling.mxc if cooling_mxc is None else cooling_mxc
    if cooling_cp <= 0 or cooling_mxc <= 0:
        msg = f"Cooling powers must be positive, got CP={cooling_cp}, MXC={cooling_mxc}"
        raise ValueError(msg)
    report = heat_report(arch, profile)
    if report.total_cp <= 0 or report.total_mxc <= 0:
        msg = f"Architecture {report.architecture} has zero heat load at a stage"
        raise ValueError(msg)
    limit_cp = math.floor(cooling_cp * 1e3 / report.total_cp)
    limit_mxc = math.floor(cooling_mxc * 1e3 / report.total_mxc)
    stage = "cp" if limit_cp <= limit_mxc else "mxc"
    logger.info(
        f"{report.architecture}: CP {report.total_cp:.2f} nW, MXC {report.total_mxc:.3f} nW "
        f"per qubit, limit {min(limit_cp, limit_mxc)} ({stage}-bound)"
    )
    return report.model_copy(
        update={
            "qubit_limit_cp": limit_cp,
            "qubit_limit_mxc": limit_mxc,
            "qubit_limit": min(limit_cp, limit_mxc),
            "limiting_stage": stage,
        }
    )


def rt_power_per_qubit(arch: ArchitectureConfig | str) -> float:
    """Room-temperature input power in W: CP active load times the attenuation above the CP."""
    arch = _architecture(arch)
    parameters = load_parameters()
    power_nw = 0.0
    for channel, load in active_channels(arch).items():
        if channel == "flux":
            rt_db = parameters.flux.rt_attenuation_db
        else:
            rt_db = parameters.pulsed_channels[channel].rt_attenuation_db
        power_nw += load.cp * 10 ** (rt_db / 10)
    return power_nw * 1e-9


def overhead_energy(arch: ArchitectureConfig | str, cycle_time: float | None = None) -> float:
    """Battery-charging energy per qubit in J, paid once by shared-cavity architectures."""
    arch = _architecture(arch)
    if not arch.shared_cavity:
        return 0.0
    parameters = load_parameters()
    cycle_time = parameters.cycle_time_s if cycle_time is None else cycle_time
    drive = parameters.pulsed_channels["drive"]
    drive_rt_w = drive.cp_nw * 10 ** (drive.rt_attenuation_db / 10) * 1e-9
    rounds = parameters.shared_overhead_rounds / arch.qubits_per_battery
    return rounds * drive_rt_w * cycle_time


def rt_energy_curve(
    arch: ArchitectureConfig | str,
    depth_cycles: int | list[int],
    cycle_time: float | None = None,
) -> list[tuple[int, float]]:
    """Accumulated room-temperature energy per qubit (J) against circuit depth.

    E(d) = overhead + d * cycle_time * P_RT. An integer depth D gives every
    depth 0..D.

    Raises:
        ValueError: If a depth is negative or the cycle time is not positive.
    """
    cycle_time = load_parameters().cycle_time_s if cycle_time is None else cycle_time
    if cycle_time <= 0:
        msg = f"Cycle time must be positive, got {cycle_time}"
        raise ValueError(msg)
    depths = list(range(depth_cycles + 1)) if isinstance(depth_cycles, int) else depth_cycles
    if any(d < 0 for d in depths):
        msg = f"Circuit depth must be non-negative, got {min(depths)}"
        raise ValueError(msg)
    overhead = overhead_energy(arch, cycle_time)
    slope = rt_power_per_qubit(arch) * cycle_time
    return [(d, overhead + d * slope) for d in depths]


def crossover_depth(
    arch: ArchitectureConfig | str = "shared_cavity",
    reference: ArchitectureConfig | str = "standard",
    cycle_time: float | None = None,
) -> float:
    """Depth at which `arch` becomes cheaper in RT energy than `reference`.

    Raises:
        ValueError: If `arch` never catches up with `reference`.
    """
    cycle_time = load_parameters().cycle_time_s if cycle_time is None else cycle_time
    offset = overhead_energy(arch, cycle_time) - overhead_energy(reference, cycle_time)
    gain = (rt_power_per_qubit(reference) - rt_power_per_qubit(arch)) * cycle_time
    if gain <= 0:
        msg = "Architecture never overtakes the reference: its energy slope is not smaller"
        raise ValueError(msg)
    depth = max(offset, 0.0) / gain
    logger.info(f"RT energy crossover after {depth:.2f} cycles")
    return depth
