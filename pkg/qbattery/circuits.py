"""
Logical-state encoding circuits for the distance-2 surface code.

Qubits 1-4 hold the code, qubit 5 is the ancilla that probes IIXX. Every stage
is a detuning schedule optimized from the state the previous stage actually
produced towards the ideal intermediate state, and the ancilla measurement
branches the circuit. Simulation runs in units of g; the hardware coupling
g = 2 pi x 0.015 GHz only converts times to nanoseconds for reporting.
"""

import logging
import math
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from qbattery.basis import SystemConfig, bit_table, qubit_mask
from qbattery.config import config as app_config
from qbattery.evolution import (
    DetuningSchedule,
    EvolutionError,
    QuantumState,
    Segment,
    measure_qubit,
    project_qubit,
    run_schedule,
)
from qbattery.fidelity import vector_fidelity
from qbattery.gates import (
    dispersive_unitary,
    embed_operator,
    entangling_gate,
    entangling_time,
    parity_probe,
    x_gate_time,
)
from qbattery.optimizer import OptimizationProblem, evaluate_schedule, solve

logger = logging.getLogger(__name__)

BranchPolicy = Literal["sample", "post_select", "both"]

CODE_QUBITS = (0, 1, 2, 3)
PROBE_ANCILLA = 4
PROBE_DATA = (2, 3)

# Rotation taking X to Z on the probed pair, exp(-i pi/4 Y)
BASIS_CHANGE = np.array([[1, -1], [1, 1]], dtype=complex) / math.sqrt(2)


class PauliString(BaseModel):
    """Tensor product of Paulis; qubit 1 is the leftmost letter."""

    label: str

    model_config = ConfigDict(frozen=True)

    @field_validator("label")
    @classmethod
    def known_letters(cls, value: str) -> str:
        value = value.upper()
        if not value or set(value) - set("IXYZ"):
            msg = f"Pauli string may only contain I, X, Y, Z, got {value!r}"
            raise ValueError(msg)
        return value


STABILIZERS = {label: PauliString(label=label) for label in ("XXXX", "ZZII", "IIZZ")}
REPORTED_PAULIS = {
    label: PauliString(label=label) for label in ("XXXX", "ZZII", "IIZZ", "IZZI", "IIXX")
}


def pauli_apply(vector: np.ndarray, pauli: PauliString, n_qubits: int) -> np.ndarray:
    """Apply a Pauli string (padded with identities) to a computational-basis vector."""
    if len(pauli.label) > n_qubits:
        msg = f"{pauli.label} acts on more than {n_qubits} qubits"
        raise ValueError(msg)
    label = pauli.label.ljust(n_qubits, "I")
    table = bit_table(n_qubits)
    signs = 1 - 2 * table
    flip = 0
    factor = np.ones(2**n_qubits, dtype=complex)
    for qubit, letter in enumerate(label):
        if letter in "XY":
            flip |= qubit_mask(n_qubits, qubit)
        if letter == "Z":
            factor *= signs[:, qubit]
        elif letter == "Y":
            factor *= 1j * signs[:, qubit]
    result = np.zeros_like(vector, dtype=complex)
    result[np.arange(2**n_qubits) ^ flip] = factor * vector
    return result


def stabilizer_expectation(state: QuantumState | np.ndarray, pauli: PauliString) -> float:
    """<psi|P|psi> of a dressed state (or a raw qubit-basis vector)."""
    if isinstance(state, QuantumState):
        if state.basis_tag != "dressed":
            msg = "Stabilizers are evaluated on dressed states"
            raise ValueError(msg)
        vector = state.amplitudes
    else:
        vector = np.asarray(state, dtype=complex)
    n_qubits = int(round(math.log2(vector.size)))
    return float(np.real(np.vdot(vector, pauli_apply(vector, pauli, n_qubits))))


def _register_vector(
    n_qubits: int, amplitudes: dict[str, complex], qubits: tuple[int, ...]
) -> np.ndarray:
    vector = np.zeros(2**n_qubits, dtype=complex)
    for bits, amplitude in amplitudes.items():
        index = sum(
            qubit_mask(n_qubits, q) for q, b in zip(qubits, bits, strict=True) if b == "1"
        )
        vector[index] += amplitude
    return vector / np.linalg.norm(vector)


def ghz_vector(n_qubits: int, qubits: tuple[int, ...] = CODE_QUBITS) -> np.ndarray:
    """(|0...0> + |1...1>)/sqrt(2) on `qubits`, every other qubit in |0>."""
    width = len(qubits)
    return _register_vector(n_qubits, {"0" * width: 1.0, "1" * width: 1.0}, qubits)


def logical_plus_vector(n_qubits: int, qubits: tuple[int, ...] = CODE_QUBITS) -> np.ndarray:
    """Logical |+> of the four-qubit code: Bell pairs on (q1, q2) and (q3, q4)."""
    states = ("0000", "0011", "1100", "1111")
    return _register_vector(n_qubits, dict.fromkeys(states, 1.0), qubits)


def coherent_spin_vector(n_qubits: int, qubits: tuple[int, ...] = CODE_QUBITS) -> np.ndarray:
    """Product of (|0> - i|1>)/sqrt(2) on `qubits`."""
    amplitudes = {}
    for index in range(2 ** len(qubits)):
        bits = format(index, f"0{len(qubits)}b")
        amplitudes[bits] = (-1j) ** bits.count("1")
    return _register_vector(n_qubits, amplitudes, qubits)


def with_qubit_set(vector: np.ndarray, n_qubits: int, qubit: int, bit: int) -> np.ndarray:
    """Move a vector with `qubit` in |0> onto |bit> of that qubit."""
    if bit == 0:
        return vector.copy()
    mask = qubit_mask(n_qubits, qubit)
    result = np.zeros_like(vector)
    indices = np.flatnonzero((np.arange(vector.size) & mask) == 0)
    result[indices | mask] = vector[indices]
    return result


class CircuitSettings(BaseModel):
    """Encoding-circuit parameters; detunings and park distances are in units of g."""

    n_fb: int = Field(default=7, ge=5)
    g_ghz: float = Field(default=0.015, gt=0)
    park: float = Field(default=300.0, gt=0)
    entangle_detuning: float = -60.0
    probe_detuning: float = -80.0
    local_bound: float = Field(default=80.0, gt=0)
    charge_segments: int = Field(default=4, ge=1)
    entangle_segments: int = Field(default=1, ge=1)
    local_segments: int = Field(default=5, ge=1)
    rotation_segments: int = Field(default=3, ge=1)
    optimize: bool = True
    end_to_end: bool = False
    branch_policy: BranchPolicy = "sample"
    selected_outcome: int = Field(default=0, ge=0, le=1)
    seed: int | None = None
    n_starts: int | None = None
    max_evaluations: int | None = None
    target_error: float = Field(default=1e-5, gt=0)

    model_config = ConfigDict(frozen=True)

    def to_ns(self, t: float) -> float:
        """Convert a time in units of 1/g to nanoseconds."""
        return t / (2 * math.pi * self.g_ghz)


class StageRecord(BaseModel):
    """One optimized (or seeded) stage of a circuit."""

    name: str
    target: str
    schedule: DetuningSchedule
    fidelity: float
    evaluations: int
    optimized: bool
    duration: float
    duration_ns: float


class MeasurementRecord(BaseModel):
    qubit: int
    outcome: int
    probability: float
    probabilities: tuple[float, float]
    seed: int | None
    policy: BranchPolicy


class BranchRecord(BaseModel):
    """Post-measurement continuation of the circuit for one ancilla outcome."""

    outcome: int
    probability: float
    probed_parity: float
    stages: list[StageRecord]
    fidelity: float
    stabilizers: dict[str, float]
    state: np.ndarray | None = Field(default=None, exclude=True)

    model_config = ConfigDict(arbitrary_types_allowed=True)


class CircuitRun(BaseModel):
    """Serializable record of an encoding circuit."""

    circuit: Literal["logical_zero", "logical_plus"]
    n_qubits: int
    n_fb: int
    settings: CircuitSettings
    seed: int
    branch_policy: BranchPolicy | None = None
    gates: list[StageRecord]
    measurements: list[MeasurementRecord] = Field(default_factory=list)
    branches: list[BranchRecord] = Field(default_factory=list)
    checkpoints: dict[str, float]
    fidelity: float
    stabilizers: dict[str, float]
    total_duration_ns: float
    state: np.ndarray | None = Field(default=None, exclude=True)

    model_config = ConfigDict(arbitrary_types_allowed=True)


class _Encoder:
    """Runs stages on one system, tracking the state between them."""

    def __init__(self, config: SystemConfig, settings: CircuitSettings) -> None:
        self.config = config
        self.settings = settings
        self.seed = app_config.random_seed if settings.seed is None else settings.seed
        self.idle = -math.copysign(settings.park, settings.entangle_detuning) * config.g

    def fixed(self, moving: tuple[int, ...]) -> dict[int, float]:
        return {q: self.idle for q in range(self.config.n_qubits) if q not in moving}

    def uniform_segments(
        self, total: float, n_segments: int, active: dict[int, float]
    ) -> DetuningSchedule:
        vector = np.full(self.config.n_qubits, self.idle)
        for qubit, value in active.items():
            vector[qubit] = value
        return DetuningSchedule(
            segments=[
                Segment(duration=total / n_segments, delta=tuple(float(v) for v in vector))
            ]
            * n_segments
        )

    def split(self, schedule: DetuningSchedule, n_segments: int) -> DetuningSchedule:
        """Cut a one-segment schedule into equal pieces."""
        segment = schedule.segments[0]
        piece = Segment(duration=segment.duration / n_segments, delta=segment.delta)
        return DetuningSchedule(segments=[piece] * n_segments)

    def stage(
        self,
        name: str,
        target: str,
        state: np.ndarray,
        groups: tuple[tuple[int, ...], ...],
        n_segments: int,
        seeds: list[DetuningSchedule],
        target_state: np.ndarray | None = None,
        target_support: np.ndarray | None = None,
        bound: float | None = None,
    ) -> tuple[np.ndarray, StageRecord]:
        moving = tuple(q for group in groups for q in group)
        bound = self.settings.local_bound if bound is None else bound
        problem = OptimizationProblem(
            config=self.config,
            n_segments=n_segments,
            objective="state" if target_support is None else "support",
            initial_state=state,
            target_state=target_state,
            target_support=target_support,
            qubit_groups=groups,
            fixed_detunings=self.fixed(moving),
            detuning_bounds=(-bound, bound),
            initial_guesses=seeds,
        )
        if self.settings.optimize:
            result = solve(
                problem,
                seed=self.seed,
                n_starts=self.settings.n_starts,
                max_evaluations=self.settings.max_evaluations,
                target_error=self.settings.target_error,
            )
            schedule, evaluations = result.schedule, result.evaluations
        else:
            schedule, evaluations = seeds[0], 0
        fidelity = evaluate_schedule(problem, schedule).fidelity
        start = QuantumState(amplitudes=state, basis_tag="dressed", config=self.config)
        final = run_schedule(start, schedule)
        logger.info(
            f"Stage {name}: fidelity {fidelity:.5f} over t={schedule.total_duration:.3f}"
        )
        record = StageRecord(
            name=name,
            target=target,
            schedule=schedule,
            fidelity=fidelity,
            evaluations=evaluations,
            optimized=self.settings.optimize,
            duration=schedule.total_duration,
            duration_ns=self.settings.to_ns(schedule.total_duration),
        )
        return final.amplitudes, record


def _circuit_config(
    config: SystemConfig | None, settings: CircuitSettings, minimum: int
) -> SystemConfig:
    config = config or SystemConfig(n_qubits=5, n_fb=settings.n_fb, g=1.0)
    if config.n_qubits < minimum:
        msg = f"Encoding needs at least {minimum} qubits, got {config.n_qubits}"
        raise ValueError(msg)
    config.require_dressed()
    return config


def _report(vector: np.ndarray, paulis: dict[str, PauliString]) -> dict[str, float]:
    return {label: stabilizer_expectation(vector, pauli) for label, pauli in paulis.items()}


def _prepare_logical_zero(
    encoder: _Encoder,
) -> tuple[np.ndarray, list[StageRecord], dict[str, float]]:
    config, settings = encoder.config, encoder.settings
    n = config.n_qubits
    g = config.g
    group = (CODE_QUBITS,)
    delta_e = settings.entangle_detuning * g
    quarter = x_gate_time(config.n_fb - len(CODE_QUBITS) / 2, g) / 2
    resonant = dict.fromkeys(CODE_QUBITS, 0.0)

    charge_seed = encoder.uniform_segments(quarter, settings.charge_segments, resonant)
    entangle_seed = encoder.split(
        entangling_gate(config, CODE_QUBITS, delta_e, park=settings.park).schedule,
        settings.entangle_segments,
    )
    local_seed = encoder.uniform_segments(quarter, settings.local_segments, resonant)

    start = np.zeros(config.dressed_dim, dtype=complex)
    start[0] = 1.0
    ghz = ghz_vector(n)
    if settings.end_to_end:
        k = settings.charge_segments + settings.entangle_segments + settings.local_segments
        state, record = encoder.stage(
            "encode_zero",
            "GHZ on qubits 1-4",
            start,
            group,
            k,
            [charge_seed + entangle_seed + local_seed],
            target_state=ghz,
        )
        return state, [record], {"encode_zero": record.fidelity}

    spin = coherent_spin_vector(n)
    twist = embed_operator(
        dispersive_unitary(config, delta_e, len(CODE_QUBITS), entangling_time(delta_e, g)),
        CODE_QUBITS,
        n,
    )
    twisted = twist @ spin

    records = []
    state = start
    stages = (
        ("charge", "coherent spin state on qubits 1-4", spin, settings.charge_segments),
        ("entangle", "dispersive twist of the spin state", twisted, settings.entangle_segments),
        ("local", "GHZ on qubits 1-4", ghz, settings.local_segments),
    )
    seeds = (charge_seed, entangle_seed, local_seed)
    for (name, target, target_vector, n_segments), seed in zip(stages, seeds, strict=True):
        state, record = encoder.stage(
            name, target, state, group, n_segments, [seed], target_state=target_vector
        )
        records.append(record)
    checkpoints = {record.name: record.fidelity for record in records}
    return state, records, checkpoints


def encode_logical_zero(
    config: SystemConfig | None = None, settings: CircuitSettings | None = None
) -> CircuitRun:
    """Encode |0>_L = GHZ on qubits 1-4 with one collective entangling gate.

    Stages: charge the code qubits to a coherent spin state, twist it with the
    dispersive interaction, then rotate the result onto GHZ. Qubit 5 stays
    parked in |0>.

    Args:
        config: System (default 5 qubits at n_fb = settings.n_fb, g = 1).
        settings: Circuit parameters.

    Returns:
        CircuitRun with the GHZ fidelity and the XXXX, ZZII, IIZZ values.
    """
    settings = settings or CircuitSettings()
    config = _circuit_config(config, settings, len(CODE_QUBITS))
    encoder = _Encoder(config, settings)
    state, records, checkpoints = _prepare_logical_zero(encoder)
    fidelity = vector_fidelity(ghz_vector(config.n_qubits), state)
    stabilizers = _report(state, STABILIZERS)
    logger.info(
        f"Logical zero: fidelity {fidelity:.5f}, "
        + ", ".join(f"{k}={v:+.4f}" for k, v in stabilizers.items())
    )
    return CircuitRun(
        circuit="logical_zero",
        n_qubits=config.n_qubits,
        n_fb=config.n_fb,
        settings=settings,
        seed=encoder.seed,
        gates=records,
        checkpoints=checkpoints,
        fidelity=fidelity,
        stabilizers=stabilizers,
        total_duration_ns=sum(r.duration_ns for r in records),
        state=state,
    )


def _rotated(vector: np.ndarray, n_qubits: int, inverse: bool = False) -> np.ndarray:
    rotation = BASIS_CHANGE.conj().T if inverse else BASIS_CHANGE
    pair = np.kron(rotation, rotation)
    return embed_operator(pair, PROBE_DATA, n_qubits) @ vector


def _parity_support(n_qubits: int) -> np.ndarray:
    """Basis states whose ancilla bit equals the Z parity of the probed pair."""
    table = bit_table(n_qubits)
    parity = table[:, list(PROBE_DATA)].sum(axis=1) % 2
    return parity == table[:, PROBE_ANCILLA]


def encode_logical_plus(
    config: SystemConfig | None = None,
    branch_policy: BranchPolicy | None = None,
    settings: CircuitSettings | None = None,
) -> CircuitRun:
    """Encode |+>_L by measuring IIXX on |0>_L through the ancilla.

    After |0>_L the probed pair is rotated so X becomes Z, the ancilla picks up
    the pair's Z parity, and measuring it projects the code onto an IIXX
    eigenspace. Each measured branch is then rotated back towards |+>_L with
    the ancilla left in its measured state; on the odd branch the optimized
    rotation also absorbs the Z2 Z3 correction.

    Args:
        config: System with at least 5 qubits.
        branch_policy: "sample" draws the outcome from the seeded generator,
            "post_select" keeps settings.selected_outcome, "both" continues both
            branches and weights their fidelities by probability.
        settings: Circuit parameters.

    Raises:
        EvolutionError: If the requested branch has vanishing probability.
    """
    settings = settings or CircuitSettings()
    policy = branch_policy or settings.branch_policy
    config = _circuit_config(config, settings, PROBE_ANCILLA + 1)
    n = config.n_qubits
    encoder = _Encoder(config, settings)
    state, records, checkpoints = _prepare_logical_zero(encoder)
    checkpoints["logical_zero"] = vector_fidelity(ghz_vector(n), state)

    pairs = ((0, 1), PROBE_DATA)
    half = x_gate_time(config.n_fb - 2, config.g) / 2
    far = settings.local_bound * config.g
    rotate_seed = encoder.uniform_segments(
        half, settings.rotation_segments, {0: far, 1: far, 2: 0.0, 3: 0.0}
    )
    unrotate_seed = encoder.uniform_segments(
        3 * half, settings.rotation_segments, {0: far, 1: far, 2: 0.0, 3: 0.0}
    )
    state, record = encoder.stage(
        "rotate_in",
        "IIXX mapped onto IIZZ",
        state,
        pairs,
        settings.rotation_segments,
        [rotate_seed],
        target_state=_rotated(ghz_vector(n), n),
    )
    records.append(record)
    checkpoints["rotate_in"] = record.fidelity

    probe = parity_probe(
        config,
        PROBE_DATA,
        PROBE_ANCILLA,
        settings.probe_detuning * config.g,
        park=settings.park,
        n_eff=config.n_fb - 2,
    )
    probe_groups = ((0, 1), PROBE_DATA, (PROBE_ANCILLA,))
    state, record = encoder.stage(
        "parity_probe",
        "ancilla records the Z parity of qubits 3-4",
        state,
        probe_groups,
        len(probe.schedule.segments),
        [probe.schedule],
        target_support=_parity_support(n),
        bound=2 * settings.park,
    )
    records.append(record)
    checkpoints["parity_probe"] = record.fidelity

    probed = QuantumState(amplitudes=state, basis_tag="dressed", config=config)
    probabilities = tuple(project_qubit(probed, PROBE_ANCILLA, bit)[0] for bit in (0, 1))
    if policy == "sample":
        outcome, _, _ = measure_qubit(probed, PROBE_ANCILLA, encoder.seed)
        outcomes = [outcome]
    elif policy == "post_select":
        outcomes = [settings.selected_outcome]
    else:
        outcomes = [bit for bit in (0, 1) if probabilities[bit] >= 1e-15]
    measurements = [
        MeasurementRecord(
            qubit=PROBE_ANCILLA + 1,
            outcome=bit,
            probability=probabilities[bit],
            probabilities=probabilities,
            seed=encoder.seed if policy == "sample" else None,
            policy=policy,
        )
        for bit in outcomes
    ]

    target_plus = logical_plus_vector(n)
    branches = []
    for bit in outcomes:
        probability, branch_state = project_qubit(probed, PROBE_ANCILLA, bit)
        if branch_state is None:
            msg = f"Ancilla outcome {bit} has vanishing probability {probability:.2e}"
            raise EvolutionError(msg)
        probed_parity = stabilizer_expectation(branch_state, REPORTED_PAULIS["IIZZ"])
        final, record = encoder.stage(
            f"rotate_out_{bit}",
            f"|+>_L with ancilla in |{bit}>",
            branch_state.amplitudes,
            pairs,
            settings.rotation_segments,
            [unrotate_seed, rotate_seed],
            target_state=with_qubit_set(target_plus, n, PROBE_ANCILLA, bit),
        )
        fidelity = vector_fidelity(with_qubit_set(target_plus, n, PROBE_ANCILLA, bit), final)
        branches.append(
            BranchRecord(
                outcome=bit,
                probability=probability,
                probed_parity=probed_parity,
                stages=[record],
                fidelity=fidelity,
                stabilizers=_report(final, REPORTED_PAULIS),
                state=final,
            )
        )
        logger.info(
            f"Branch {bit} (p={probability:.4f}): parity {probed_parity:+.4f}, "
            f"fidelity {fidelity:.5f}"
        )

    weights = np.array([b.probability for b in branches])
    weights = weights / weights.sum()
    fidelity = float(weights @ [b.fidelity for b in branches])
    stabilizers = {
        label: float(weights @ [b.stabilizers[label] for b in branches])
        for label in REPORTED_PAULIS
    }
    total = sum(r.duration_ns for r in records) + max(
        b.stages[0].duration_ns for b in branches
    )
    return CircuitRun(
        circuit="logical_plus",
        n_qubits=n,
        n_fb=config.n_fb,
        settings=settings,
        seed=encoder.seed,
        branch_policy=policy,
        gates=records,
        measurements=measurements,
        branches=branches,
        checkpoints=checkpoints,
        fidelity=fidelity,
        stabilizers=stabilizers,
        total_duration_ns=total,
        state=branches[0].state if len(branches) == 1 else None,
    )
