"""
Exact propagation under piecewise-constant detuning schedules.

Every segment keeps the detunings constant, so each step is an exact matrix
exponential obtained from a Hermitian eigendecomposition. Single qubits can be
measured projectively between segments with a seeded generator.
"""

import logging
from functools import lru_cache
import sys

if sys.version_info >= (3, 11):
    from typing import Self
else:  # pragma: no cover
    from typing_extensions import Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy import linalg

from qbattery.basis import (
    SystemConfig,
    bit_table,
    bits_to_index,
    excitation_counts,
    full_index,
)
from qbattery.hamiltonian import (
    BasisTag,
    HermitianOperator,
    as_detunings,
    build_collective,
    build_dressed,
    build_full,
)

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-12
UNITARITY_TOLERANCE = 1e-10


class EvolutionError(RuntimeError):
    """Raised when propagation or measurement hits a numerical failure."""


class Segment(BaseModel):
    """Constant-detuning interval of a schedule."""

    duration: float = Field(gt=0, allow_inf_nan=False)
    delta: tuple[float, ...]

    model_config = ConfigDict(frozen=True)

    @field_validator("delta")
    @classmethod
    def finite_delta(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if not value or not np.all(np.isfinite(value)):
            msg = f"Segment detunings must be finite and non-empty, got {value}"
            raise ValueError(msg)
        return value


class DetuningSchedule(BaseModel):
    """Ordered piecewise-constant detuning segments."""

    segments: list[Segment] = Field(min_length=1)

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def same_width(self) -> Self:
        widths = {len(segment.delta) for segment in self.segments}
        if len(widths) != 1:
            msg = f"All segments must detune the same number of qubits, got {sorted(widths)}"
            raise ValueError(msg)
        return self

    @property
    def n_qubits(self) -> int:
        return len(self.segments[0].delta)

    @property
    def total_duration(self) -> float:
        return float(sum(segment.duration for segment in self.segments))

    def reversed(self) -> "DetuningSchedule":
        return DetuningSchedule(segments=list(reversed(self.segments)))

    def __add__(self, other: "DetuningSchedule") -> "DetuningSchedule":
        return DetuningSchedule(segments=[*self.segments, *other.segments])


class Propagator(BaseModel):
    """Unitary matrix tagged with its basis."""

    matrix: np.ndarray
    basis_tag: BasisTag

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @model_validator(mode="after")
    def unitary(self) -> Self:
        identity = np.eye(self.matrix.shape[0])
        deviation = np.max(np.abs(self.matrix.conj().T @ self.matrix - identity))
        if deviation > UNITARITY_TOLERANCE:
            msg = f"Propagator is not unitary (deviation {deviation:.2e})"
            raise EvolutionError(msg)
        return self

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, other: "Propagator") -> "Propagator":
        if self.basis_tag != other.basis_tag:
            msg = f"Cannot compose {self.basis_tag} and {other.basis_tag} propagators"
            raise ValueError(msg)
        return Propagator(matrix=self.matrix @ other.matrix, basis_tag=self.basis_tag)


class QuantumState(BaseModel):
    """Normalized state vector in the dressed, full or Dicke basis."""

    amplitudes: np.ndarray
    basis_tag: BasisTag
    config: SystemConfig

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @model_validator(mode="after")
    def normalized(self) -> Self:
        expected = {
            "dressed": self.config.dressed_dim,
            "full": self.config.full_dim,
            "dicke": self.config.dicke_dim,
        }[self.basis_tag]
        if self.amplitudes.shape != (expected,):
            msg = f"{self.basis_tag} state needs {expected} amplitudes, got {self.amplitudes.shape}"
            raise ValueError(msg)
        drift = abs(np.linalg.norm(self.amplitudes) - 1.0)
        if drift > 1e-10:
            msg = f"State is not normalized (|norm - 1| = {drift:.2e})"
            raise ValueError(msg)
        return self

    @classmethod
    def from_bits(
        cls,
        config: SystemConfig,
        bits: str,
        basis_tag: BasisTag = "dressed",
        photons: int | None = None,
    ) -> "QuantumState":
        """Computational basis state; in the full basis photons default to n_fb - popcount."""
        if len(bits) != config.n_qubits:
            msg = f"Bit string {bits!r} does not match {config.n_qubits} qubits"
            raise ValueError(msg)
        index = bits_to_index(bits)
        if basis_tag == "dressed":
            config.require_dressed()
            dim = config.dressed_dim
        elif basis_tag == "full":
            if photons is None:
                photons = config.n_fb - bits.count("1")
            if not 0 <= photons <= config.cutoff:
                msg = f"Photon number {photons} outside [0, {config.cutoff}]"
                raise ValueError(msg)
            index = full_index(index, photons, config.n_qubits)
            dim = config.full_dim
        else:
            msg = "Use QuantumState.from_vector for Dicke states"
            raise ValueError(msg)
        amplitudes = np.zeros(dim, dtype=complex)
        amplitudes[index] = 1.0
        return cls(amplitudes=amplitudes, basis_tag=basis_tag, config=config)

    @classmethod
    def from_vector(
        cls, config: SystemConfig, vector: np.ndarray, basis_tag: BasisTag = "dressed"
    ) -> "QuantumState":
        """Normalize an arbitrary vector into a state."""
        amplitudes = np.asarray(vector, dtype=complex)
        norm = np.linalg.norm(amplitudes)
        if norm == 0:
            msg = "Cannot build a state from the zero vector"
            raise ValueError(msg)
        return cls(amplitudes=amplitudes / norm, basis_tag=basis_tag, config=config)

    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def qubit_indices(self) -> np.ndarray:
        """Computational (qubit) index of every basis element of this state."""
        if self.basis_tag == "dicke":
            msg = "Dicke states have no computational qubit index"
            raise ValueError(msg)
        return np.arange(self.amplitudes.size) % 2**self.config.n_qubits

    def qubit_excitations(self) -> float:
        """Expectation value of the total qubit excitation number."""
        if self.basis_tag == "dicke":
            counts = np.arange(self.config.n_qubits + 1)
        else:
            counts = excitation_counts(self.config.n_qubits)[self.qubit_indices()]
        return float(self.populations() @ counts)

    def photon_number(self) -> float:
        """Expectation of the battery photon number (implied outside the full basis)."""
        if self.basis_tag == "full":
            photons = np.arange(self.amplitudes.size) // 2**self.config.n_qubits
            return float(self.populations() @ photons)
        return self.config.n_fb - self.qubit_excitations()

    def with_amplitudes(self, amplitudes: np.ndarray) -> "QuantumState":
        return QuantumState(amplitudes=amplitudes, basis_tag=self.basis_tag, config=self.config)


@lru_cache(maxsize=2048)
def _eigensystem(
    config: SystemConfig, basis_tag: BasisTag, delta: tuple[float, ...]
) -> tuple[np.ndarray, np.ndarray]:
    operator = hamiltonian_for(config, basis_tag, delta)
    values, vectors = _diagonalize(operator)
    values.setflags(write=False)
    vectors.setflags(write=False)
    return values, vectors


def _diagonalize(operator: HermitianOperator) -> tuple[np.ndarray, np.ndarray]:
    if not np.all(np.isfinite(operator.matrix)):
        msg = "Hamiltonian has non-finite entries"
        raise EvolutionError(msg)
    try:
        return linalg.eigh(operator.matrix)
    except linalg.LinAlgError as e:
        msg = f"Eigendecomposition failed: {e}"
        raise EvolutionError(msg) from e


def hamiltonian_for(
    config: SystemConfig, basis_tag: BasisTag, delta: tuple[float, ...] | np.ndarray
) -> HermitianOperator:
    """Dispatch to the builder of the requested basis."""
    if basis_tag == "dressed":
        return build_dressed(config, delta)
    if basis_tag == "full":
        return build_full(config, delta)
    vector = as_detunings(delta, config.n_qubits)
    if not np.all(vector == vector[0]):
        msg = "The collective model needs equal detunings on every qubit"
        raise ValueError(msg)
    return build_collective(config, float(vector[0]))


def _exponentiate(values: np.ndarray, vectors: np.ndarray, t: float) -> np.ndarray:
    return (vectors * np.exp(-1j * values * t)) @ vectors.conj().T


def propagator(hamiltonian: HermitianOperator, t: float) -> Propagator:
    """Compute exp(-iHt) via a Hermitian eigendecomposition.

    Raises:
        ValueError: If t is negative.
        EvolutionError: If the Hamiltonian has non-finite entries.
    """
    if t < 0:
        msg = f"Evolution time must be non-negative, got {t}"
        raise ValueError(msg)
    values, vectors = _diagonalize(hamiltonian)
    return Propagator(
        matrix=_exponentiate(values, vectors, t), basis_tag=hamiltonian.basis_tag
    )


def segment_unitary(
    config: SystemConfig, segment: Segment, basis_tag: BasisTag = "dressed"
) -> np.ndarray:
    """Unitary matrix of one segment, reusing cached eigensystems."""
    values, vectors = _eigensystem(config, basis_tag, tuple(float(d) for d in segment.delta))
    return _exponentiate(values, vectors, segment.duration)


def _check_width(config: SystemConfig, schedule: DetuningSchedule) -> None:
    if schedule.n_qubits != config.n_qubits:
        msg = (
            f"Schedule detunes {schedule.n_qubits} qubits but the system has "
            f"{config.n_qubits}"
        )
        raise ValueError(msg)


def schedule_unitary(
    config: SystemConfig, schedule: DetuningSchedule, basis_tag: BasisTag = "dressed"
) -> Propagator:
    """Propagator U_k ... U_1 of a whole schedule."""
    _check_width(config, schedule)
    dim = {"dressed": config.dressed_dim, "full": config.full_dim, "dicke": config.dicke_dim}[
        basis_tag
    ]
    total = np.eye(dim, dtype=complex)
    for segment in schedule.segments:
        total = segment_unitary(config, segment, basis_tag) @ total
    return Propagator(matrix=total, basis_tag=basis_tag)


def run_schedule(state: QuantumState, schedule: DetuningSchedule) -> QuantumState:
    """Evolve a state through every segment of a schedule.

    Raises:
        ValueError: If the schedule does not match the state's system.
        EvolutionError: If the norm drifts by more than 1e-12 in a segment.
    """
    _check_width(state.config, schedule)
    amplitudes = state.amplitudes
    for position, segment in enumerate(schedule.segments):
        amplitudes = segment_unitary(state.config, segment, state.basis_tag) @ amplitudes
        norm = np.linalg.norm(amplitudes)
        if abs(norm - 1.0) > NORM_TOLERANCE:
            msg = f"Norm drift {abs(norm - 1.0):.2e} after segment {position}"
            raise EvolutionError(msg)
        amplitudes = amplitudes / norm
    logger.debug(
        f"Ran {len(schedule.segments)} segments over t={schedule.total_duration:.4f}"
    )
    return state.with_amplitudes(amplitudes)


def project_qubit(state: QuantumState, qubit: int, outcome: int) -> tuple[float, QuantumState | None]:
    """Probability of a measurement outcome and the normalized post-measurement state.

    The post-measurement state is None when the branch has probability below 1e-15.
    """
    if state.basis_tag == "dicke":
        msg = "Single-qubit measurement needs the dressed or full basis"
        raise ValueError(msg)
    bits = bit_table(state.config.n_qubits)[state.qubit_indices(), qubit]
    keep = bits == outcome
    probability = float(np.sum(np.abs(state.amplitudes[keep]) ** 2))
    if probability < 1e-15:
        return probability, None
    projected = np.where(keep, state.amplitudes, 0.0)
    return probability, state.with_amplitudes(projected / np.sqrt(probability))


def measure_qubit(
    state: QuantumState, qubit: int, rng_seed: int | np.random.Generator
) -> tuple[int, QuantumState, float]:
    """Projectively measure one qubit with Born-rule sampling.

    Args:
        state: Dressed or full state.
        qubit: 0-based qubit index.
        rng_seed: Seed or generator; a seed gives a trajectory-local generator.

    Returns:
        Tuple of (outcome, post-measurement state, outcome probability).

    Raises:
        EvolutionError: If the sampled branch is degenerate.
    """
    rng = np.random.default_rng(rng_seed)
    probability_one, _ = project_qubit(state, qubit, 1)
    outcome = int(rng.random() < probability_one)
    probability, post_state = project_qubit(state, qubit, outcome)
    if post_state is None:
        msg = f"Sampled a degenerate branch (p={probability:.2e}) on qubit {qubit}"
        raise EvolutionError(msg)
    logger.info(f"Measured qubit {qubit + 1}: outcome {outcome} with p={probability:.6f}")
    return outcome, post_state, probability
