"""
Fidelity metrics.

State overlaps, trace-based gate fidelities, block-restricted process
fidelities and the analytic charging-error estimate.
"""

import logging
import math
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from qbattery.evolution import Propagator, QuantumState

logger = logging.getLogger(__name__)

OVERFLOW_TOLERANCE = 1e-12


class FidelityError(RuntimeError):
    """Raised when a fidelity leaves [0, 1] by more than rounding noise."""


class FidelityReport(BaseModel):
    """A fidelity value together with what was compared."""

    value: float = Field(ge=0.0, le=1.0 + OVERFLOW_TOLERANCE)
    kind: Literal["state", "avg_gate", "process_subspace"]
    operands: str = ""

    model_config = ConfigDict(frozen=True)


def _clamp(value: float) -> float:
    if value > 1.0 + OVERFLOW_TOLERANCE or value < -OVERFLOW_TOLERANCE:
        msg = f"Fidelity {value!r} outside [0, 1] beyond rounding"
        raise FidelityError(msg)
    return min(max(value, 0.0), 1.0)


def _matrix(operator: Propagator | np.ndarray) -> np.ndarray:
    return operator.matrix if isinstance(operator, Propagator) else np.asarray(operator)


def vector_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """|<a|b>|^2 of two normalized vectors."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        msg = f"Vector shapes differ: {a.shape} vs {b.shape}"
        raise ValueError(msg)
    return _clamp(float(abs(np.vdot(a, b)) ** 2))


def state_fidelity(a: QuantumState, b: QuantumState) -> float:
    """Phase-insensitive overlap |<a|b>|^2.

    Raises:
        ValueError: If the states live in different bases.
    """
    if a.basis_tag != b.basis_tag:
        msg = f"Cannot compare {a.basis_tag} and {b.basis_tag} states"
        raise ValueError(msg)
    return vector_fidelity(a.amplitudes, b.amplitudes)


def average_gate_fidelity(
    u_ideal: Propagator | np.ndarray, u_actual: Propagator | np.ndarray
) -> float:
    """Trace fidelity |Tr(U_ideal^dagger U_actual)|^2 / d^2.

    Raises:
        ValueError: If the dimensions differ.
    """
    ideal = _matrix(u_ideal)
    actual = _matrix(u_actual)
    if ideal.shape != actual.shape:
        msg = f"Unitary dimensions differ: {ideal.shape} vs {actual.shape}"
        raise ValueError(msg)
    dim = ideal.shape[0]
    overlap = np.trace(ideal.conj().T @ actual)
    return _clamp(float(abs(overlap) ** 2 / dim**2))


def subspace_process_fidelity(
    u1: Propagator | np.ndarray,
    u2: Propagator | np.ndarray,
    subspace_projector: np.ndarray,
) -> float:
    """Trace fidelity of two unitaries restricted to a projected block.

    Both unitaries are compressed to P U P and compared with the block
    dimension squared as denominator.

    Raises:
        ValueError: If the projector is not idempotent or has rank zero.
    """
    projector = np.asarray(subspace_projector)
    if np.max(np.abs(projector @ projector - projector)) > 1e-10:
        msg = "Subspace projector is not idempotent"
        raise ValueError(msg)
    rank = round(float(np.real(np.trace(projector))))
    if rank == 0:
        msg = "Subspace projector has rank zero"
        raise ValueError(msg)
    first = projector @ _matrix(u1) @ projector
    second = projector @ _matrix(u2) @ projector
    overlap = np.trace(first.conj().T @ second)
    return _clamp(float(abs(overlap) ** 2 / rank**2))


def block_process_fidelity(block_a: np.ndarray, block_b: np.ndarray) -> float:
    """Trace fidelity between two equally sized unitary blocks."""
    return average_gate_fidelity(block_a, block_b)


def charging_error_oracle(r: float, n_fb: int | None = None) -> float:
    """First-order infidelity of the parallel X gate on a Fock battery.

    With only the excitation ratio r = n_fb / N the estimate is
    2 (pi/8)^2 / r^2. Passing n_fb keeps the finite-battery factor
    (1/r)(1/r - 1/n_fb) in place of 1/r^2.

    Raises:
        ValueError: If r is not positive.
    """
    if r <= 0:
        msg = f"Excitation ratio must be positive, got {r}"
        raise ValueError(msg)
    prefactor = 2 * (math.pi / 8) ** 2
    if n_fb is None:
        return prefactor / r**2
    return prefactor * (1 / r) * (1 / r - 1 / n_fb)


def energy_transfer_error(qubit_excitations: float, n_qubits: int) -> float:
    """Charging error measured as the missing fraction of qubit energy, 1 - <n_q>/N."""
    return 1.0 - qubit_excitations / n_qubits
