"""
Hamiltonian builders for the battery-qubit system.

Four representations share one rotating frame in which the battery frequency
is zero: the full Tavis-Cummings model over qubits and Fock states, the dressed
2^N subspace, the collective symmetric model and the dispersive approximation.
All builders are pure functions of (config, detunings) and return dense
matrices built symmetrically.
"""

import logging
from collections.abc import Sequence
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict

from qbattery.basis import (
    BasisError,
    SystemConfig,
    bit_table,
    excitation_counts,
    qubit_mask,
)

logger = logging.getLogger(__name__)

# Qubit energies enter as DETUNING_SIGN * delta_i * n_i in every builder.
DETUNING_SIGN = -1.0

BasisTag = Literal["dressed", "full", "dicke"]


class HermitianOperator(BaseModel):
    """Dense Hermitian matrix tagged with the basis it acts on."""

    matrix: np.ndarray
    basis_tag: BasisTag

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def as_detunings(delta: Sequence[float] | np.ndarray, n_qubits: int) -> np.ndarray:
    """Validate a per-qubit detuning vector.

    Raises:
        ValueError: If the length is wrong or any entry is not finite.
    """
    vector = np.asarray(delta, dtype=float).reshape(-1)
    if vector.shape != (n_qubits,):
        msg = f"Expected {n_qubits} detunings, got {vector.size}"
        raise ValueError(msg)
    if not np.all(np.isfinite(vector)):
        msg = f"Detunings must be finite, got {vector.tolist()}"
        raise ValueError(msg)
    return vector


def build_full(config: SystemConfig, delta: Sequence[float] | np.ndarray) -> HermitianOperator:
    """Build the truncated Tavis-Cummings Hamiltonian.

    Args:
        config: System configuration; config.cutoff bounds the photon number.
        delta: Detunings Delta_i = omega_i - omega_b.

    Returns:
        HermitianOperator on the photons-major full basis.
    """
    n = config.n_qubits
    delta = as_detunings(delta, n)
    width = 2**n
    dim = config.full_dim
    photons = np.repeat(np.arange(config.cutoff + 1), width)
    qubit_index = np.tile(np.arange(width), config.cutoff + 1)
    bits = bit_table(n)

    matrix = np.zeros((dim, dim), dtype=complex)
    matrix[np.arange(dim), np.arange(dim)] = DETUNING_SIGN * (bits @ delta)[qubit_index]
    for qubit in range(n):
        mask = qubit_mask(n, qubit)
        # sigma_plus a: raise qubit, remove one photon
        source = np.flatnonzero(((qubit_index & mask) == 0) & (photons >= 1))
        target = source - width + mask
        values = config.g * np.sqrt(photons[source])
        matrix[target, source] = values
        matrix[source, target] = values
    return HermitianOperator(matrix=matrix, basis_tag="full")


def build_dressed(
    config: SystemConfig, delta: Sequence[float] | np.ndarray
) -> HermitianOperator:
    """Build the Hamiltonian on the dressed 2^N subspace.

    Matrix elements between |s> and |s + e_i> are g * sqrt(n_fb - popcount(s)),
    the amplitude of removing one photon from the implied battery state.

    Raises:
        BasisError: If n_fb < n_qubits.
    """
    config.require_dressed()
    n = config.n_qubits
    delta = as_detunings(delta, n)
    dim = 2**n
    bits = bit_table(n)
    counts = bits.sum(axis=1)
    indices = np.arange(dim)

    matrix = np.zeros((dim, dim), dtype=complex)
    matrix[indices, indices] = DETUNING_SIGN * (bits @ delta)
    for qubit in range(n):
        mask = qubit_mask(n, qubit)
        source = indices[(indices & mask) == 0]
        target = source + mask
        values = config.g * np.sqrt(config.n_fb - counts[source])
        matrix[target, source] = values
        matrix[source, target] = values
    return HermitianOperator(matrix=matrix, basis_tag="dressed")


def full_excitation_operator(config: SystemConfig) -> np.ndarray:
    """Diagonal of a^dagger a + sum_i n_i on the full basis."""
    width = 2**config.n_qubits
    photons = np.repeat(np.arange(config.cutoff + 1), width)
    return photons + np.tile(excitation_counts(config.n_qubits), config.cutoff + 1)


def dressed_ladder(n_qubits: int, n_fb: int, qubit: int) -> tuple[np.ndarray, np.ndarray]:
    """Matrix of the dressed raising operator over states with popcount <= n_fb.

    The dressed raising operator flips the qubit up and removes a photon, so it
    annihilates states whose implied battery is empty.

    Returns:
        Tuple of the retained computational indices and the raising matrix
        expressed over them.
    """
    counts = excitation_counts(n_qubits)
    states = np.flatnonzero(counts <= n_fb)
    position = {int(s): k for k, s in enumerate(states)}
    mask = qubit_mask(n_qubits, qubit)
    raising = np.zeros((states.size, states.size))
    for s in states:
        photons = n_fb - counts[s]
        if s & mask == 0 and photons >= 1:
            raising[position[int(s + mask)], position[int(s)]] = 1.0
    return states, raising


def dressed_algebra_defect(n_qubits: int, n_fb: int, qubit: int) -> float:
    """Largest deviation of [sigma_d+, sigma_d-] from |1><1| - |0><0| on one qubit.

    Zero whenever n_fb >= n_qubits; the empty-battery state |0_i, 0_ph> appears
    once n_fb < n_qubits and breaks the algebra.
    """
    states, raising = dressed_ladder(n_qubits, n_fb, qubit)
    commutator = raising @ raising.T - raising.T @ raising
    mask = qubit_mask(n_qubits, qubit)
    expected = np.diag(np.where(states & mask, 1.0, -1.0))
    return float(np.max(np.abs(commutator - expected)))


def dicke_ladder(n_qubits: int) -> tuple[np.ndarray, np.ndarray]:
    """Return J_z and J^- in the Dicke basis ordered by excitation count.

    J^- lowers m_j, which adds one qubit excitation: <k+1|J^-|k> =
    sqrt((N - k)(k + 1)).
    """
    k = np.arange(n_qubits + 1)
    jz = np.diag(n_qubits / 2 - k)
    j_minus = np.zeros((n_qubits + 1, n_qubits + 1))
    steps = np.arange(n_qubits)
    j_minus[steps + 1, steps] = np.sqrt((n_qubits - steps) * (steps + 1))
    return jz, j_minus


def qubit_collective_ladder(n_qubits: int) -> tuple[np.ndarray, np.ndarray]:
    """J_z and the excitation-adding collective operator on the 2^N qubit basis."""
    dim = 2**n_qubits
    indices = np.arange(dim)
    jz = np.diag(n_qubits / 2 - excitation_counts(n_qubits))
    raising = np.zeros((dim, dim))
    for qubit in range(n_qubits):
        mask = qubit_mask(n_qubits, qubit)
        source = indices[(indices & mask) == 0]
        raising[source + mask, source] += 1.0
    return jz, raising


def build_collective(config: SystemConfig, uniform_delta: float) -> HermitianOperator:
    """Build H = Delta J_z + g (J^- A + A J^+) on the symmetric subspace.

    A = diag(sqrt(n_fb - N/2 + m_j)). This equals the dressed Hamiltonian
    restricted to symmetric states plus the constant Delta * N / 2, because the
    dressed qubit term is -Delta n_q = Delta J_z - Delta N / 2.

    Raises:
        BasisError: If any battery amplitude would need a negative photon count.
    """
    n = config.n_qubits
    k = np.arange(n + 1)
    photons = config.n_fb - k
    if np.any(photons < 0):
        msg = f"n_fb={config.n_fb} cannot supply {n} excitations for the collective model"
        raise BasisError(msg)
    jz, j_minus = dicke_ladder(n)
    battery = np.diag(np.sqrt(photons.astype(float)))
    coupling = j_minus @ battery
    matrix = float(uniform_delta) * jz + config.g * (coupling + coupling.T)
    return HermitianOperator(matrix=matrix.astype(complex), basis_tag="dicke")


def build_dispersive(
    config: SystemConfig,
    uniform_delta: float,
    n_qubits_involved: int | None = None,
    basis: Literal["dicke", "dressed"] = "dicke",
) -> HermitianOperator:
    """Build the dispersive Hamiltonian of a group of equally detuned qubits.

    H = (Delta + 2c(n_fb - N/2)) J_z + 2c J_z^2 - c J^- J^+, with c = g^2 / Delta
    and J^- adding an excitation. N is the number of qubits in the group, and
    config.n_fb is the excitation number the group sees.

    Args:
        config: System configuration.
        uniform_delta: Shared detuning of the group.
        n_qubits_involved: Group size (defaults to config.n_qubits).
        basis: "dicke" for the symmetric subspace, "dressed" for the 2^N
            computational basis of the group.

    Raises:
        ValueError: If the detuning is zero.
    """
    if uniform_delta == 0:
        msg = "Dispersive Hamiltonian is undefined at zero detuning"
        raise ValueError(msg)
    n = config.n_qubits if n_qubits_involved is None else n_qubits_involved
    c = config.g**2 / uniform_delta
    if basis == "dicke":
        jz, j_minus = dicke_ladder(n)
    else:
        jz, j_minus = qubit_collective_ladder(n)
    j_plus = j_minus.T
    matrix = (
        (uniform_delta + 2 * c * (config.n_fb - n / 2)) * jz
        + 2 * c * jz @ jz
        - c * j_minus @ j_plus
    )
    return HermitianOperator(matrix=matrix.astype(complex), basis_tag=basis)
