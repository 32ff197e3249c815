"""
State-space enumeration for the battery-qubit system.

Three spaces are used: the dressed 2^N subspace at a fixed excitation number
n_fb, the truncated qubits-times-Fock space, and the symmetric (Dicke)
subspace. Qubit 1 is the most significant bit everywhere and the full space
is ordered photons-major, so index = photons * 2^N + int(bits).
"""

import logging
import math
from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field
from scipy.stats import poisson

logger = logging.getLogger(__name__)


class BasisError(ValueError):
    """Raised when a basis is requested for a configuration that cannot hold it."""


class SystemConfig(BaseModel):
    """Qubit count, coupling and conserved excitation number of one system."""

    n_qubits: int = Field(ge=1)
    g: float = Field(default=1.0, gt=0)
    n_fb: int = Field(ge=0)
    photon_cutoff: int | None = Field(default=None, ge=0)

    model_config = ConfigDict(frozen=True)

    @property
    def cutoff(self) -> int:
        """Photon cutoff of the full space (defaults to n_fb)."""
        return self.n_fb if self.photon_cutoff is None else self.photon_cutoff

    @property
    def dressed_dim(self) -> int:
        return 2**self.n_qubits

    @property
    def full_dim(self) -> int:
        return (self.cutoff + 1) * 2**self.n_qubits

    @property
    def dicke_dim(self) -> int:
        return self.n_qubits + 1

    def require_dressed(self) -> None:
        """Reject configurations where the dressed operators lose Pauli algebra.

        Raises:
            BasisError: If n_fb < n_qubits.
        """
        if self.n_fb < self.n_qubits:
            msg = (
                f"Dressed subspace needs n_fb >= n_qubits, got n_fb={self.n_fb} "
                f"for {self.n_qubits} qubits"
            )
            raise BasisError(msg)

    def require_full(self) -> None:
        """Reject full-space requests whose cutoff cannot hold n_fb photons."""
        if self.cutoff < self.n_fb:
            msg = (
                f"Photon cutoff {self.cutoff} is below n_fb={self.n_fb}; "
                "raise photon_cutoff"
            )
            raise BasisError(msg)

    def with_excitations(self, n_fb: int) -> "SystemConfig":
        """Return a copy with a different conserved excitation number."""
        return self.model_copy(update={"n_fb": n_fb})


class DressedBasisState(BaseModel):
    """Computational basis state of the dressed subspace."""

    qubit_bits: tuple[int, ...]
    implied_photons: int = Field(ge=0)

    model_config = ConfigDict(frozen=True)

    @computed_field
    @property
    def index(self) -> int:
        return bits_to_index(self.qubit_bits)

    @property
    def label(self) -> str:
        return "".join(str(b) for b in self.qubit_bits)


class FullBasisState(BaseModel):
    """Basis state of the truncated qubits-times-Fock space."""

    qubit_bits: tuple[int, ...]
    photons: int = Field(ge=0)

    model_config = ConfigDict(frozen=True)

    @computed_field
    @property
    def index(self) -> int:
        return full_index(bits_to_index(self.qubit_bits), self.photons, len(self.qubit_bits))


class DickeBasisState(BaseModel):
    """Symmetric state |j, m_j> with half-integers stored doubled."""

    two_j: int = Field(ge=0)
    two_m: int

    model_config = ConfigDict(frozen=True)

    @property
    def j(self) -> float:
        return self.two_j / 2

    @property
    def m(self) -> float:
        return self.two_m / 2

    @property
    def excitations(self) -> int:
        """Number of excited qubits, which is also the Dicke index."""
        return (self.two_j - self.two_m) // 2


def bits_to_index(bits: Sequence[int] | str) -> int:
    """Convert a big-endian bit sequence (or string such as "0101") to an index."""
    text = bits if isinstance(bits, str) else "".join(str(int(b)) for b in bits)
    if not text or set(text) - {"0", "1"}:
        msg = f"Invalid bit string: {bits!r}"
        raise ValueError(msg)
    return int(text, 2)


def qubit_mask(n_qubits: int, qubit: int) -> int:
    """Bit mask of a 0-based qubit index (qubit 0 is the most significant bit)."""
    if not 0 <= qubit < n_qubits:
        msg = f"Qubit index {qubit} out of range for {n_qubits} qubits"
        raise ValueError(msg)
    return 1 << (n_qubits - 1 - qubit)


def bit_table(n_qubits: int) -> np.ndarray:
    """Return a (2^N, N) integer table whose column q holds the bit of qubit q."""
    indices = np.arange(2**n_qubits)[:, None]
    shifts = n_qubits - 1 - np.arange(n_qubits)
    return (indices >> shifts) & 1


def excitation_counts(n_qubits: int) -> np.ndarray:
    """Popcount of every computational index."""
    return bit_table(n_qubits).sum(axis=1)


def full_index(bits_index: int, photons: int, n_qubits: int) -> int:
    return photons * 2**n_qubits + bits_index


def enumerate_dressed(config: SystemConfig) -> list[DressedBasisState]:
    """Enumerate the dressed basis in index order.

    Args:
        config: System configuration with n_fb >= n_qubits.

    Returns:
        2^N states, each carrying its implied photon number n_fb - popcount.

    Raises:
        BasisError: If n_fb < n_qubits.
    """
    config.require_dressed()
    table = bit_table(config.n_qubits)
    return [
        DressedBasisState(
            qubit_bits=tuple(int(b) for b in row),
            implied_photons=config.n_fb - int(row.sum()),
        )
        for row in table
    ]


def enumerate_full(config: SystemConfig) -> list[FullBasisState]:
    """Enumerate the truncated full basis, photons-major."""
    table = bit_table(config.n_qubits)
    return [
        FullBasisState(qubit_bits=tuple(int(b) for b in row), photons=photons)
        for photons in range(config.cutoff + 1)
        for row in table
    ]


def enumerate_dicke(n_qubits: int) -> list[DickeBasisState]:
    """Enumerate |N/2, m> from m = +N/2 down, so position equals excitation count."""
    return [
        DickeBasisState(two_j=n_qubits, two_m=n_qubits - 2 * k)
        for k in range(n_qubits + 1)
    ]


def dressed_full_indices(config: SystemConfig) -> np.ndarray:
    """Full-space index of every dressed basis state."""
    config.require_dressed()
    config.require_full()
    n = config.n_qubits
    indices = np.arange(2**n)
    photons = config.n_fb - excitation_counts(n)
    return photons * 2**n + indices


def embed_dressed_in_full(state_vector: np.ndarray, config: SystemConfig) -> np.ndarray:
    """Place dressed amplitudes into the n_fb block of the full space.

    Raises:
        BasisError: If the photon cutoff is below n_fb or n_fb < n_qubits.
    """
    vector = np.asarray(state_vector, dtype=complex)
    if vector.shape != (config.dressed_dim,):
        msg = f"Expected {config.dressed_dim} dressed amplitudes, got {vector.shape}"
        raise ValueError(msg)
    target = dressed_full_indices(config)
    full = np.zeros(config.full_dim, dtype=complex)
    full[target] = vector
    return full


def restrict_full_to_dressed(full_vector: np.ndarray, config: SystemConfig) -> np.ndarray:
    """Read the n_fb block of a full-space vector in dressed order."""
    return np.asarray(full_vector, dtype=complex)[dressed_full_indices(config)]


def dicke_vectors(n_qubits: int) -> np.ndarray:
    """Columns are the normalized symmetric states with k excitations, k = 0..N."""
    counts = excitation_counts(n_qubits)
    columns = np.zeros((2**n_qubits, n_qubits + 1))
    for k in range(n_qubits + 1):
        columns[counts == k, k] = 1.0 / math.sqrt(math.comb(n_qubits, k))
    return columns


def symmetric_projection(
    dressed_vector: np.ndarray, config: SystemConfig
) -> tuple[np.ndarray, float]:
    """Project a dressed state onto the symmetric subspace.

    Returns:
        Tuple of Dicke amplitudes (ordered m_j = +N/2 downwards) and the norm
        of the component outside the symmetric subspace.
    """
    vector = np.asarray(dressed_vector, dtype=complex)
    basis = dicke_vectors(config.n_qubits)
    amplitudes = basis.T @ vector
    residual = float(np.linalg.norm(vector - basis @ amplitudes))
    return amplitudes, residual


def coherent_cutoff(mean_photons: float) -> int:
    """Fock cutoff keeping the truncated Poisson tail below 1e-10."""
    if mean_photons < 0:
        msg = f"Mean photon number must be non-negative, got {mean_photons}"
        raise ValueError(msg)
    return math.ceil(mean_photons + 6 * math.sqrt(mean_photons) + 10)


def coherent_amplitudes(mean_photons: float, cutoff: int | None = None) -> np.ndarray:
    """Fock amplitudes sqrt(Poisson(k; n)) of a coherent battery, k = 0..cutoff."""
    cutoff = coherent_cutoff(mean_photons) if cutoff is None else cutoff
    weights = poisson.pmf(np.arange(cutoff + 1), mean_photons)
    tail = 1.0 - weights.sum()
    logger.debug(f"Coherent battery n={mean_photons}, cutoff={cutoff}, tail={tail:.2e}")
    amplitudes = np.sqrt(weights)
    return amplitudes / np.linalg.norm(amplitudes)
