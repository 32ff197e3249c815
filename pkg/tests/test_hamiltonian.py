"""Test Hamiltonian builders."""

import math

import numpy as np
import pytest

from qbattery.basis import BasisError, SystemConfig, dicke_vectors, dressed_full_indices
from qbattery.hamiltonian import (
    DETUNING_SIGN,
    as_detunings,
    build_collective,
    build_dispersive,
    build_dressed,
    build_full,
    dressed_algebra_defect,
    full_excitation_operator,
)


def test_dressed_couplings_two_qubits():
    """N=2, n_fb=2: couplings sqrt(2) out of |00> and 1 into |11>."""
    matrix = build_dressed(SystemConfig(n_qubits=2, n_fb=2), [0.0, 0.0]).matrix

    assert matrix[0, 1] == pytest.approx(math.sqrt(2))
    assert matrix[0, 2] == pytest.approx(math.sqrt(2))
    assert matrix[1, 3] == pytest.approx(1.0)
    assert matrix[2, 3] == pytest.approx(1.0)
    assert matrix[0, 3] == 0
    assert matrix[1, 2] == 0


def test_dressed_diagonal_uses_detuning_sign():
    """Each excited qubit contributes DETUNING_SIGN * delta_i."""
    delta = [1.5, -2.0, 0.25]
    matrix = build_dressed(SystemConfig(n_qubits=3, n_fb=4), delta).matrix

    assert matrix[0, 0] == 0
    assert matrix[0b100, 0b100] == pytest.approx(DETUNING_SIGN * 1.5)
    assert matrix[0b111, 0b111] == pytest.approx(DETUNING_SIGN * sum(delta))
    np.testing.assert_allclose(matrix, matrix.conj().T)


def test_dressed_matches_full_block():
    """The n_fb block of the full model is the dressed Hamiltonian."""
    config = SystemConfig(n_qubits=3, n_fb=5)
    delta = np.random.default_rng(3).uniform(-4, 4, size=3)

    full = build_full(config, delta).matrix
    indices = dressed_full_indices(config)
    block = full[np.ix_(indices, indices)]

    np.testing.assert_allclose(block, build_dressed(config, delta).matrix, atol=1e-12)
    np.testing.assert_allclose(
        np.linalg.eigvalsh(block), np.linalg.eigvalsh(build_dressed(config, delta).matrix)
    )


def test_full_conserves_excitations():
    """The full Hamiltonian commutes with the total excitation number."""
    config = SystemConfig(n_qubits=2, n_fb=3, photon_cutoff=4)
    matrix = build_full(config, [0.3, -0.7]).matrix
    excitations = np.diag(full_excitation_operator(config))

    np.testing.assert_allclose(matrix @ excitations - excitations @ matrix, 0, atol=1e-12)


def test_detunings_validated():
    """Wrong length or non-finite detunings are rejected."""
    with pytest.raises(ValueError, match="Expected 2 detunings"):
        as_detunings([0.0], 2)
    with pytest.raises(ValueError, match="finite"):
        as_detunings([0.0, np.nan], 2)


def test_collective_is_symmetric_restriction():
    """Collective model = dressed model on Dicke states + Delta N / 2."""
    config = SystemConfig(n_qubits=3, n_fb=4)
    delta = 1.7
    dressed = build_dressed(config, [delta] * 3).matrix
    basis = dicke_vectors(3)

    restricted = basis.T @ dressed @ basis + delta * 3 / 2 * np.eye(4)

    np.testing.assert_allclose(build_collective(config, delta).matrix, restricted, atol=1e-12)


def test_collective_two_qubit_couplings():
    """N=2, n_fb=2: couplings sqrt(N-k)(k+1)(n_fb-k) = 2 and sqrt(2)."""
    matrix = build_collective(SystemConfig(n_qubits=2, n_fb=2), 0.0).matrix

    assert matrix[1, 0] == pytest.approx(2.0)
    assert matrix[2, 1] == pytest.approx(math.sqrt(2))


def test_collective_needs_photons():
    """n_fb below N cannot supply every excitation."""
    with pytest.raises(BasisError):
        build_collective(SystemConfig(n_qubits=3, n_fb=2), 0.0)


def test_dressed_algebra_defect():
    """Pauli algebra holds for n_fb >= N and fails for n_fb = N - 1."""
    assert dressed_algebra_defect(3, 3, 0) == 0
    assert dressed_algebra_defect(3, 5, 1) == 0
    assert dressed_algebra_defect(3, 2, 0) > 0


def test_dispersive_zero_detuning():
    """The dispersive model is undefined on resonance."""
    with pytest.raises(ValueError, match="zero detuning"):
        build_dispersive(SystemConfig(n_qubits=2, n_fb=2), 0.0)


def test_dispersive_bases_agree():
    """Dicke and computational dispersive models share their symmetric spectrum."""
    config = SystemConfig(n_qubits=3, n_fb=5)
    dicke = build_dispersive(config, 20.0).matrix
    dressed = build_dispersive(config, 20.0, basis="dressed").matrix
    basis = dicke_vectors(3)

    np.testing.assert_allclose(basis.T @ dressed @ basis, dicke, atol=1e-12)
