"""Test logical-state encoding circuits."""

import json
import math

import numpy as np
import pytest
from pydantic import ValidationError

from qbattery.basis import SystemConfig
from qbattery.circuits import (
    REPORTED_PAULIS,
    STABILIZERS,
    CircuitSettings,
    PauliString,
    coherent_spin_vector,
    encode_logical_plus,
    encode_logical_zero,
    ghz_vector,
    logical_plus_vector,
    pauli_apply,
    stabilizer_expectation,
    with_qubit_set,
)

ANALYTIC = CircuitSettings(optimize=False, seed=11)
TEST_BUDGET = CircuitSettings(seed=0, n_starts=8, max_evaluations=3000)


def test_pauli_string_validation():
    """Labels are upper-cased and restricted to I, X, Y, Z."""
    assert PauliString(label="ixz").label == "IXZ"
    with pytest.raises(ValidationError, match="may only contain"):
        PauliString(label="XA")


def test_pauli_apply_single_qubit():
    """X flips, Z signs and Y does both with a factor i."""
    zero = np.array([1, 0], dtype=complex)
    one = np.array([0, 1], dtype=complex)

    np.testing.assert_allclose(pauli_apply(zero, PauliString(label="X"), 1), one)
    np.testing.assert_allclose(pauli_apply(one, PauliString(label="Z"), 1), -one)
    np.testing.assert_allclose(pauli_apply(zero, PauliString(label="Y"), 1), 1j * one)


def test_code_states_are_stabilized():
    """GHZ and the logical |+> are +1 eigenstates of the code stabilizers."""
    for vector in (ghz_vector(5), logical_plus_vector(5)):
        for pauli in STABILIZERS.values():
            assert stabilizer_expectation(vector, pauli) == pytest.approx(1.0)

    assert stabilizer_expectation(logical_plus_vector(5), REPORTED_PAULIS["IIXX"]) == pytest.approx(1.0)
    assert stabilizer_expectation(ghz_vector(5), REPORTED_PAULIS["IIXX"]) == pytest.approx(0.0)


def test_ghz_vector_layout():
    """GHZ on qubits 1-4 leaves qubit 5 in |0>."""
    vector = ghz_vector(5)

    assert vector[0] == pytest.approx(1 / math.sqrt(2))
    assert vector[0b11110] == pytest.approx(1 / math.sqrt(2))
    assert np.linalg.norm(vector) == pytest.approx(1.0)


def test_coherent_spin_vector_is_product_state():
    """Every code qubit in (|0> - i|1>)/sqrt(2), ancilla in |0>."""
    vector = coherent_spin_vector(5)

    assert np.linalg.norm(vector) == pytest.approx(1.0)
    np.testing.assert_allclose(np.abs(vector[0::2]) ** 2, 1 / 16)
    np.testing.assert_allclose(vector[1::2], 0)


def test_with_qubit_set():
    """Moving the ancilla to |1> shifts every amplitude by its mask."""
    vector = ghz_vector(5)
    moved = with_qubit_set(vector, 5, 4, 1)

    assert moved[0b00001] == pytest.approx(vector[0])
    assert moved[0b11111] == pytest.approx(vector[0b11110])
    np.testing.assert_allclose(with_qubit_set(vector, 5, 4, 0), vector)


def test_settings_validation():
    """The code needs at least five excitations."""
    with pytest.raises(ValidationError):
        CircuitSettings(n_fb=4)
    assert CircuitSettings().to_ns(2 * math.pi * 0.015) == pytest.approx(1.0)
    assert CircuitSettings().target_error == 1e-5
    with pytest.raises(ValidationError):
        CircuitSettings(target_error=0.0)


def test_stage_stops_at_target_error():
    """A loose target ends every optimized stage on its analytic seed."""
    run = encode_logical_zero(settings=CircuitSettings(seed=0, target_error=1.0))

    assert all(g.optimized for g in run.gates)
    assert [g.evaluations for g in run.gates] == [1, 1, 1]


def test_logical_zero_analytic_schedules():
    """Analytic-only encoding reports every stage and the stabilizers."""
    run = encode_logical_zero(settings=ANALYTIC)

    assert run.circuit == "logical_zero"
    assert [g.name for g in run.gates] == ["charge", "entangle", "local"]
    assert set(run.checkpoints) == {"charge", "entangle", "local"}
    assert set(run.stabilizers) == set(STABILIZERS)
    assert 0 <= run.fidelity <= 1
    assert not any(g.optimized for g in run.gates)
    assert run.total_duration_ns == pytest.approx(sum(g.duration_ns for g in run.gates))
    assert run.state is not None


def test_logical_zero_end_to_end_is_one_stage():
    """End-to-end mode optimizes the whole encoding as one schedule."""
    settings = CircuitSettings(optimize=False, end_to_end=True)
    run = encode_logical_zero(settings=settings)

    assert [g.name for g in run.gates] == ["encode_zero"]
    assert len(run.gates[0].schedule.segments) == 4 + 1 + 5


def test_logical_zero_needs_four_qubits():
    """The code qubits must exist."""
    with pytest.raises(ValueError, match="at least 4 qubits"):
        encode_logical_zero(config=SystemConfig(n_qubits=3, n_fb=5), settings=ANALYTIC)


def test_logical_plus_needs_ancilla():
    """Without qubit 5 there is nothing to measure."""
    with pytest.raises(ValueError, match="at least 5 qubits"):
        encode_logical_plus(config=SystemConfig(n_qubits=4, n_fb=5), settings=ANALYTIC)


def test_logical_plus_both_branches():
    """Continuing both branches covers the full outcome distribution."""
    run = encode_logical_plus(branch_policy="both", settings=ANALYTIC)

    probabilities = run.measurements[0].probabilities
    assert sum(probabilities) == pytest.approx(1.0, abs=1e-10)
    assert len(run.branches) == len(run.measurements)
    assert [b.outcome for b in run.branches] == [m.outcome for m in run.measurements]
    assert [g.name for g in run.gates][-2:] == ["rotate_in", "parity_probe"]
    for branch in run.branches:
        assert branch.stages[0].name == f"rotate_out_{branch.outcome}"
        assert set(branch.stabilizers) == set(REPORTED_PAULIS)
    assert run.state is None or len(run.branches) == 1


def test_logical_plus_post_select():
    """Post-selection keeps the requested branch and records no seed."""
    settings = CircuitSettings(optimize=False, branch_policy="post_select", selected_outcome=1)
    run = encode_logical_plus(settings=settings)

    assert [m.outcome for m in run.measurements] == [1]
    assert run.measurements[0].seed is None
    assert run.measurements[0].qubit == 5
    assert run.branches[0].outcome == 1


def test_logical_plus_sampling_is_seeded():
    """The same seed gives the same branch and fidelity."""
    first = encode_logical_plus(settings=ANALYTIC)
    second = encode_logical_plus(settings=ANALYTIC)

    assert first.measurements[0].outcome == second.measurements[0].outcome
    assert first.fidelity == second.fidelity
    assert first.measurements[0].seed == 11


def test_circuit_run_serializes_without_state():
    """Runs dump to JSON without the raw state vector."""
    run = encode_logical_zero(settings=ANALYTIC)
    payload = json.loads(json.dumps(run.model_dump(mode="json")))

    assert "state" not in payload
    assert payload["gates"][0]["schedule"]["segments"]


@pytest.mark.slow
def test_logical_zero_optimized():
    """Optimized staging reaches GHZ on the code qubits."""
    run = encode_logical_zero(settings=TEST_BUDGET)

    assert run.fidelity >= 0.995
    assert run.stabilizers["XXXX"] >= 0.99


@pytest.mark.slow
def test_logical_plus_optimized_both_branches():
    """Both measurement branches end close to |+>_L and read opposite parities."""
    run = encode_logical_plus(branch_policy="both", settings=TEST_BUDGET)

    assert run.fidelity >= 0.975
    for label in STABILIZERS:
        assert run.stabilizers[label] >= 0.95
    parities = {b.outcome: b.probed_parity for b in run.branches}
    assert parities[0] > 0 > parities[1]
