"""Test CLI module."""

import json

import pandas as pd
import pytest
from click.testing import CliRunner

from qbattery import __version__
from qbattery.cli import CHARGE_SWEEP_COLUMNS, main, parse_int_list
from qbattery.fidelity import charging_error_oracle


@pytest.fixture
def runner():
    return CliRunner()


def test_cli_help(runner):
    """Test CLI help command."""
    result = runner.invoke(main, ["--help"])

    assert result.exit_code == 0
    assert "quantum-battery gate simulation" in result.output
    for command in ("charge-sweep", "evolve", "qec-encode", "heat-budget", "replay"):
        assert command in result.output


def test_cli_version(runner):
    """--version prints the package version."""
    result = runner.invoke(main, ["--version"])

    assert result.exit_code == 0
    assert __version__ in result.output


def test_parse_int_list():
    """Ranges and comma lists, sorted and de-duplicated."""
    assert parse_int_list("1-6") == [1, 2, 3, 4, 5, 6]
    assert parse_int_list("5,3,4,3") == [3, 4, 5]
    assert parse_int_list("2,4-5") == [2, 4, 5]


def test_heat_budget_single_architecture(runner, tmp_path):
    """One architecture gives one JSON record and a manifest."""
    out = tmp_path / "heat.json"

    result = runner.invoke(main, ["heat-budget", "--arch", "shared", "--out", str(out)])

    assert result.exit_code == 0, result.output
    assert "[SUCCESS]" in result.output
    report = json.loads(out.read_text())
    assert report["architecture"] == "shared_cavity"
    assert report["qubit_limit"] == 808
    assert report["profile"] == "derived"
    manifest = json.loads((tmp_path / "heat.json.manifest.json").read_text())
    assert manifest["subcommand"] == "heat-budget"
    assert manifest["parameters"]["architectures"] == ["shared"]
    assert manifest["outputs"] == [str(out)]


def test_heat_budget_csv(runner, tmp_path):
    """Every architecture becomes one CSV row."""
    out = tmp_path / "heat.csv"

    result = runner.invoke(main, ["heat-budget", "--format", "csv", "--out", str(out)])

    assert result.exit_code == 0, result.output
    frame = pd.read_csv(out)
    assert list(frame["qubit_limit"]) == [657, 808, 1426, 5755]
    assert (frame["schema_version"] == 1).all()


def test_energy_curve_reports_crossover(runner, tmp_path):
    """Both default architectures over depths 0..12."""
    out = tmp_path / "energy.csv"

    result = runner.invoke(main, ["energy-curve", "--depth", "12", "--out", str(out)])

    assert result.exit_code == 0, result.output
    assert "after 10.00 cycles" in result.output
    frame = pd.read_csv(out)
    assert len(frame) == 26
    assert set(frame["architecture"]) == {"standard", "shared_cavity"}


def test_charge_sweep_small_grid(runner, tmp_path):
    """A two-point sweep writes the versioned columns."""
    out = tmp_path / "sweep.csv"

    result = runner.invoke(
        main, ["charge-sweep", "--qubits", "1-2", "--ratios", "3", "--out", str(out)]
    )

    assert result.exit_code == 0, result.output
    frame = pd.read_csv(out)
    assert list(frame.columns) == CHARGE_SWEEP_COLUMNS
    assert list(frame["n_fb"]) == [3, 6]
    assert (frame["gate_error"] >= -1e-12).all()
    assert (frame["gate_error"] <= frame["population_error"] + 1e-12).all()


def test_charge_sweep_error_columns(runner, tmp_path):
    """Energy and population errors of the charge, and parallel X against its estimate."""
    out = tmp_path / "errors.csv"

    result = runner.invoke(
        main, ["charge-sweep", "--qubits", "2", "--ratios", "100", "--out", str(out)]
    )

    assert result.exit_code == 0, result.output
    row = pd.read_csv(out).iloc[0]
    assert row["oracle_error"] == pytest.approx(charging_error_oracle(100, 200))
    assert 0.6 < row["parallel_x_error"] / row["oracle_error"] < 0.8
    assert 0 <= row["gate_error"] <= row["population_error"]


def test_charge_sweep_rejects_bad_qubits(runner, tmp_path):
    """Malformed ranges are usage errors."""
    result = runner.invoke(
        main, ["charge-sweep", "--qubits", "a-b", "--out", str(tmp_path / "x.csv")]
    )

    assert result.exit_code == 2


def test_unknown_config_field(runner, tmp_path):
    """Config overlays may only set known fields."""
    overlay = tmp_path / "config.json"
    overlay.write_text(json.dumps({"ndwi_threshold": 0.3}))

    result = runner.invoke(
        main,
        ["heat-budget", "--config", str(overlay), "--out", str(tmp_path / "heat.json")],
    )

    assert result.exit_code == 2
    assert "Unknown configuration fields" in result.output


def test_evolve_resonant_x(runner, tmp_path):
    """A single resonant qubit is fully charged by the closed-form X time."""
    system = tmp_path / "system.json"
    schedule = tmp_path / "schedule.json"
    out = tmp_path / "final.json"
    system.write_text(json.dumps({"n_qubits": 1, "n_fb": 4}))
    schedule.write_text(json.dumps({"segments": [{"duration": 0.7853981633974483, "delta": [0.0]}]}))

    result = runner.invoke(
        main,
        ["evolve", "--system", str(system), "--schedule", str(schedule), "--out", str(out)],
    )

    assert result.exit_code == 0, result.output
    record = json.loads(out.read_text())
    assert record["populations"]["1"] == pytest.approx(1.0, abs=1e-10)
    assert record["qubit_excitations"] == pytest.approx(1.0, abs=1e-10)


def test_evolve_rejects_wrong_initial_state(runner, tmp_path):
    """A bit string of the wrong width is a usage error."""
    system = tmp_path / "system.json"
    schedule = tmp_path / "schedule.json"
    system.write_text(json.dumps({"n_qubits": 2, "n_fb": 2}))
    schedule.write_text(json.dumps({"segments": [{"duration": 1.0, "delta": [0.0, 0.0]}]}))

    result = runner.invoke(
        main,
        [
            "evolve",
            "--system",
            str(system),
            "--schedule",
            str(schedule),
            "--initial",
            "000",
            "--out",
            str(tmp_path / "final.json"),
        ],
    )

    assert result.exit_code == 2
    assert "[ERROR]" in result.output


def test_qec_encode_analytic(runner, tmp_path):
    """Analytic schedules only, written as JSON."""
    out = tmp_path / "zero.json"

    result = runner.invoke(
        main, ["qec-encode", "--state", "zero", "--no-optimize", "--seed", "3", "--out", str(out)]
    )

    assert result.exit_code == 0, result.output
    record = json.loads(out.read_text())
    assert record["circuit"] == "logical_zero"
    assert record["seed"] == 3
    assert set(record["stabilizers"]) == {"XXXX", "ZZII", "IIZZ"}


def test_local_gate_search_small(runner, tmp_path):
    """Two qubits, one step and a tiny budget still report a rotation."""
    out = tmp_path / "local.json"

    result = runner.invoke(
        main,
        [
            "local-gate-search",
            "--qubits",
            "2",
            "--nfb",
            "3",
            "--steps",
            "1",
            "--starts",
            "2",
            "--max-evals",
            "50",
            "--out",
            str(out),
        ],
    )

    assert result.exit_code == 0, result.output
    record = json.loads(out.read_text())
    assert len(record["block_fidelities"]) == 2
    assert set(record["dressed_fidelities"]) == {"0", "1"}
    assert "dressed evolution worst" in result.output
    assert 0 <= record["objective"] <= 1 + 1e-12


def test_replay_reproduces_output(runner, tmp_path):
    """Replaying a manifest writes the same data."""
    first = tmp_path / "first.json"
    second = tmp_path / "second.json"
    runner.invoke(main, ["heat-budget", "--arch", "standard-sc", "--out", str(first)])

    result = runner.invoke(
        main, ["replay", str(tmp_path / "first.json.manifest.json"), "--out", str(second)]
    )

    assert result.exit_code == 0, result.output
    assert json.loads(second.read_text()) == json.loads(first.read_text())


def test_replay_rejects_invalid_manifest(runner, tmp_path):
    """A manifest that is not JSON is a usage error."""
    broken = tmp_path / "broken.manifest.json"
    broken.write_text("not json")

    result = runner.invoke(main, ["replay", str(broken)])

    assert result.exit_code == 2
