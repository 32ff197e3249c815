"""
Command-line interface for qbattery.

Each subcommand runs one experiment and writes a CSV or JSON data file plus a
run manifest next to it. Simulation quantities are in units of g (time in 1/g);
the heat budget is in SI units.
"""

import json
import logging
import time
from collections.abc import Callable, Iterator
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path
from typing import Any

import click
import numpy as np
import pandas as pd

from qbattery import __version__
from qbattery.config import config
from qbattery.evolution import EvolutionError
from qbattery.fidelity import FidelityError
from qbattery.manifest import RunManifest, json_safe, manifest_path
from qbattery.optimizer import OptimizationError

logger = logging.getLogger(__name__)

CSV_SCHEMA_VERSION = 1
CHARGE_SWEEP_COLUMNS = [
    "schema_version",
    "n_qubits",
    "ratio",
    "n_fb",
    "battery",
    "normalized_charge_time",
    "gate_error",
    "population_error",
    "charge_time",
    "parallel_x_error",
    "oracle_error",
]
LOCAL_SWEEP_COLUMNS = [
    "schema_version",
    "n_qubits",
    "n_fb",
    "steps",
    "worst_fidelity",
    "average_fidelity",
    "dressed_worst_fidelity",
    "dressed_average_fidelity",
    "rotation_angle",
    "evaluations",
]
HEAT_COLUMNS = [
    "schema_version",
    "architecture",
    "profile",
    "passive_cp",
    "passive_mxc",
    "active_cp",
    "active_mxc",
    "total_cp",
    "total_mxc",
    "qubit_limit_cp",
    "qubit_limit_mxc",
    "qubit_limit",
    "limiting_stage",
]
ENERGY_COLUMNS = ["schema_version", "architecture", "depth", "energy_j"]
ARCHITECTURE_CHOICES = ["standard", "shared", "standard-sc", "shared-sc"]

NUMERICAL_ERRORS = (EvolutionError, OptimizationError, FidelityError, np.linalg.LinAlgError)


class NumericalFailure(click.ClickException):
    """A simulation or optimization failed numerically."""

    exit_code = 3


def parse_int_list(text: str) -> list[int]:
    """Parse "1-6", "3,4,5" or "2,4-6" into a sorted list of integers.

    Raises:
        click.BadParameter: If the text is not a list of ranges.
    """
    values: set[int] = set()
    try:
        for part in text.split(","):
            if "-" in part.strip()[1:]:
                low, high = part.split("-", 1)
                values.update(range(int(low), int(high) + 1))
            else:
                values.add(int(part))
    except ValueError as e:
        msg = f"Expected integers or ranges such as '1-6' or '3,4,5', got {text!r}"
        raise click.BadParameter(msg) from e
    if not values:
        msg = f"Empty list: {text!r}"
        raise click.BadParameter(msg)
    return sorted(values)


@contextmanager
def config_overlay(path: Path | None) -> Iterator[None]:
    """Apply a JSON object of configuration fields for the duration of a command."""
    if path is None:
        yield
        return
    try:
        overlay = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        msg = f"Config file {path} is not valid JSON: {e}"
        raise click.UsageError(msg) from e
    unknown = set(overlay) - set(type(config).model_fields)
    if unknown:
        msg = f"Unknown configuration fields in {path}: {sorted(unknown)}"
        raise click.UsageError(msg)
    previous = {key: getattr(config, key) for key in overlay}
    try:
        for key, value in overlay.items():
            setattr(config, key, value)
    except ValueError as e:
        for key, value in previous.items():
            setattr(config, key, value)
        raise click.UsageError(str(e)) from e
    logger.info(f"Configuration overlay from {path}: {sorted(overlay)}")
    try:
        yield
    finally:
        for key, value in previous.items():
            setattr(config, key, value)


@contextmanager
def reported(action: str) -> Iterator[None]:
    """Map failures onto exit codes: validation 2, numerical 3."""
    try:
        yield
    except click.ClickException:
        raise
    except NUMERICAL_ERRORS as e:
        logger.error(f"{action} failed: {e}")
        click.echo(f"\n[ERROR] {action} failed: {e}")
        raise NumericalFailure(str(e)) from e
    except ValueError as e:
        logger.error(f"{action} rejected: {e}")
        click.echo(f"\n[ERROR] {action} rejected: {e}")
        raise click.UsageError(str(e)) from e


def output_options(default_format: str) -> Callable:
    """Attach --out, --seed, --format and --config to a command."""

    def decorate(command: Callable) -> Callable:
        options = [
            click.option(
                "--out",
                "-o",
                type=click.Path(dir_okay=False, path_type=Path),
                default=None,
                help="Output file (default: OUTPUT_DIR/<command>.<format>)",
            ),
            click.option("--seed", type=int, default=None, help="Random seed (default: RANDOM_SEED)"),
            click.option(
                "--format",
                "fmt",
                type=click.Choice(["csv", "json"]),
                default=default_format,
                show_default=True,
                help="Output format",
            ),
            click.option(
                "--config",
                "config_path",
                type=click.Path(exists=True, dir_okay=False, path_type=Path),
                default=None,
                help="JSON file overriding configuration fields",
            ),
        ]
        for option in reversed(options):
            command = option(command)
        return command

    return decorate


def write_output(payload: Any, out: Path | None, fmt: str, name: str, columns: list[str] | None = None) -> Path:
    """Write rows or a record as CSV or JSON."""
    if out is None:
        out = config.ensure_output_dir() / f"{name}.{fmt}"
    out.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        out.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    else:
        rows = payload if isinstance(payload, list) else [payload]
        frame = pd.json_normalize(rows)
        if columns is not None:
            frame = frame.reindex(columns=columns)
        frame.to_csv(out, index=False)
    logger.info(f"Wrote {out}")
    return out


def finish(ctx: click.Context, seed: int | None, outputs: list[Path], started: float) -> None:
    """Write the manifest of the current command next to its first output."""
    manifest = RunManifest(
        subcommand=ctx.command.name,
        parameters=json_safe({**ctx.params, "seed": seed}),
        seed=seed,
        outputs=[str(p) for p in outputs],
        wall_time_s=time.perf_counter() - started,
    )
    path = manifest.write(manifest_path(outputs[0]))
    click.echo(f"[SUCCESS] Output written to {outputs[0]}")
    click.echo(f"[INFO] Manifest: {path}")


def _with_version(rows: list[dict]) -> list[dict]:
    return [{"schema_version": CSV_SCHEMA_VERSION, **row} for row in rows]


@click.group()
@click.version_option(__version__, prog_name="qbattery")
@click.option("--verbose", "-v", is_flag=True, help="Enable verbose logging")
def main(verbose: bool) -> None:
    """qbattery: quantum-battery gate simulation and heat budget CLI."""
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)
        logger.debug("Verbose logging enabled")


@main.command("charge-sweep")
@click.option("--qubits", "qubits", default="1-6", show_default=True, help="Qubit counts, e.g. '1-6'")
@click.option("--ratios", default="9", show_default=True, help="Excitation ratios r = n_fb / N")
@click.option(
    "--battery",
    type=click.Choice(["fock", "coherent", "both"]),
    default="fock",
    show_default=True,
)
@output_options("csv")
@click.pass_context
def charge_sweep(
    ctx: click.Context,
    qubits: str,
    ratios: str,
    battery: str,
    out: Path | None,
    seed: int | None,
    fmt: str,
    config_path: Path | None,
) -> None:
    """Collective charging time and error over qubit counts and ratios."""
    from .basis import SystemConfig
    from .fidelity import charging_error_oracle
    from .gates import collective_charge, parallel_x_gate

    started = time.perf_counter()
    counts = parse_int_list(qubits)
    ratio_values = parse_int_list(ratios)
    batteries = ["fock", "coherent"] if battery == "both" else [battery]
    if min(counts) < 1 or min(ratio_values) < 1:
        msg = "Qubit counts and ratios must be at least 1"
        raise click.UsageError(msg)
    grid = [(n, r, b) for b in batteries for n in counts for r in ratio_values]
    click.echo(f"[INFO] Charging sweep over {len(grid)} points")

    def point(item: tuple[int, int, str]) -> dict:
        n, r, kind = item
        system = SystemConfig(n_qubits=n, n_fb=n * r)
        gate = collective_charge(system, battery=kind)
        return {
            "n_qubits": n,
            "ratio": r,
            "n_fb": n * r,
            "battery": kind,
            "normalized_charge_time": gate.metrics["normalized_time"],
            "gate_error": gate.metrics["energy_error"],
            "population_error": gate.metrics["population_error"],
            "charge_time": gate.metrics["charge_time"],
            "parallel_x_error": parallel_x_gate(system).metrics["gate_error"],
            "oracle_error": charging_error_oracle(r, n * r),
        }

    with config_overlay(config_path), reported("Charging sweep"):
        with ThreadPoolExecutor(max_workers=config.worker_threads) as executor:
            rows = _with_version(list(executor.map(point, grid)))
        path = write_output(rows, out, fmt, "charge_sweep", CHARGE_SWEEP_COLUMNS)
    finish(ctx, seed, [path], started)


@main.command()
@click.option(
    "--system",
    "system_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="JSON system configuration (n_qubits, n_fb, g)",
)
@click.option(
    "--schedule",
    "schedule_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="JSON detuning schedule",
)
@click.option("--initial", default=None, help="Initial bit string (default: all zeros)")
@click.option("--basis", type=click.Choice(["dressed", "full"]), default="dressed", show_default=True)
@output_options("json")
@click.pass_context
def evolve(
    ctx: click.Context,
    system_path: Path,
    schedule_path: Path,
    initial: str | None,
    basis: str,
    out: Path | None,
    seed: int | None,
    fmt: str,
    config_path: Path | None,
) -> None:
    """Propagate a basis state through a detuning schedule."""
    from .basis import SystemConfig
    from .evolution import DetuningSchedule, QuantumState, run_schedule

    started = time.perf_counter()
    with config_overlay(config_path), reported("Evolution"):
        system = SystemConfig.model_validate_json(system_path.read_text(encoding="utf-8"))
        schedule = DetuningSchedule.model_validate_json(schedule_path.read_text(encoding="utf-8"))
        bits = initial or "0" * system.n_qubits
        final = run_schedule(QuantumState.from_bits(system, bits, basis_tag=basis), schedule)
        width = 2**system.n_qubits
        populations = final.populations()
        labels = [
            format(i % width, f"0{system.n_qubits}b")
            + ("" if basis == "dressed" else f"|{i // width}")
            for i in range(populations.size)
        ]
        record = {
            "basis": basis,
            "initial": bits,
            "duration": schedule.total_duration,
            "qubit_excitations": final.qubit_excitations(),
            "photon_number": final.photon_number(),
            "amplitudes_real": final.amplitudes.real.tolist(),
            "amplitudes_imag": final.amplitudes.imag.tolist(),
            "populations": dict(zip(labels, populations.tolist(), strict=True)),
        }
        top = labels[int(np.argmax(populations))]
        click.echo(f"[INFO] Most likely final state |{top}> with p={populations.max():.10f}")
        path = write_output(record, out, fmt, "evolve")
    finish(ctx, seed, [path], started)


@main.command("local-gate-search")
@click.option("--qubits", type=int, required=True, help="Number of qubits N")
@click.option("--nfb", type=int, required=True, help="Full-battery excitation number")
@click.option("--steps", type=int, default=2, show_default=True, help="Detuning steps")
@click.option("--target-qubit", type=int, default=1, show_default=True, help="Active qubit (1-based)")
@click.option("--starts", type=int, default=None, help="Optimizer starts (default: MULTISTART_COUNT)")
@click.option("--max-evals", type=int, default=None, help="Evaluations per start")
@output_options("json")
@click.pass_context
def local_gate_search_command(
    ctx: click.Context,
    qubits: int,
    nfb: int,
    steps: int,
    target_qubit: int,
    starts: int | None,
    max_evals: int | None,
    out: Path | None,
    seed: int | None,
    fmt: str,
    config_path: Path | None,
) -> None:
    """Search a local rotation that acts alike in every spectator configuration."""
    from .basis import SystemConfig
    from .optimizer import dof_bound, local_gate_search

    started = time.perf_counter()
    with config_overlay(config_path), reported("Local gate search"):
        seed = config.random_seed if seed is None else seed
        result = local_gate_search(
            SystemConfig(n_qubits=qubits, n_fb=nfb),
            target_qubit=target_qubit - 1,
            n_steps=steps,
            seed=seed,
            n_starts=starts,
            max_evaluations=max_evals,
        )
        click.echo(
            f"[INFO] worst block fidelity {result.objective:.5f}, "
            f"average {result.average_fidelity:.5f}; dressed evolution worst "
            f"{result.dressed_worst:.5f}, average {result.dressed_average:.5f}, "
            f"universal-gate step bound {dof_bound(qubits)}"
        )
        path = write_output(result.model_dump(mode="json"), out, fmt, "local_gate_search")
    finish(ctx, seed, [path], started)


@main.command("local-gate-sweep")
@click.option("--qubits", "qubits", default="3-5", show_default=True, help="Qubit counts")
@click.option("--max-nfb", type=int, default=7, show_default=True)
@click.option("--steps", type=int, default=2, show_default=True)
@click.option("--starts", type=int, default=None, help="Optimizer starts per point")
@click.option("--max-evals", type=int, default=None, help="Evaluations per start")
@output_options("csv")
@click.pass_context
def local_gate_sweep_command(
    ctx: click.Context,
    qubits: str,
    max_nfb: int,
    steps: int,
    starts: int | None,
    max_evals: int | None,
    out: Path | None,
    seed: int | None,
    fmt: str,
    config_path: Path | None,
) -> None:
    """Local-gate fidelities over a grid of qubit counts and battery sizes."""
    from .optimizer import local_gate_sweep

    started = time.perf_counter()
    with config_overlay(config_path), reported("Local gate sweep"):
        seed = config.random_seed if seed is None else seed
        rows = local_gate_sweep(
            parse_int_list(qubits),
            max_nfb,
            n_steps=steps,
            seed=seed,
            n_starts=starts,
            max_evaluations=max_evals,
        )
        if not rows:
            msg = f"No grid points: --max-nfb {max_nfb} is below every qubit count"
            raise click.UsageError(msg)
        path = write_output(_with_version(rows), out, fmt, "local_gate_sweep", LOCAL_SWEEP_COLUMNS)
    finish(ctx, seed, [path], started)


@main.command("qec-encode")
@click.option("--state", "logical", type=click.Choice(["zero", "plus"]), default="plus", show_default=True)
@click.option(
    "--policy",
    type=click.Choice(["sample", "post-select", "both"]),
    default="sample",
    show_default=True,
    help="How the ancilla measurement branch is chosen",
)
@click.option("--outcome", type=click.IntRange(0, 1), default=0, show_default=True, help="Branch kept by post-select")
@click.option("--end-to-end", is_flag=True, help="Optimize |0>_L as a single stage")
@click.option("--no-optimize", is_flag=True, help="Run the analytic seed schedules only")
@click.option("--starts", type=int, default=None, help="Optimizer starts per stage")
@click.option("--max-evals", type=int, default=None, help="Evaluations per start")
@output_options("json")
@click.pass_context
def qec_encode(
    ctx: click.Context,
    logical: str,
    policy: str,
    outcome: int,
    end_to_end: bool,
    no_optimize: bool,
    starts: int | None,
    max_evals: int | None,
    out: Path | None,
    seed: int | None,
    fmt: str,
    config_path: Path | None,
) -> None:
    """Encode the logical |0> or |+> state of the distance-2 code."""
    from .circuits import CircuitSettings, encode_logical_plus, encode_logical_zero

    started = time.perf_counter()
    with config_overlay(config_path), reported("QEC encoding"):
        seed = config.random_seed if seed is None else seed
        settings = CircuitSettings(
            seed=seed,
            branch_policy=policy.replace("-", "_"),
            selected_outcome=outcome,
            end_to_end=end_to_end,
            optimize=not no_optimize,
            n_starts=starts,
            max_evaluations=max_evals,
        )
        run = encode_logical_zero(settings=settings) if logical == "zero" else encode_logical_plus(settings=settings)
        click.echo(f"[INFO] Logical |{'0' if logical == 'zero' else '+'}> fidelity {run.fidelity:.5f}")
        for label, value in run.stabilizers.items():
            click.echo(f"  {label}: {value:+.5f}")
        path = write_output(run.model_dump(mode="json"), out, fmt, f"qec_{logical}")
    finish(ctx, seed, [path], started)


@main.command("heat-budget")
@click.option(
    "--arch",
    "architectures",
    type=click.Choice(ARCHITECTURE_CHOICES),
    multiple=True,
    help="Architecture (repeatable; default: all four)",
)
@click.option(
    "--profile",
    type=click.Choice(["derived", "quoted"]),
    default="derived",
    show_default=True,
    help="Active loads from pulse powers (derived) or the rounded per-channel loads (quoted)",
)
@click.option("--cooling-cp", type=float, default=None, help="Cold-plate cooling power in uW")
@click.option("--cooling-mxc", type=float, default=None, help="Mixing-chamber cooling power in uW")
@output_options("json")
@click.pass_context
def heat_budget(
    ctx: click.Context,
    architectures: tuple[str, ...],
    profile: str,
    cooling_cp: float | None,
    cooling_mxc: float | None,
    out: Path | None,
    seed: int | None,
    fmt: str,
    config_path: Path | None,
) -> None:
    """Per-qubit heat loads and fridge qubit limits."""
    from .heatbudget import qubit_limit

    started = time.perf_counter()
    with config_overlay(config_path), reported("Heat budget"):
        reports = [
            qubit_limit(name, cooling_cp, cooling_mxc, profile=profile)
            for name in architectures or ARCHITECTURE_CHOICES
        ]
        for report in reports:
            click.echo(
                f"[INFO] {report.architecture}: CP {report.total_cp:.2f} nW, "
                f"MXC {report.total_mxc:.3f} nW, limit {report.qubit_limit}"
            )
        if fmt == "json":
            payload = [r.model_dump(mode="json") for r in reports]
            payload = payload[0] if len(payload) == 1 else payload
            path = write_output(payload, out, fmt, "heat_budget")
        else:
            rows = _with_version([r.model_dump(exclude={"active_channels"}) for r in reports])
            path = write_output(rows, out, fmt, "heat_budget", HEAT_COLUMNS)
    finish(ctx, seed, [path], started)


@main.command("energy-curve")
@click.option("--depth", type=int, default=30, show_default=True, help="Largest circuit depth in cycles")
@click.option(
    "--arch",
    "architectures",
    type=click.Choice(ARCHITECTURE_CHOICES),
    multiple=True,
    help="Architecture (repeatable; default: standard and shared)",
)
@click.option("--cycle-time", type=float, default=None, help="Cycle time in seconds")
@output_options("csv")
@click.pass_context
def energy_curve(
    ctx: click.Context,
    depth: int,
    architectures: tuple[str, ...],
    cycle_time: float | None,
    out: Path | None,
    seed: int | None,
    fmt: str,
    config_path: Path | None,
) -> None:
    """Room-temperature energy per qubit against circuit depth."""
    from .heatbudget import crossover_depth, resolve_architecture, rt_energy_curve

    started = time.perf_counter()
    names = architectures or ("standard", "shared")
    with config_overlay(config_path), reported("Energy curve"):
        rows = []
        for name in names:
            arch = resolve_architecture(name)
            rows.extend(
                {"architecture": arch.name, "depth": d, "energy_j": e}
                for d, e in rt_energy_curve(arch, depth, cycle_time)
            )
        if "shared" in names and "standard" in names:
            crossing = crossover_depth("shared_cavity", "standard", cycle_time)
            click.echo(f"[INFO] Shared cavity overtakes standard after {crossing:.2f} cycles")
        path = write_output(_with_version(rows), out, fmt, "energy_curve", ENERGY_COLUMNS)
    finish(ctx, seed, [path], started)


@main.command()
@click.argument("manifest_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option(
    "--out",
    "-o",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="Write to this file instead of the recorded output",
)
@click.pass_context
def replay(ctx: click.Context, manifest_file: Path, out: Path | None) -> None:
    """Re-run the command recorded in a manifest."""
    try:
        manifest = RunManifest.load(manifest_file)
    except ValueError as e:
        logger.error(f"Cannot read manifest: {e}")
        click.echo(f"\n[ERROR] Cannot read manifest: {e}")
        raise click.UsageError(str(e)) from e
    command = main.get_command(ctx, manifest.subcommand)
    if command is None or command.name == "replay":
        msg = f"Manifest names an unknown subcommand {manifest.subcommand!r}"
        raise click.UsageError(msg)
    if manifest.version != __version__:
        logger.warning(f"Manifest written by qbattery {manifest.version}, running {__version__}")
    params = {}
    for param in command.params:
        if param.name not in manifest.parameters:
            continue
        raw = manifest.parameters[param.name]
        params[param.name] = None if raw is None else param.type_cast_value(ctx, raw)
    if out is not None:
        params["out"] = out
    click.echo(f"[INFO] Replaying {manifest.subcommand} from {manifest_file}")
    ctx.invoke(command, **params)


if __name__ == "__main__":
    main()
