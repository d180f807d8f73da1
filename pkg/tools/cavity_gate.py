#!/usr/bin/env python3
"""
cavity-gate: effective couplings, gate simulation and detuning design for the
coupled-cavity controlled-phase gate

Usage:
    # Three-qubit reference scenario (design, couplings, conditions, effective gate, budget)
    uv run python tools/cavity_gate.py run --scenario paper-n3 --out out/n3

    # Add the full-dynamics gate (slow: ~5e6 RK4 steps)
    uv run python tools/cavity_gate.py run --scenario paper-n3 \\
        --tasks design,couplings,gate-full --nmax 1 --dt 5e-4 --dump-trajectory

    # Own configuration
    uv run python tools/cavity_gate.py run --scenario custom --config configs/paper_n4.yaml

    # Sweep the third pair across 19..23
    uv run python tools/cavity_gate.py sweep --config configs/paper_n3.yaml \\
        --path "pair[3]" --values 19,19.5,20,21,21.5,22,22.5,23 --out sweep.csv

    # Check a config file
    uv run python tools/cavity_gate.py validate configs/paper_n3.yaml

Exit status: 0 success, 1 acceptance check failed, 2 error.
"""

import sys
from pathlib import Path
from typing import List, NoReturn, Optional

import typer
from loguru import logger
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

# Add project root to path
PROJECT_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from models.cavity_gate.config_model import SystemConfig, read_config_sections, validate_config
from models.cavity_gate.dynamics_engine import PropagationSettings
from models.cavity_gate.exceptions import CavityGateError
from models.cavity_gate.presets import G_HZ_DEFAULT
from models.cavity_gate.runner import (
    EXIT_ERROR,
    SWEEP_TASKS,
    TASK_ORDER,
    Scenario,
    run_scenario,
    sweep as run_sweep,
    write_sweep,
)

app = typer.Typer(
    name="cavity-gate",
    help="Coupled-cavity controlled-phase gate: couplings, dynamics, design",
    add_completion=False,
)

console = Console()


def configure_logging(verbose: int) -> None:
    logger.remove()
    level = {0: "WARNING", 1: "INFO"}.get(verbose, "DEBUG")
    logger.add(sys.stderr, level=level)


def split_list(text: Optional[str]) -> List[str]:
    if not text:
        return []
    return [item.strip() for item in text.split(",") if item.strip()]


def fail(message: str) -> NoReturn:
    console.print(f"[red]✗ {message}[/red]")
    raise typer.Exit(EXIT_ERROR)


@app.command()
def run(
    scenario: str = typer.Option("paper-n3", "--scenario", "-s",
                                 help="paper-n3, paper-n4, paper-n200 or custom"),
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="YAML configuration"),
    tasks: Optional[str] = typer.Option(
        None, "--tasks", "-t",
        help=f"Comma list from: {', '.join(TASK_ORDER)} (default depends on scenario)"),
    nmax: Optional[int] = typer.Option(None, "--nmax", help="Photon cutoff per mode for gate-full"),
    dt: float = typer.Option(PropagationSettings().dt, "--dt", help="RK4 step (units 1/g)"),
    out: Path = typer.Option(Path("out"), "--out", "-o", help="Output directory"),
    dump_trajectory: bool = typer.Option(
        False, "--dump-trajectory", help="gate-full: write trajectory_<state>.csv per basis state"),
    g_hz: float = typer.Option(G_HZ_DEFAULT, "--g-hz", help="g as an angular frequency (rad/s)"),
    verbose: int = typer.Option(0, "--verbose", "-v", count=True, help="-v info, -vv debug"),
):
    """
    Run a scenario and write its reports.

    \b
    Files and columns:
      design_report.csv  j, solved_delta, mismatch_residual, min_separation_achieved, rejected_roots
      couplings.csv      j, zeta_prime, xi_prime, lambda_prime
      conditions.csv     name, ratio, threshold, pass
      gate_report.txt    key = value blocks
      trajectory_<state>.csv  t, re_overlap, im_overlap, norm, excited_pop, photon_num
                              (gate-full with --dump-trajectory)
    """
    configure_logging(verbose)
    try:
        spec = Scenario(
            name=scenario,
            config_path=config,
            tasks=tuple(split_list(tasks)),
            g_hz=g_hz,
            n_max=nmax,
            settings=PropagationSettings(dt=dt),
            dump_trajectories=dump_trajectory,
        )
        with console.status(f"[bold blue]Running {scenario}..."):
            outcome = run_scenario(spec, out)
    except (CavityGateError, ValidationError) as e:
        fail(str(e))
    except OSError as e:
        fail(f"run failed: {e}")

    for path in outcome.files:
        console.print(f"  [cyan]→[/cyan] {path}")

    if outcome.checks:
        table = Table(title=f"[bold]{scenario}[/bold] acceptance", show_header=True)
        table.add_column("Check", style="cyan")
        table.add_column("Value", justify="right")
        table.add_column("Expected", justify="right")
        table.add_column("Tolerance", justify="right")
        table.add_column("Result", justify="center")
        for check in outcome.checks:
            table.add_row(
                check.name,
                f"{check.value:.6g}",
                f"{check.expected:.6g}",
                f"{check.tolerance:.2g}",
                "[green]pass[/green]" if check.passed else "[red]FAIL[/red]",
            )
        console.print(table)

    if outcome.exit_code:
        console.print("[red]✗ Acceptance checks failed[/red]")
    else:
        console.print("[green]✓ Done[/green]")
    raise typer.Exit(outcome.exit_code)


@app.command()
def sweep(
    config: Path = typer.Option(..., "--config", "-c", help="Base YAML configuration"),
    path: str = typer.Option(..., "--path", "-p",
                             help="hop | gamma | kappa | field[i] | pair[j]"),
    values: str = typer.Option("", "--values", help="Comma list of values (empty: header only)"),
    tasks: str = typer.Option("couplings", "--tasks", "-t",
                              help=f"Comma list from: {', '.join(SWEEP_TASKS)}"),
    out: Path = typer.Option(Path("sweep.csv"), "--out", "-o", help="CSV file to write"),
    g_hz: float = typer.Option(G_HZ_DEFAULT, "--g-hz", help="g as an angular frequency (rad/s)"),
    verbose: int = typer.Option(0, "--verbose", "-v", count=True),
):
    """
    Sweep one parameter and write one CSV row per value.

    \b
    Columns: the swept path, then per task
      couplings       omega_k (k=1..N), lambda_prime_j, zeta_prime_j, xi_prime_j (j=2..N)
      conditions      adiabatic_*, dispersive_*, cross_ratio, target_ratio, conditions_passed
      gate-effective  gate_time, gate_time_seconds, fidelity_effective
      budget          p_e, p_c, gamma_e, kappa_c, fidelity_estimate
    and finally error (empty when the row succeeded).
    """
    configure_logging(verbose)
    try:
        base = SystemConfig.load_from_yaml(config)
        numbers = [float(v) for v in split_list(values)]
        frame = run_sweep(base, path, numbers, split_list(tasks), g_hz=g_hz)
        out.parent.mkdir(parents=True, exist_ok=True)
        write_sweep(frame, out)
    except (CavityGateError, ValidationError) as e:
        fail(str(e))
    except (ValueError, OSError) as e:
        fail(f"sweep failed: {e}")
    errors = int((frame['error'] != '').sum()) if len(frame) else 0
    console.print(f"[green]✓ {len(frame)} row(s) → {out}[/green]"
                  + (f" [yellow]({errors} with errors)[/yellow]" if errors else ""))


@app.command()
def validate(config: Path = typer.Argument(..., help="YAML configuration")):
    """Report every violated configuration invariant."""
    try:
        result = validate_config(read_config_sections(config))
    except (CavityGateError, OSError) as e:
        fail(str(e))
    if result.ok:
        console.print(f"[green]✓ {config} is valid[/green]")
        return
    for violation in result.violations:
        console.print(f"  [red]✗[/red] {violation}")
    raise typer.Exit(1)


if __name__ == "__main__":
    app()
