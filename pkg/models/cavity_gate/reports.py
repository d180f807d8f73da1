"""
Report writers. CSVs are UTF-8, comma separated, with a header row and 6
significant digits; gate_report.txt is rendered from a Jinja2 template as
key = value blocks. Nothing time-dependent is written, so reruns are
byte-identical.
"""

import math
from pathlib import Path
from typing import Any, Dict, List

import pandas as pd
from jinja2 import Environment, FileSystemLoader

from .detuning_designer import DesignResult
from .dynamics_engine import Trajectory, trajectory_frame
from .exceptions import ScenarioError
from .gate_protocol import SimulatedGate
from .hilbert_operators import qubit_states
from .spectral_couplings import ConditionReport, EffectiveCouplings

TEMPLATE_DIR = Path(__file__).parent / 'templates'
GATE_REPORT_TEMPLATE = 'gate_report.txt.j2'
FLOAT_FORMAT = '%.6g'

COUPLINGS_COLUMNS = ('j', 'zeta_prime', 'xi_prime', 'lambda_prime')
CONDITIONS_COLUMNS = ('name', 'ratio', 'threshold', 'pass')
DESIGN_COLUMNS = ('j', 'solved_delta', 'mismatch_residual', 'min_separation_achieved', 'rejected_roots')


def sig6(value: Any) -> str:
    return f"{value:.6g}"


def write_frame(frame: pd.DataFrame, path: Path) -> Path:
    try:
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, encoding='utf-8', lineterminator='\n')
    except OSError as e:
        raise ScenarioError(f"cannot write {path}: {e}") from e
    return path


def couplings_frame(coup: EffectiveCouplings) -> pd.DataFrame:
    return pd.DataFrame({
        'j': list(range(2, coup.n_sites + 1)),
        'zeta_prime': coup.zeta_prime,
        'xi_prime': coup.xi_prime,
        'lambda_prime': coup.lambda_prime,
    }, columns=list(COUPLINGS_COLUMNS))


def conditions_frame(report: ConditionReport) -> pd.DataFrame:
    return pd.DataFrame(
        [(name, ratio, thr, bool(ok)) for name, ratio, thr, ok in report.rows()],
        columns=list(CONDITIONS_COLUMNS),
    )


def design_frame(result: DesignResult) -> pd.DataFrame:
    return pd.DataFrame(
        [
            (s.j, s.delta_target, s.mismatch_residual, s.min_separation, '; '.join(s.rejected))
            for s in result.solutions
        ],
        columns=list(DESIGN_COLUMNS),
    )


def write_couplings(coup: EffectiveCouplings, path: Path) -> Path:
    return write_frame(couplings_frame(coup), path)


def write_conditions(report: ConditionReport, path: Path) -> Path:
    return write_frame(conditions_frame(report), path)


def write_design(result: DesignResult, path: Path) -> Path:
    return write_frame(design_frame(result), path)


def write_trajectory(traj: Trajectory, path: Path) -> Path:
    return write_frame(trajectory_frame(traj), path)


def write_trajectories(sim: SimulatedGate, n_sites: int, output_dir: Path) -> List[Path]:
    """One trajectory_<state>.csv per computational basis state of a full-dynamics run."""
    if not sim.trajectories:
        raise ScenarioError(f"no sampled trajectories in a {sim.source} gate run")
    return [
        write_trajectory(traj, output_dir / f"trajectory_{''.join(state)}.csv")
        for state, traj in zip(qubit_states(n_sites), sim.trajectories)
    ]


def render_gate_report(context: Dict[str, Any]) -> str:
    """
    Render gate_report.txt.

    Template Variables:
        scenario, n_sites: Header block
        couplings: Optional dict with lambda_prime, gate_time, gate_time_seconds
        gates: List of GateReport (effective and/or full)
        budget: Optional ErrorBudget
        checks: List of acceptance checks
    """
    env = Environment(
        loader=FileSystemLoader(TEMPLATE_DIR),
        keep_trailing_newline=True,
        trim_blocks=True,
        lstrip_blocks=True,
    )
    env.filters['sig6'] = sig6
    return env.get_template(GATE_REPORT_TEMPLATE).render({'pi': math.pi, **context})


def write_gate_report(context: Dict[str, Any], path: Path) -> Path:
    text = render_gate_report(context)
    try:
        path.write_text(text, encoding='utf-8')
    except OSError as e:
        raise ScenarioError(f"cannot write {path}: {e}") from e
    return path
