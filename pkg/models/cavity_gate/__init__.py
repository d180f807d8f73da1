"""
cavity_gate - one-step multiqubit controlled-phase gate in a ring of coupled cavities

One control atom (atom 1) and N-1 target atoms, each three-level atom sitting in
its own cavity, cavities coupled in a ring. The package computes the effective
couplings of the far-detuned regime, checks them against full Schrödinger
dynamics, scores the resulting gate and designs the detunings that make all
conditional phases complete together.

Modules:
    config_model: SystemConfig, validation and the resonance bookkeeping
    spectral_couplings: Mode spectrum, elimination coefficients, validity ratios
    hilbert_operators: Truncated state space and sparse Hamiltonians
    dynamics_engine: RK4 propagation and phase extraction
    gate_protocol: Phase table, corrections, ideal gate and fidelity
    error_budget: Excitation probabilities and the fidelity estimate
    detuning_designer: Root finding for equal conditional couplings
    runner: Scenarios, acceptance checks and sweeps

Quick Start:
    >>> from models.cavity_gate import paper_n3_config, reduced_couplings, gate_time
    >>> cfg = paper_n3_config()
    >>> coup = reduced_couplings(cfg)
    >>> round(gate_time(coup))
    2565
"""

from .config_model import SystemConfig, ValidationResult, resonance_pairing, validate_config
from .detuning_designer import DesignProblem, coupling_mismatch, equalize_couplings
from .dynamics_engine import PropagationSettings, Trajectory, extract_phase, propagate, propagate_batch
from .error_budget import (
    ExcitationWeights,
    atomic_excitation_probability,
    error_budget,
    fidelity_estimate,
    photonic_excitation_probability,
)
from .exceptions import CavityGateError
from .gate_protocol import (
    conditional_phase_from_runs,
    effective_phases,
    gate_fidelity,
    gate_time,
    ideal_gate_diag,
    simulated_gate_diag,
    to_seconds,
)
from .hilbert_operators import (
    build_effective_hamiltonian,
    build_full_hamiltonian,
    build_space,
    fourier_mode_map,
)
from .presets import paper_n3_config, paper_n4_config, paper_n200_config
from .runner import Scenario, run_scenario, sweep
from .spectral_couplings import (
    condition_ratios,
    mode_frequencies,
    raman_coefficients,
    reduced_couplings,
    second_order_coefficients,
)

__all__ = [
    'SystemConfig',
    'ValidationResult',
    'validate_config',
    'resonance_pairing',
    'mode_frequencies',
    'raman_coefficients',
    'second_order_coefficients',
    'reduced_couplings',
    'condition_ratios',
    'build_space',
    'fourier_mode_map',
    'build_full_hamiltonian',
    'build_effective_hamiltonian',
    'PropagationSettings',
    'Trajectory',
    'propagate',
    'propagate_batch',
    'extract_phase',
    'effective_phases',
    'gate_time',
    'to_seconds',
    'ideal_gate_diag',
    'simulated_gate_diag',
    'conditional_phase_from_runs',
    'gate_fidelity',
    'ExcitationWeights',
    'atomic_excitation_probability',
    'photonic_excitation_probability',
    'fidelity_estimate',
    'error_budget',
    'DesignProblem',
    'coupling_mismatch',
    'equalize_couplings',
    'Scenario',
    'run_scenario',
    'sweep',
    'paper_n3_config',
    'paper_n4_config',
    'paper_n200_config',
    'CavityGateError',
]

__version__ = '1.0.0'
