"""
Phase accumulation, single-qubit corrections and scoring of the controlled-phase
gate. Basis states are ordered as qubit_states(N): atom 1 slowest, a before g.
"""

import math
from dataclasses import dataclass
from typing import Dict, Literal, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict

from .config_model import SystemConfig
from .dynamics_engine import PropagationSettings, Trajectory, extract_phase, propagate_batch
from .exceptions import DesignError, PreconditionError, SingularParameterError
from .hilbert_operators import (
    build_full_hamiltonian,
    build_observables,
    build_space,
    effective_energies,
    qubit_states,
)
from .presets import G_HZ_DEFAULT
from .spectral_couplings import EffectiveCouplings, reduced_couplings

Source = Literal['effective', 'full']

# Relative spread of Lambda'_{1,j} still treated as simultaneous completion.
SIMULTANEITY_RTOL = 1e-3


@dataclass(frozen=True)
class PhaseTable:
    """phi_j = ξ'_j t, psi_{1,j} = ζ'_{1,j} t, phi_cond_{1,j} = Λ'_{1,j} t (index j-2)."""

    phi: NDArray[np.float64]
    psi: NDArray[np.float64]
    phi_cond: NDArray[np.float64]


def effective_phases(coup: EffectiveCouplings, t: float) -> PhaseTable:
    if t < 0:
        raise PreconditionError(f"t must be ≥ 0 (got {t})")
    return PhaseTable(
        phi=coup.xi_prime * t,
        psi=coup.zeta_prime * t,
        phi_cond=coup.lambda_prime * t,
    )


def anchor_gate_time(coup: EffectiveCouplings) -> float:
    """π / Λ'_{1,2}, without requiring the other targets to match."""
    lam = coup.lambda_p(2)
    if lam == 0.0:
        raise SingularParameterError("Lambda'_{1,2}", (2,))
    return math.pi / abs(lam)


def gate_time(coup: EffectiveCouplings, rtol: float = SIMULTANEITY_RTOL) -> float:
    """
    Time at which every conditional phase reaches π.

    Raises:
        DesignError: the Λ'_{1,j} differ by more than rtol (relative)
        SingularParameterError: Λ' is zero
    """
    if np.any(coup.lambda_prime == 0.0):
        j = int(np.flatnonzero(coup.lambda_prime == 0.0)[0]) + 2
        raise SingularParameterError("Lambda'_{1,j}", (j,))
    spread = coup.lambda_spread()
    if spread > rtol:
        raise DesignError(
            f"Lambda'_{{1,j}} are not equal (relative spread {spread:.3g} > {rtol:g}); "
            f"run the detuning designer first"
        )
    return anchor_gate_time(coup)


def to_seconds(t: float, g_hz: float = G_HZ_DEFAULT) -> float:
    """Dimensionless time to seconds, with g given as an angular frequency."""
    return t / g_hz


def ideal_gate_diag(n_sites: int) -> NDArray[np.float64]:
    """+1 when atom 1 is a, else (-1)^(number of targets in g)."""
    if n_sites < 2:
        raise PreconditionError(f"n_sites must be ≥ 2 (got {n_sites})")
    diag = []
    for state in qubit_states(n_sites):
        if state[0] == 'a':
            diag.append(1.0)
        else:
            diag.append((-1.0) ** sum(s == 'g' for s in state[1:]))
    return np.asarray(diag)


def correction_angles(table: PhaseTable, n_sites: int) -> NDArray[np.float64]:
    """Phase e^{+i·angle} applied by the single-qubit corrections, per basis state."""
    angles = []
    for state in qubit_states(n_sites):
        terms = []
        if state[0] == 'g':
            terms.extend(table.psi)
        terms.extend(table.phi[j - 2] for j in range(2, n_sites + 1) if state[j - 1] == 'g')
        angles.append(math.fsum(terms))
    return np.asarray(angles)


@dataclass(frozen=True)
class SimulatedGate:
    """
    Corrected gate diagonal plus the raw material it was built from.

    Attributes:
        diag: e^{-i phase} · e^{+i correction}, unimodular
        phases: Accumulated phase per basis state before corrections
        leakage: 1 - |o(t)|² per basis state (zeros for the effective model)
        trajectories: Sampled runs in qubit_states order (full dynamics only)
    """

    source: str
    t: float
    diag: NDArray[np.complex128]
    phases: NDArray[np.float64]
    leakage: NDArray[np.float64]
    trajectories: Tuple[Trajectory, ...] = ()


def _full_phases(
    cfg: SystemConfig, t: float, settings: PropagationSettings
) -> Tuple[np.ndarray, np.ndarray, Tuple[Trajectory, ...]]:
    space = build_space(cfg.n_sites, cfg.n_max)
    gen = build_full_hamiltonian(cfg, space)
    states = qubit_states(cfg.n_sites)
    block = np.column_stack([space.basis_state(s) for s in states])
    trajectories, _ = propagate_batch(block, gen, t, settings, build_observables(space))
    phases = np.array([extract_phase(traj) for traj in trajectories])
    leakage = np.array([traj.leakage for traj in trajectories])
    return phases, leakage, tuple(trajectories)


def simulated_gate_diag(
    cfg: SystemConfig,
    t: float,
    source: Source = 'effective',
    settings: Optional[PropagationSettings] = None,
) -> SimulatedGate:
    """
    Run every computational basis state to t and apply the corrections.

    Corrections always come from the reduced model's PhaseTable, also when
    scoring full dynamics.
    """
    if t < 0:
        raise PreconditionError(f"t must be ≥ 0 (got {t})")
    coup = reduced_couplings(cfg)
    if source == 'effective':
        phases = effective_energies(cfg) * t
        leakage = np.zeros_like(phases)
        trajectories: Tuple[Trajectory, ...] = ()
    elif source == 'full':
        phases, leakage, trajectories = _full_phases(cfg, t, settings or PropagationSettings())
    else:
        raise PreconditionError(f"source must be 'effective' or 'full' (got {source!r})")
    corrections = correction_angles(effective_phases(coup, t), cfg.n_sites)
    diag = np.exp(-1j * phases) * np.exp(1j * corrections)
    logger.debug(f"{source} gate at t={t:.6g}: max leakage {leakage.max():.3g}")
    return SimulatedGate(
        source=source, t=t, diag=diag, phases=phases, leakage=leakage, trajectories=trajectories
    )


def conditional_phase_from_runs(phi_gg: float, phi_ga: float, phi_ag: float, phi_aa: float) -> float:
    """φ_gg - φ_ga - φ_ag + φ_aa for atoms (1, j); common shifts cancel."""
    return phi_gg - phi_ga - phi_ag + phi_aa


def conditional_phases(phases: Sequence[float], n_sites: int) -> Dict[int, float]:
    """Conditional phase of every pair (1, j) with the other atoms held in a."""
    index = {state: i for i, state in enumerate(qubit_states(n_sites))}

    def run(control: str, target: str, j: int) -> float:
        state = ['a'] * n_sites
        state[0] = control
        state[j - 1] = target
        return phases[index[tuple(state)]]

    return {
        j: conditional_phase_from_runs(run('g', 'g', j), run('g', 'a', j), run('a', 'g', j), run('a', 'a', j))
        for j in range(2, n_sites + 1)
    }


def gate_fidelity(sim_diag: Sequence[complex], ideal_diag: Sequence[complex]) -> float:
    """|Σ_s ideal*_s · sim_s| / 2^N; invariant under a global phase."""
    sim = np.asarray(sim_diag, dtype=np.complex128)
    ideal = np.asarray(ideal_diag, dtype=np.complex128)
    if sim.shape != ideal.shape:
        raise PreconditionError(f"diagonals differ in length ({sim.size} vs {ideal.size})")
    return float(min(1.0, abs(np.sum(np.conj(ideal) * sim)) / sim.size))


class GateReport(BaseModel):
    """Scored gate for one source model."""

    model_config = ConfigDict(frozen=True)

    source: str
    states: Tuple[str, ...]
    diag_phases: Tuple[float, ...]
    leakage: Tuple[float, ...]
    conditional_phases: Dict[int, float]
    fidelity: float
    gate_time: float
    gate_time_seconds: float


def build_gate_report(
    cfg: SystemConfig,
    source: Source = 'effective',
    settings: Optional[PropagationSettings] = None,
    g_hz: float = G_HZ_DEFAULT,
    t: Optional[float] = None,
) -> GateReport:
    """Simulate at the gate time (or at t) and score against the ideal gate."""
    if t is None:
        t = gate_time(reduced_couplings(cfg))
    return score_gate(cfg, simulated_gate_diag(cfg, t, source, settings), g_hz)


def score_gate(cfg: SystemConfig, sim: SimulatedGate, g_hz: float = G_HZ_DEFAULT) -> GateReport:
    return GateReport(
        source=sim.source,
        states=tuple(''.join(s) for s in qubit_states(cfg.n_sites)),
        diag_phases=tuple(float(p) for p in np.angle(sim.diag)),
        leakage=tuple(float(x) for x in sim.leakage),
        conditional_phases=conditional_phases(sim.phases, cfg.n_sites),
        fidelity=gate_fidelity(sim.diag, ideal_gate_diag(cfg.n_sites)),
        gate_time=sim.t,
        gate_time_seconds=to_seconds(sim.t, g_hz),
    )
