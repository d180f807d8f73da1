"""
Fixed-step RK4 propagation of i dψ/dt = H(t) ψ with norm guards and
overlap-phase extraction.
"""

import math
from dataclasses import dataclass
from typing import List, Literal, Optional, Tuple

import numpy as np
import pandas as pd
from loguru import logger
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field

from .exceptions import NormDriftError, PreconditionError, SamplingError, SettingsError
from .hilbert_operators import HamiltonianGenerator, Observables, StateVector

# A sampled phase step this close to π cannot be told apart from its alias.
UNWRAP_LIMIT = 0.9 * math.pi


class PropagationSettings(BaseModel):
    """
    Integrator settings.

    Attributes:
        dt: Upper bound on the step (units 1/g); the run uses the largest
            step ≤ dt that lands exactly on t_final
        sample_stride: Record a sample every this many steps
        norm_tol: Maximum allowed |‖ψ‖ - 1|
        method: Fixed-step 4th-order Runge-Kutta
    """

    model_config = ConfigDict(frozen=True)

    dt: float = Field(default=5e-4, gt=0)
    sample_stride: int = Field(default=100, ge=1)
    norm_tol: float = Field(default=1e-8, gt=0)
    method: Literal['rk4'] = 'rk4'

    @staticmethod
    def max_step(max_frequency: float) -> float:
        """Largest dt resolving the fastest oscillation: 2π / (20 f_max)."""
        if max_frequency <= 0.0:
            return math.inf
        return 2.0 * math.pi / (20.0 * max_frequency)

    def check_against(self, max_frequency: float) -> None:
        limit = self.max_step(max_frequency)
        if self.dt > limit:
            raise SettingsError(
                f"dt must be ≤ 2π/(20·f_max) = {limit:.4g} for f_max = {max_frequency:.4g} "
                f"(got {self.dt})"
            )


@dataclass(frozen=True)
class Trajectory:
    """Samples of one propagated state; observables are NaN when not tracked."""

    times: NDArray[np.float64]
    overlaps: NDArray[np.complex128]
    norms: NDArray[np.float64]
    excited_pop: NDArray[np.float64]
    photon_num: NDArray[np.float64]

    @property
    def final_overlap(self) -> complex:
        return complex(self.overlaps[-1])

    @property
    def leakage(self) -> float:
        """Population that left the initial basis state: 1 - |o(t_final)|²."""
        return float(1.0 - abs(self.overlaps[-1]) ** 2)

    def max_norm_drift(self) -> float:
        return float(np.max(np.abs(self.norms - 1.0)))


def _rk4_step(gen: HamiltonianGenerator, t: float, h: float, y: np.ndarray) -> np.ndarray:
    k1 = -1j * gen.apply(t, y)
    k2 = -1j * gen.apply(t + 0.5 * h, y + (0.5 * h) * k1)
    k3 = -1j * gen.apply(t + 0.5 * h, y + (0.5 * h) * k2)
    k4 = -1j * gen.apply(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _expectation(op, block: np.ndarray) -> np.ndarray:
    return np.real(np.sum(np.conj(block) * (op @ block), axis=0))


def propagate_batch(
    states: np.ndarray,
    gen: HamiltonianGenerator,
    t_final: float,
    settings: PropagationSettings = PropagationSettings(),
    observables: Optional[Observables] = None,
) -> Tuple[List[Trajectory], np.ndarray]:
    """
    Propagate the columns of ``states`` together to t_final.

    Args:
        states: (dim, batch) block of normalized initial states
        gen: Time-dependent Hamiltonian
        t_final: Final time (units 1/g), ≥ 0
        settings: Step, sampling and norm tolerance
        observables: Optional excited/photon operators to sample

    Returns:
        One Trajectory per column, and the final (dim, batch) block

    Raises:
        SettingsError: dt violates the resolution bound of gen
        NormDriftError: some column's norm left the tolerance band
    """
    if t_final < 0:
        raise PreconditionError(f"t_final must be ≥ 0 (got {t_final})")
    settings.check_against(gen.max_frequency)
    psi0 = np.array(states, dtype=np.complex128, copy=True)
    if psi0.ndim != 2 or psi0.shape[0] != gen.dim:
        raise PreconditionError(f"states must have shape ({gen.dim}, batch) (got {psi0.shape})")
    initial_norms = np.linalg.norm(psi0, axis=0)
    if np.any(np.abs(initial_norms - 1.0) > settings.norm_tol):
        raise PreconditionError(f"initial states must be normalized (norms {initial_norms})")

    n_steps = math.ceil(t_final / settings.dt - 1e-12) if t_final > 0 else 0
    h = t_final / n_steps if n_steps else 0.0
    batch = psi0.shape[1]
    logger.info(
        f"propagating {batch} state(s) over {n_steps} steps (dt={h:.3g}, dim={gen.dim})"
    )

    times, overlaps, norms, excited, photons = [], [], [], [], []

    def record(step: int, y: np.ndarray) -> None:
        t = step * h
        norm = np.linalg.norm(y, axis=0)
        drift = np.abs(norm - 1.0)
        worst = int(np.argmax(drift))
        if drift[worst] > settings.norm_tol:
            raise NormDriftError(step, t, float(drift[worst]), settings.norm_tol)
        times.append(t)
        overlaps.append(np.sum(np.conj(psi0) * y, axis=0))
        norms.append(norm)
        if observables is None:
            excited.append(np.full(batch, np.nan))
            photons.append(np.full(batch, np.nan))
        else:
            excited.append(_expectation(observables.excited, y))
            photons.append(_expectation(observables.photons, y))

    y = psi0
    record(0, y)
    for step in range(1, n_steps + 1):
        y = _rk4_step(gen, (step - 1) * h, h, y)
        if step % settings.sample_stride == 0 or step == n_steps:
            record(step, y)

    t_arr = np.asarray(times)
    o_arr, n_arr = np.asarray(overlaps), np.asarray(norms)
    e_arr, p_arr = np.asarray(excited), np.asarray(photons)
    trajectories = [
        Trajectory(
            times=t_arr,
            overlaps=o_arr[:, b].copy(),
            norms=n_arr[:, b].copy(),
            excited_pop=e_arr[:, b].copy(),
            photon_num=p_arr[:, b].copy(),
        )
        for b in range(batch)
    ]
    logger.debug(f"max norm drift {max(t.max_norm_drift() for t in trajectories):.3e}")
    return trajectories, y


def propagate(
    state: StateVector,
    gen: HamiltonianGenerator,
    t_final: float,
    settings: PropagationSettings = PropagationSettings(),
    observables: Optional[Observables] = None,
) -> Tuple[Trajectory, StateVector]:
    """Single-state propagation; see propagate_batch."""
    trajectories, final = propagate_batch(
        np.asarray(state).reshape(-1, 1), gen, t_final, settings, observables
    )
    return trajectories[0], final[:, 0]


def phase_series(traj: Trajectory) -> NDArray[np.float64]:
    """
    Unwrapped accumulated phase φ(t) with o(t) = |o|·e^{-iφ(t)}.

    Raises:
        SamplingError: a step between samples reaches UNWRAP_LIMIT
    """
    o = traj.overlaps
    steps = np.angle(o[1:] * np.conj(o[:-1]))
    bad = np.flatnonzero(np.abs(steps) >= UNWRAP_LIMIT)
    if bad.size:
        i = int(bad[0])
        raise SamplingError(
            f"phase step {steps[i]:+.3f} rad between t={traj.times[i]:.6g} and "
            f"t={traj.times[i + 1]:.6g} is not unwrap-safe; lower sample_stride"
        )
    start = np.angle(o[0])
    return -(start + np.concatenate(([0.0], np.cumsum(steps))))


def extract_phase(traj: Trajectory) -> float:
    """Accumulated phase at the last sample (effective energy E predicts E·t)."""
    return float(phase_series(traj)[-1])


def trajectory_frame(traj: Trajectory) -> pd.DataFrame:
    return pd.DataFrame({
        't': traj.times,
        're_overlap': traj.overlaps.real,
        'im_overlap': traj.overlaps.imag,
        'norm': traj.norms,
        'excited_pop': traj.excited_pop,
        'photon_num': traj.photon_num,
    })
