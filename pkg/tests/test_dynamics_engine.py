"""
Tests for the RK4 propagator, its guards and phase extraction.

Full-dynamics comparisons run on the two-site ring with one photon per mode
(dimension 36) and on the three-site reference ring (dimension 216); both are
marked level 2.
"""

import math

import numpy as np
import pandas as pd
import pytest
import scipy.sparse as sp
from pydantic import ValidationError

from models.cavity_gate.dynamics_engine import (
    PropagationSettings,
    extract_phase,
    phase_series,
    propagate,
    propagate_batch,
    trajectory_frame,
)
from models.cavity_gate.exceptions import (
    NormDriftError,
    PreconditionError,
    SamplingError,
    SettingsError,
)
from models.cavity_gate.hilbert_operators import (
    HamiltonianGenerator,
    build_full_hamiltonian,
    build_mode_hamiltonian,
    build_observables,
    build_space,
    effective_energies,
    effective_generator,
    qubit_states,
)
from models.cavity_gate.error_budget import photonic_excitation_probability
from models.cavity_gate.presets import ring_config
from models.cavity_gate.reports import write_trajectory

from cavity_gate_tests.reference_constants import ErrorMessages, ReferenceValues, Tolerances


def constant_generator(energies):
    return HamiltonianGenerator(static=sp.diags(np.asarray(energies, dtype=np.complex128), 0, format='csr'))


def ground(dim=1, index=0):
    psi = np.zeros(dim, dtype=np.complex128)
    psi[index] = 1.0
    return psi


class TestPropagationSettings:
    """Step-size bound and field validation."""

    def test_max_step(self):
        assert PropagationSettings.max_step(10.0) == pytest.approx(2.0 * math.pi / 200.0)
        assert math.isinf(PropagationSettings.max_step(0.0))

    def test_step_too_large(self):
        with pytest.raises(SettingsError):
            PropagationSettings(dt=0.1).check_against(22.2842)
        PropagationSettings(dt=0.01).check_against(22.2842)

    def test_non_positive_dt(self):
        with pytest.raises(ValidationError):
            PropagationSettings(dt=0.0)

    def test_propagate_checks_settings(self, cfg_n2_weak):
        gen = build_full_hamiltonian(cfg_n2_weak, build_space(2, 1))
        with pytest.raises(SettingsError):
            propagate(ground(gen.dim), gen, 1.0, PropagationSettings(dt=0.05))


class TestPropagate:
    """Integration on a constant diagonal generator."""

    def test_phase_of_constant_energy(self):
        gen = constant_generator([0.3])
        traj, final = propagate(ground(), gen, 20.0, PropagationSettings(dt=0.01, sample_stride=10))
        assert extract_phase(traj) == pytest.approx(6.0, rel=1e-8)
        assert final[0] == pytest.approx(np.exp(-6.0j), abs=1e-8)

    def test_sampling_grid(self):
        gen = constant_generator([0.1])
        traj, _ = propagate(ground(), gen, 1.0, PropagationSettings(dt=0.3, sample_stride=1))
        # ceil(1 / 0.3) = 4 equal steps land exactly on t_final
        assert traj.times == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0])

    def test_stride_keeps_final_sample(self):
        gen = constant_generator([0.1])
        traj, _ = propagate(ground(), gen, 1.0, PropagationSettings(dt=0.01, sample_stride=30))
        assert traj.times[-1] == pytest.approx(1.0)
        assert len(traj.times) == 5

    def test_zero_time(self):
        traj, final = propagate(ground(), constant_generator([0.1]), 0.0)
        assert traj.final_overlap == 1.0
        assert np.array_equal(final, ground())

    def test_fourth_order_convergence(self):
        gen = constant_generator([1.0])
        exact = np.exp(-1.0j)
        errors = []
        for dt in (0.1, 0.05):
            _, final = propagate(ground(), gen, 1.0, PropagationSettings(dt=dt, norm_tol=1e-6))
            errors.append(abs(final[0] - exact))
        assert 13.0 < errors[0] / errors[1] < 19.0

    def test_batch_matches_single(self):
        gen = constant_generator([0.2, -0.05, 0.0])
        block = np.eye(3, dtype=np.complex128)[:, :2]
        settings = PropagationSettings(dt=0.05, sample_stride=4)
        batch, _ = propagate_batch(block, gen, 3.0, settings)
        single, _ = propagate(block[:, 1], gen, 3.0, settings)
        assert np.allclose(batch[1].overlaps, single.overlaps, rtol=0, atol=1e-15)

    def test_untracked_observables_are_nan(self):
        traj, _ = propagate(ground(), constant_generator([0.1]), 1.0, PropagationSettings(dt=0.1))
        assert np.all(np.isnan(traj.excited_pop))
        assert np.all(np.isnan(traj.photon_num))

    def test_frame_columns(self):
        traj, _ = propagate(ground(), constant_generator([0.1]), 1.0, PropagationSettings(dt=0.1))
        frame = trajectory_frame(traj)
        assert list(frame.columns) == ['t', 're_overlap', 'im_overlap', 'norm', 'excited_pop', 'photon_num']
        assert len(frame) == len(traj.times)

    def test_write_trajectory(self, tmp_path):
        traj, _ = propagate(ground(), constant_generator([0.1]), 1.0, PropagationSettings(dt=0.1))
        path = write_trajectory(traj, tmp_path / "trajectory.csv")
        frame = pd.read_csv(path)
        assert len(frame) == len(traj.times)
        assert frame['norm'].tolist() == pytest.approx([1.0] * len(traj.times), abs=1e-6)
        assert frame['excited_pop'].isna().all()


class TestGuards:
    """Preconditions, norm drift and sampling errors."""

    def test_negative_time(self):
        with pytest.raises(PreconditionError):
            propagate(ground(), constant_generator([0.1]), -1.0)

    def test_unnormalized_state(self):
        with pytest.raises(PreconditionError):
            propagate(2.0 * ground(), constant_generator([0.1]), 1.0)

    def test_wrong_dimension(self):
        with pytest.raises(PreconditionError):
            propagate(ground(2), constant_generator([0.1]), 1.0)

    def test_norm_drift(self):
        decaying = constant_generator([-0.5j])
        with pytest.raises(NormDriftError) as exc:
            propagate(ground(), decaying, 2.0, PropagationSettings(dt=0.01))
        assert exc.value.drift > exc.value.tolerance
        assert exc.value.step == 100

    def test_coarse_sampling(self):
        gen = constant_generator([1.0])
        settings = PropagationSettings(dt=0.1, sample_stride=30, norm_tol=1e-5)
        traj, _ = propagate(ground(), gen, 6.0, settings)
        with pytest.raises(SamplingError):
            phase_series(traj)


class TestEffectiveRun:
    """The reduced model through the integrator."""

    def test_gga_phase(self, cfg_n3):
        states = qubit_states(3)
        index = states.index(("g", "g", "a"))
        energy = effective_energies(cfg_n3)[index]
        traj, _ = propagate(ground(8, index), effective_generator(cfg_n3), 100.0,
                            PropagationSettings(dt=0.02))
        assert extract_phase(traj) == pytest.approx(energy * 100.0, abs=1e-9)
        assert traj.leakage == pytest.approx(0.0, abs=1e-9)


@pytest.mark.level(2)
class TestFullDynamics:
    """Two-site ring, weak drives, one photon per mode."""

    def test_cavity_and_mode_pictures_agree(self, cfg_n2_weak):
        space = build_space(2, cfg_n2_weak.n_max)
        psi0 = space.basis_state("gg")
        settings = PropagationSettings(dt=5e-4, sample_stride=200)
        cavity, _ = propagate(psi0, build_full_hamiltonian(cfg_n2_weak, space), 50.0, settings)
        modes, _ = propagate(psi0, build_mode_hamiltonian(cfg_n2_weak, space), 50.0, settings)
        assert np.allclose(cavity.overlaps, modes.overlaps, rtol=0, atol=1e-5)

    def test_virtual_excitation_stays_small(self, cfg_n2_weak):
        space = build_space(2, cfg_n2_weak.n_max)
        gen = build_full_hamiltonian(cfg_n2_weak, space)
        traj, _ = propagate(space.basis_state("gg"), gen, 50.0,
                            PropagationSettings(dt=5e-4, sample_stride=10), build_observables(space))
        # Sudden switch-on of a drive detuned by Delta excites at most (2 Omega / Delta)^2
        ceiling = math.fsum(
            (2.0 * cfg_n2_weak.rabi_1(m) / cfg_n2_weak.delta_1(m)) ** 2 for m in cfg_n2_weak.drives
        ) + math.fsum(
            (2.0 * cfg_n2_weak.rabi_n(n) / cfg_n2_weak.delta_n(n)) ** 2 for n in cfg_n2_weak.targets
        )
        assert traj.excited_pop.max() <= 1.2 * ceiling
        average = 0.5 * ceiling
        assert average / 5.0 < traj.excited_pop.mean() < 5.0 * average
        assert traj.photon_num.max() < 1e-2
        assert traj.max_norm_drift() < 1e-8, ErrorMessages.NORM.format(traj.max_norm_drift(), 1e-8)

    def test_phases_follow_reduced_model(self):
        cfg = ring_config(2, (18.0,), n_max=1)
        space = build_space(2, cfg.n_max)
        states = qubit_states(2)
        block = np.column_stack([space.basis_state(s) for s in states])
        trajectories, _ = propagate_batch(
            block, build_full_hamiltonian(cfg, space), 100.0,
            PropagationSettings(dt=2e-3, sample_stride=50, norm_tol=1e-6),
        )
        predicted = effective_energies(cfg) * 100.0
        for state, traj, expected in zip(states, trajectories, predicted):
            if abs(expected) > 0.5:
                assert extract_phase(traj) == pytest.approx(expected, rel=0.05), state


def quench_average(cfg, state):
    """Time-averaged excited population after sudden switch-on: Σ 2Ω²/Δ² over driven atoms in g."""
    terms = []
    if state[0] == 'g':
        terms += [2.0 * (cfg.rabi_1(m) / cfg.delta_1(m)) ** 2 for m in cfg.drives]
    terms += [2.0 * (cfg.rabi_n(n) / cfg.delta_n(n)) ** 2 for n in cfg.targets if state[n - 1] == 'g']
    return math.fsum(terms)


@pytest.mark.level(2)
class TestThreeSiteDynamics:
    """Three-site reference ring at default settings, every basis state to t = 100."""

    T_FINAL = 100.0

    @pytest.fixture(scope="class")
    def runs(self, cfg_n3):
        space = build_space(3, cfg_n3.n_max)
        states = qubit_states(3)
        block = np.column_stack([space.basis_state(s) for s in states])
        trajectories, _ = propagate_batch(
            block, build_full_hamiltonian(cfg_n3, space), self.T_FINAL,
            PropagationSettings(), build_observables(space),
        )
        return states, trajectories

    def test_phases_follow_reduced_model(self, cfg_n3, runs):
        states, trajectories = runs
        predicted = effective_energies(cfg_n3) * self.T_FINAL
        for state, traj, expected in zip(states, trajectories, predicted):
            if abs(expected) > 0.5:
                assert extract_phase(traj) == pytest.approx(expected, rel=0.05), state

    def test_norm_is_conserved(self, runs):
        _, trajectories = runs
        for traj in trajectories:
            drift = traj.max_norm_drift()
            assert drift < 1e-8, ErrorMessages.NORM.format(drift, 1e-8)

    def test_excited_population_matches_quench_average(self, cfg_n3, runs):
        states, trajectories = runs
        measured = np.mean([traj.excited_pop.mean() for traj in trajectories])
        expected = np.mean([quench_average(cfg_n3, s) for s in states])
        assert expected / 5.0 < measured < 5.0 * expected

    def test_photon_number_matches_estimate(self, cfg_n3, runs):
        _, trajectories = runs
        measured = np.mean([traj.photon_num.mean() for traj in trajectories])
        expected = photonic_excitation_probability(cfg_n3)
        assert expected == pytest.approx(ReferenceValues.N3_P_C, abs=Tolerances.P_C)
        assert expected / 5.0 < measured < 5.0 * expected
