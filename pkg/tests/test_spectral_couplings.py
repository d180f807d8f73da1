"""
Unit tests for the mode spectrum, the elimination coefficients, the reduced
couplings and the validity ratios.
"""

import math

import numpy as np
import pytest

from models.cavity_gate.exceptions import PreconditionError, SingularParameterError
from models.cavity_gate.hilbert_operators import hopping_matrix
from models.cavity_gate.presets import paper_n200_config, ring_config
from models.cavity_gate.spectral_couplings import (
    ConditionThresholds,
    condition_ratios,
    mode_frequencies,
    raman_coefficients,
    reduced_couplings,
    ring_phase,
    second_order_coefficients,
    target_couplings,
)

from cavity_gate_tests.reference_constants import ErrorMessages, ReferenceValues, Tolerances


class TestModeSpectrum:
    """omega_k = 2 J_c cos(2 pi k / N)."""

    def test_three_sites(self):
        omega = mode_frequencies(3, ReferenceValues.HOP).omega
        assert omega == pytest.approx([-0.5, -0.5, 1.0], abs=Tolerances.MACHINE)

    def test_four_sites(self):
        omega = mode_frequencies(4, ReferenceValues.HOP).omega
        assert omega == pytest.approx([0.0, -1.0, 0.0, 1.0], abs=Tolerances.MACHINE)

    @pytest.mark.parametrize("n_sites", [2, 3, 5, 8])
    def test_matches_hopping_eigenvalues(self, n_sites):
        omega = mode_frequencies(n_sites, ReferenceValues.HOP).omega
        eig = np.linalg.eigvalsh(hopping_matrix(n_sites, ReferenceValues.HOP))
        assert np.sort(omega) == pytest.approx(eig, abs=1e-12)

    def test_single_site_rejected(self):
        with pytest.raises(PreconditionError):
            mode_frequencies(1, ReferenceValues.HOP)

    def test_ring_phase_conjugate_symmetry(self):
        r = np.arange(1, 40)
        assert np.array_equal(ring_phase(-r, 7), np.conj(ring_phase(r, 7)))


class TestRamanCoefficients:
    """First elimination on the three-qubit reference set."""

    def test_stark_shift(self, cfg_n3):
        raman = raman_coefficients(cfg_n3)
        assert raman.eta[0] == pytest.approx(ReferenceValues.N3_ETA_1, rel=1e-15)
        assert raman.mu[1] == pytest.approx(1.0 / 21.2842, rel=1e-15)

    def test_mode_shift(self, cfg_n3):
        raman = raman_coefficients(cfg_n3)
        assert raman.chi[0, 2] == pytest.approx(ReferenceValues.N3_CHI_13, rel=1e-14)

    def test_raman_coupling(self, cfg_n3):
        raman = raman_coefficients(cfg_n3)
        assert raman.xi[0, 2] == pytest.approx(ReferenceValues.N3_XI_13, rel=1e-14)
        # Identical pairs give identical control and target couplings
        assert np.array_equal(raman.xi, raman.zeta)

    def test_cavity_resonance_is_singular(self):
        cfg = ring_config(3, (18.0, 21.2842), delta_cav=1.0)
        with pytest.raises(SingularParameterError) as exc:
            raman_coefficients(cfg)
        assert exc.value.index == (1, 3)


class TestSecondOrderCoefficients:
    """Dispersive shifts and mode-mediated couplings."""

    def test_dispersive_shift(self, cfg_n3):
        second = second_order_coefficients(cfg_n3)
        # Delta_1^(c) - omega_3 - Delta_1^(1) = 1
        assert second.theta[0, 2] == pytest.approx(ReferenceValues.N3_XI_13 ** 2, rel=1e-14)
        assert second.theta[0, 2] == pytest.approx(ReferenceValues.N3_THETA_13, abs=1e-8)
        assert np.array_equal(second.vartheta[0], second.theta[0])

    def test_lambda_term_is_real(self, cfg_n3):
        term = second_order_coefficients(cfg_n3).lambda_cross[(1, 2)][2]
        assert term.imag == 0.0
        assert term.real == pytest.approx(ReferenceValues.N3_THETA_13, abs=1e-8)

    def test_gamma_conjugate_symmetry(self, cfg_n4):
        gamma = second_order_coefficients(cfg_n4).gamma_cross
        for p, q in gamma:
            assert np.array_equal(gamma[(p, q)], np.conj(gamma[(q, p)]))

    def test_gamma_keys_exclude_diagonal(self, cfg_n4):
        gamma = second_order_coefficients(cfg_n4).gamma_cross
        assert set(gamma) == {(p, q) for p in (2, 3, 4) for q in (2, 3, 4) if p != q}

    def test_lambda_keys(self, cfg_n3):
        assert set(second_order_coefficients(cfg_n3).lambda_cross) == {(1, 2), (1, 3), (2, 2), (2, 3)}


def scaled(cfg, s):
    """Every frequency of cfg multiplied by s."""
    return cfg.with_updates(
        hop=s * cfg.hop,
        g_atom=tuple(s * v for v in cfg.g_atom),
        delta_cav=tuple(s * v for v in cfg.delta_cav),
        rabi_ctrl=tuple(s * v for v in cfg.rabi_ctrl),
        delta_ctrl=tuple(s * v for v in cfg.delta_ctrl),
        rabi_tgt=tuple(s * v for v in cfg.rabi_tgt),
        delta_tgt=tuple(s * v for v in cfg.delta_tgt),
    )


class TestScalingCovariance:
    """Doubling every frequency doubles every coefficient."""

    def test_raman(self, cfg_n3):
        base, big = raman_coefficients(cfg_n3), raman_coefficients(scaled(cfg_n3, 2.0))
        for name in ("eta", "mu", "chi", "xi", "zeta"):
            assert np.allclose(getattr(big, name), 2.0 * getattr(base, name), rtol=1e-12, atol=0), name

    def test_second_order(self, cfg_n3):
        base, big = second_order_coefficients(cfg_n3), second_order_coefficients(scaled(cfg_n3, 2.0))
        assert np.allclose(big.theta, 2.0 * base.theta, rtol=1e-12, atol=0)
        assert np.allclose(big.vartheta, 2.0 * base.vartheta, rtol=1e-12, atol=0)
        for key in base.lambda_cross:
            assert np.allclose(big.lambda_cross[key], 2.0 * base.lambda_cross[key], rtol=1e-12, atol=0)

    def test_reduced(self, cfg_n3):
        base, big = reduced_couplings(cfg_n3), reduced_couplings(scaled(cfg_n3, 2.0))
        for name in ("zeta_prime", "xi_prime", "lambda_prime"):
            assert np.allclose(getattr(big, name), 2.0 * getattr(base, name), rtol=1e-12, atol=0), name


class TestReducedCouplings:
    """zeta', xi' and Lambda' of the reduced Hamiltonian."""

    def test_paper_n3_lambda(self, cfg_n3):
        coup = reduced_couplings(cfg_n3)
        for j in (2, 3):
            value = coup.lambda_p(j)
            assert value == pytest.approx(ReferenceValues.N3_LAMBDA, abs=Tolerances.LAMBDA_N3), \
                ErrorMessages.VALUE.format(f"lambda'[1,{j}]", value, ReferenceValues.N3_LAMBDA,
                                           Tolerances.LAMBDA_N3)

    def test_paper_n3_closed_form(self, cfg_n3):
        c = np.cos(2.0 * np.pi * np.arange(1, 4) / 3.0)
        closed = math.fsum(c / (6.0 * (2.0 - c)) * (1.0 / (20.0 - c) + 1.0 / 18.0) ** 2)
        assert reduced_couplings(cfg_n3).lambda_p(2) == pytest.approx(closed, rel=1e-12)

    def test_paper_n3_target_shift(self, cfg_n3):
        coup = reduced_couplings(cfg_n3)
        assert coup.xi_p(2) == pytest.approx(ReferenceValues.N3_XI_PRIME_2, abs=1e-6)
        # Identical pairs: control and target shifts coincide
        assert coup.zeta_p(2) == coup.xi_p(2)

    def test_paper_n4_lambda(self, cfg_n4):
        coup = reduced_couplings(cfg_n4)
        assert coup.lambda_prime == pytest.approx([ReferenceValues.N4_LAMBDA] * 3, abs=Tolerances.LAMBDA_N4)

    def test_paper_n200_anchor_lambda(self):
        coup = reduced_couplings(paper_n200_config())
        assert coup.lambda_p(2) == pytest.approx(ReferenceValues.N200_LAMBDA, abs=Tolerances.LAMBDA_N200)

    def test_matches_pair_sum(self, cfg_n3):
        second = second_order_coefficients(cfg_n3)
        coup = reduced_couplings(cfg_n3)
        for j in cfg_n3.targets:
            total = second.lambda_sum(j - 1, j)
            assert abs(total.imag) < 1e-15
            assert 2.0 * total.real == pytest.approx(coup.lambda_p(j), rel=1e-12)

    def test_depends_only_on_own_pair(self, cfg_n3):
        before = target_couplings(cfg_n3, 2)
        after = target_couplings(cfg_n3.with_pair(3, 25.0), 2)
        assert before == after

    def test_requires_resonance_pairing(self, cfg_n3):
        cfg = cfg_n3.with_updates(delta_tgt=(18.0, 21.3842))
        with pytest.raises(PreconditionError):
            reduced_couplings(cfg)

    def test_dispersive_resonance_is_singular(self, cfg_n3):
        # 20 - omega_3 - 19 = 0
        with pytest.raises(SingularParameterError):
            reduced_couplings(cfg_n3.with_pair(3, 19.0))

    def test_lambda_spread(self, cfg_n3):
        assert reduced_couplings(cfg_n3).lambda_spread() < 1e-3
        assert reduced_couplings(cfg_n3.with_pair(3, 18.5)).lambda_spread() > 1e-3


class TestConditionRatios:
    """Validity ratios of the elimination chain."""

    def test_paper_n3_passes(self, cfg_n3):
        report = condition_ratios(cfg_n3)
        assert report.passed
        assert report.adiabatic_cavity == pytest.approx(ReferenceValues.N3_ADIABATIC_CAVITY, rel=1e-12)
        assert report.adiabatic_ctrl == pytest.approx(18.0)
        assert report.adiabatic_tgt == pytest.approx(18.0)

    def test_paper_n3_cross_ratio(self, cfg_n3):
        low, high = ReferenceValues.N3_CROSS_RATIO_RANGE
        assert low <= condition_ratios(cfg_n3).cross_ratio < high

    def test_rows_order(self, cfg_n3):
        names = [row[0] for row in condition_ratios(cfg_n3).rows()]
        assert names == [
            "adiabatic_cavity", "adiabatic_ctrl", "adiabatic_tgt",
            "dispersive_ctrl", "dispersive_tgt", "cross_ratio", "target_ratio",
        ]

    def test_strict_thresholds_fail(self, cfg_n3):
        report = condition_ratios(cfg_n3, ConditionThresholds(cross=1e9))
        assert not report.passed
        failing = [name for name, _, _, ok in report.rows() if not ok]
        assert "cross_ratio" in failing

    def test_two_sites_have_no_cross_terms(self):
        report = condition_ratios(ring_config(2, (18.0,)))
        assert math.isinf(report.cross_ratio)
        assert math.isinf(report.target_ratio)

    def test_strong_drive_fails_adiabatic(self):
        report = condition_ratios(ring_config(3, (18.0, 21.2842), rabi=5.0))
        assert report.adiabatic_ctrl == pytest.approx(18.0 / 5.0)
        assert not report.passed
