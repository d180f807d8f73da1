"""
Normal modes and the second-order coefficients of the elimination chain.

Array layout (0-based storage of 1-based physics indices):

    omega[k-1]            = omega_k                 k = 1..N
    eta[m-1], mu[n-2]     = eta_m, mu_n             m = 1..N-1, n = 2..N
    chi[l-1, k-1]         = chi_{l,k}
    xi[m-1, k-1]          = xi_{m,k}
    zeta[n-2, k-1]        = zeta_{n,k}
    theta[m-1, k-1]       = theta_{m,k}
    vartheta[n-2, k-1]    = vartheta_{n,k}
    gamma_cross[(p, q)]   = Gamma_{p,q,k} over k     p != q
    lambda_cross[(m, n)]  = Lambda_{m,n,k} over k

Every reduction over k runs in ascending k with compensated summation
(math.fsum), so results do not depend on how terms were produced.
"""

import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from loguru import logger
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field

from .config_model import (
    SystemConfig,
    cross_detuning,
    resonance_pairing,
    target_detuning,
)
from .exceptions import PreconditionError, SingularParameterError

FloatArray = NDArray[np.float64]
ComplexArray = NDArray[np.complex128]

# Resonance residual accepted by the reduced model.
PAIRING_TOLERANCE = 1e-9


# =============================================================================
# Ring trigonometry
# =============================================================================

def _reduced_index(r: np.ndarray, n: int) -> np.ndarray:
    r = np.mod(r, n)
    return np.minimum(r, n - r)


def ring_cos(r, n: int):
    """cos(2 pi r / n) evaluated on the index folded into [0, n/2]."""
    r = np.asarray(r)
    return np.cos(2.0 * np.pi * _reduced_index(r, n) / n)


def ring_phase(r, n: int):
    """exp(-i 2 pi r / n), exactly conjugate under r -> -r."""
    r = np.mod(np.asarray(r), n)
    folded = np.minimum(r, n - r)
    angle = 2.0 * np.pi * folded / n
    sign = np.where(r > n - r, 1.0, -1.0)
    return np.cos(angle) + 1j * sign * np.sin(angle)


def ksum(values) -> float:
    """Compensated sum in the given (ascending-k) order."""
    return math.fsum(values)


def ksum_complex(values) -> complex:
    arr = np.asarray(values)
    return complex(math.fsum(arr.real), math.fsum(arr.imag))


# =============================================================================
# Mode spectrum
# =============================================================================

@dataclass(frozen=True)
class ModeSpectrum:
    """Normal-mode frequencies omega_k = 2 J_c cos(2 pi k / N), k = 1..N."""

    omega: FloatArray

    @property
    def n_sites(self) -> int:
        return int(self.omega.shape[0])


def mode_frequencies(n_sites: int, hop: float) -> ModeSpectrum:
    """Frequencies of the delocalized bosonic modes of the ring."""
    if n_sites < 2:
        raise PreconditionError(f"n_sites must be ≥ 2 (got {n_sites})")
    k = np.arange(1, n_sites + 1)
    omega = 2.0 * hop * ring_cos(k, n_sites)
    omega.setflags(write=False)
    return ModeSpectrum(omega=omega)


# =============================================================================
# First elimination: Raman coefficients
# =============================================================================

@dataclass(frozen=True)
class RamanCoefficients:
    """Stark shifts and Raman couplings after eliminating the excited level."""

    eta: FloatArray
    mu: FloatArray
    chi: FloatArray
    xi: FloatArray
    zeta: FloatArray


def _cavity_denominator(cfg: SystemConfig, j: int, omega: FloatArray) -> FloatArray:
    den = cfg.delta_c(j) - omega
    hits = np.flatnonzero(den == 0.0)
    if hits.size:
        raise SingularParameterError("Delta_j^(c) - omega_k", (j, int(hits[0]) + 1))
    return den


def _xi_row(cfg: SystemConfig, m: int, omega: FloatArray) -> FloatArray:
    n = cfg.n_sites
    pre = cfg.g(1) * cfg.rabi_1(m) / (2.0 * math.sqrt(n))
    return pre * (1.0 / _cavity_denominator(cfg, 1, omega) + 1.0 / cfg.delta_1(m))


def _zeta_row(cfg: SystemConfig, j: int, omega: FloatArray) -> FloatArray:
    n = cfg.n_sites
    pre = cfg.g(j) * cfg.rabi_n(j) / (2.0 * math.sqrt(n))
    return pre * (1.0 / _cavity_denominator(cfg, j, omega) + 1.0 / cfg.delta_n(j))


def _ctrl_dispersive(cfg: SystemConfig, m: int, omega: FloatArray) -> FloatArray:
    den = cfg.delta_c(1) - omega - cfg.delta_1(m)
    hits = np.flatnonzero(den == 0.0)
    if hits.size:
        raise SingularParameterError("Delta_1^(c) - omega_k - Delta_1^(m)", (m, int(hits[0]) + 1))
    return den


def _tgt_dispersive(cfg: SystemConfig, n: int, omega: FloatArray) -> FloatArray:
    den = cfg.delta_c(n) - omega - cfg.delta_n(n)
    hits = np.flatnonzero(den == 0.0)
    if hits.size:
        raise SingularParameterError("Delta_n^(c) - omega_k - Delta_n", (n, int(hits[0]) + 1))
    return den


def raman_coefficients(cfg: SystemConfig, spectrum: Optional[ModeSpectrum] = None) -> RamanCoefficients:
    """eta, mu, chi, xi and zeta for every index."""
    spectrum = spectrum or mode_frequencies(cfg.n_sites, cfg.hop)
    omega = spectrum.omega
    n = cfg.n_sites

    eta = np.array([cfg.rabi_1(m) ** 2 / cfg.delta_1(m) for m in cfg.drives])
    mu = np.array([cfg.rabi_n(j) ** 2 / cfg.delta_n(j) for j in cfg.targets])
    chi = np.stack([
        cfg.g(l) ** 2 / (n * _cavity_denominator(cfg, l, omega)) for l in range(1, n + 1)
    ])
    xi = np.stack([_xi_row(cfg, m, omega) for m in cfg.drives])
    zeta = np.stack([_zeta_row(cfg, j, omega) for j in cfg.targets])
    return RamanCoefficients(eta=eta, mu=mu, chi=chi, xi=xi, zeta=zeta)


# =============================================================================
# Second elimination: mode-mediated couplings
# =============================================================================

@dataclass(frozen=True)
class SecondOrderCoefficients:
    """Dispersive Stark shifts and mode-mediated atom-atom couplings."""

    theta: FloatArray
    vartheta: FloatArray
    gamma_cross: Dict[Tuple[int, int], ComplexArray]
    lambda_cross: Dict[Tuple[int, int], ComplexArray]

    def gamma_sum(self, p: int, q: int) -> complex:
        return ksum_complex(self.gamma_cross[(p, q)])

    def lambda_sum(self, m: int, n: int) -> complex:
        return ksum_complex(self.lambda_cross[(m, n)])


def second_order_coefficients(
    cfg: SystemConfig, spectrum: Optional[ModeSpectrum] = None
) -> SecondOrderCoefficients:
    """theta, vartheta, Gamma and Lambda built on the Raman coefficients."""
    spectrum = spectrum or mode_frequencies(cfg.n_sites, cfg.hop)
    omega = spectrum.omega
    n = cfg.n_sites
    raman = raman_coefficients(cfg, spectrum)

    d_ctrl = np.stack([_ctrl_dispersive(cfg, m, omega) for m in cfg.drives])
    d_tgt = np.stack([_tgt_dispersive(cfg, j, omega) for j in cfg.targets])
    theta = raman.xi ** 2 / d_ctrl
    vartheta = raman.zeta ** 2 / d_tgt

    k = np.arange(1, n + 1)
    labels = np.arange(2, n + 1)

    # Gamma[p, q, k]: targets p, q
    inv_t = 1.0 / d_tgt
    phase_pq = ring_phase((labels[:, None, None] - labels[None, :, None]) * k, n)
    gamma_dense = (
        raman.zeta[:, None, :] * raman.zeta[None, :, :] * phase_pq / 2.0
        * (inv_t[:, None, :] + inv_t[None, :, :])
    )

    # Lambda[m, n, k]: drive m on atom 1, target n
    phase_n = ring_phase((labels[:, None] - 1) * k, n)
    lambda_dense = (
        raman.xi[:, None, :] * raman.zeta[None, :, :] * phase_n[None, :, :] / 2.0
        * (1.0 / d_ctrl[:, None, :] + inv_t[None, :, :])
    )

    gamma_cross = {
        (int(p), int(q)): gamma_dense[p - 2, q - 2]
        for p in labels for q in labels if p != q
    }
    lambda_cross = {
        (m, int(j)): lambda_dense[m - 1, j - 2]
        for m in cfg.drives for j in labels
    }
    return SecondOrderCoefficients(
        theta=theta, vartheta=vartheta, gamma_cross=gamma_cross, lambda_cross=lambda_cross
    )


# =============================================================================
# Reduced effective couplings
# =============================================================================

@dataclass(frozen=True)
class EffectiveCouplings:
    """zeta'_{1,j}, xi'_j and Lambda'_{1,j} for j = 2..N (index j-2)."""

    zeta_prime: FloatArray
    xi_prime: FloatArray
    lambda_prime: FloatArray

    @property
    def n_sites(self) -> int:
        return int(self.lambda_prime.shape[0]) + 1

    def zeta_p(self, j: int) -> float:
        return float(self.zeta_prime[j - 2])

    def xi_p(self, j: int) -> float:
        return float(self.xi_prime[j - 2])

    def lambda_p(self, j: int) -> float:
        return float(self.lambda_prime[j - 2])

    def lambda_spread(self) -> float:
        """Max relative spread of Lambda'_{1,j} across targets."""
        lam = self.lambda_prime
        ref = np.max(np.abs(lam))
        if ref == 0.0:
            return 0.0
        return float((np.max(lam) - np.min(lam)) / ref)


def target_couplings(
    cfg: SystemConfig, j: int, spectrum: Optional[ModeSpectrum] = None
) -> Tuple[float, float, float]:
    """
    (zeta'_{1,j}, xi'_j, Lambda'_{1,j}) for one target.

    Reads only the pair (Delta_1^(j-1), Delta_j) and shared globals, so it is
    safe to evaluate on a configuration whose other pairs are unset or off
    resonance.
    """
    spectrum = spectrum or mode_frequencies(cfg.n_sites, cfg.hop)
    omega = spectrum.omega
    n = cfg.n_sites
    m = j - 1

    xi = _xi_row(cfg, m, omega)
    zeta = _zeta_row(cfg, j, omega)
    d_ctrl = _ctrl_dispersive(cfg, m, omega)
    d_tgt = _tgt_dispersive(cfg, j, omega)

    theta = xi ** 2 / d_ctrl
    vartheta = zeta ** 2 / d_tgt
    zeta_prime = ksum(list(theta) + [-cfg.rabi_1(m) ** 2 / cfg.delta_1(m)])
    xi_prime = ksum(list(vartheta) + [-cfg.rabi_n(j) ** 2 / cfg.delta_n(j)])

    k = np.arange(1, n + 1)
    terms = xi * zeta * ring_cos((j - 1) * k, n) * (1.0 / d_ctrl + 1.0 / d_tgt)
    return zeta_prime, xi_prime, ksum(terms)


def require_pairing(cfg: SystemConfig, tolerance: float = PAIRING_TOLERANCE) -> None:
    """Raise PreconditionError unless every resonant pair residual is ~0."""
    report = resonance_pairing(cfg)
    off = {key: r for key, r in report.pair_residuals.items() if abs(r) > tolerance}
    if off:
        detail = ", ".join(f"{key}: {value:+.3g}" for key, value in sorted(off.items()))
        raise PreconditionError(
            f"Reduced couplings need exact resonance pairing (residuals {detail})"
        )


def reduced_couplings(cfg: SystemConfig) -> EffectiveCouplings:
    """zeta', xi' and Lambda' of the reduced diagonal Hamiltonian."""
    require_pairing(cfg)
    spectrum = mode_frequencies(cfg.n_sites, cfg.hop)
    rows = [target_couplings(cfg, j, spectrum) for j in cfg.targets]
    zeta_prime, xi_prime, lambda_prime = (np.array(col) for col in zip(*rows))
    logger.debug(
        f"reduced couplings N={cfg.n_sites}: "
        f"Lambda' in [{lambda_prime.min():.6g}, {lambda_prime.max():.6g}]"
    )
    return EffectiveCouplings(
        zeta_prime=zeta_prime, xi_prime=xi_prime, lambda_prime=lambda_prime
    )


# =============================================================================
# Validity ratios
# =============================================================================

class ConditionThresholds(BaseModel):
    """Minimum ratio that counts as "much greater than" for each condition."""

    model_config = ConfigDict(frozen=True)

    adiabatic: float = Field(default=10.0, gt=0)
    dispersive: float = Field(default=10.0, gt=0)
    cross: float = Field(default=100.0, gt=0)
    target: float = Field(default=100.0, gt=0)


class ConditionReport(BaseModel):
    """Quantitative version of every "much greater than" condition."""

    model_config = ConfigDict(frozen=True)

    adiabatic_cavity: float
    adiabatic_ctrl: float
    adiabatic_tgt: float
    dispersive_ctrl: float
    dispersive_tgt: float
    cross_ratio: float
    target_ratio: float
    thresholds: ConditionThresholds = ConditionThresholds()
    passed: bool

    def rows(self) -> list:
        """(name, ratio, threshold, pass) in a fixed order."""
        t = self.thresholds
        table = [
            ('adiabatic_cavity', self.adiabatic_cavity, t.adiabatic),
            ('adiabatic_ctrl', self.adiabatic_ctrl, t.adiabatic),
            ('adiabatic_tgt', self.adiabatic_tgt, t.adiabatic),
            ('dispersive_ctrl', self.dispersive_ctrl, t.dispersive),
            ('dispersive_tgt', self.dispersive_tgt, t.dispersive),
            ('cross_ratio', self.cross_ratio, t.cross),
            ('target_ratio', self.target_ratio, t.target),
        ]
        return [(name, ratio, thr, ratio >= thr) for name, ratio, thr in table]


def _ratio(numerator: float, denominator: float) -> float:
    if denominator == 0.0:
        return math.inf
    return abs(numerator) / abs(denominator)


def _min(values) -> float:
    values = list(values)
    return min(values) if values else math.inf


def condition_ratios(
    cfg: SystemConfig, thresholds: ConditionThresholds = ConditionThresholds()
) -> ConditionReport:
    """Every adiabatic, dispersive and off-resonance ratio, with pass/fail."""
    spectrum = mode_frequencies(cfg.n_sites, cfg.hop)
    omega = spectrum.omega
    n = cfg.n_sites
    raman = raman_coefficients(cfg, spectrum)
    second = second_order_coefficients(cfg, spectrum)

    adiabatic_cavity = _min(
        _ratio(abs(cfg.delta_c(j) - w) * math.sqrt(n), cfg.g(j))
        for j in range(1, n + 1) for w in omega
    )
    adiabatic_ctrl = _min(_ratio(cfg.delta_1(m), cfg.rabi_1(m)) for m in cfg.drives)
    adiabatic_tgt = _min(_ratio(cfg.delta_n(j), cfg.rabi_n(j)) for j in cfg.targets)

    dispersive_ctrl = _min(
        _ratio(cfg.delta_c(1) - omega[k] - cfg.delta_1(m), raman.xi[m - 1, k])
        for m in cfg.drives for k in range(n)
    )
    dispersive_tgt = _min(
        _ratio(cfg.delta_c(j) - omega[k] - cfg.delta_n(j), raman.zeta[j - 2, k])
        for j in cfg.targets for k in range(n)
    )

    cross_ratio = _min(
        _ratio(cross_detuning(cfg, m, j), abs(second.lambda_sum(m, j)))
        for m in cfg.drives for j in cfg.targets if m != j - 1
    )
    target_ratio = _min(
        _ratio(target_detuning(cfg, p, q), abs(second.gamma_sum(p, q)))
        for p in cfg.targets for q in cfg.targets if p != q
    )

    values = dict(
        adiabatic_cavity=adiabatic_cavity,
        adiabatic_ctrl=adiabatic_ctrl,
        adiabatic_tgt=adiabatic_tgt,
        dispersive_ctrl=dispersive_ctrl,
        dispersive_tgt=dispersive_tgt,
        cross_ratio=cross_ratio,
        target_ratio=target_ratio,
    )
    t = thresholds
    passed = (
        min(adiabatic_cavity, adiabatic_ctrl, adiabatic_tgt) >= t.adiabatic
        and min(dispersive_ctrl, dispersive_tgt) >= t.dispersive
        and cross_ratio >= t.cross
        and target_ratio >= t.target
    )
    if not passed:
        logger.info(f"validity conditions not met: {values}")
    return ConditionReport(**values, thresholds=thresholds, passed=passed)
