"""
Analytic error budget: virtual excitation probabilities, effective decay rates
and the fidelity estimate F ≈ 1 - (p_e γ + p_c κ) t.

The basis-averaging weights are inputs. Only the three-qubit set is known
(prefactor 1/8; control 3/4; targets 13/8 and 3/8), so other sizes must
supply their own.
"""

import math
from fractions import Fraction
from typing import Any, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from .config_model import SystemConfig
from .exceptions import PreconditionError, WeightMismatchError
from .presets import G_HZ_DEFAULT
from .spectral_couplings import mode_frequencies, raman_coefficients

# Cavity photon lifetime used for the lifetime margin (seconds).
CAVITY_LIFETIME_S = 3.0e-2


def _to_fraction(value: Any) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError(f"weight must be a number or 'p/q' string (got {value!r})")
    if isinstance(value, (int, float, str)):
        return Fraction(str(value)) if isinstance(value, float) else Fraction(value)
    raise ValueError(f"weight must be a number or 'p/q' string (got {value!r})")


class ExcitationWeights(BaseModel):
    """
    Weights of the excitation-probability sums.

    Attributes:
        prefactor: Overall factor of the atomic probability
        control: Weight of the control-atom drives
        targets: One weight per target atom n = 2..N

    Example:
        >>> w = ExcitationWeights(prefactor="1/8", control="3/4", targets=["13/8", "3/8"])
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    prefactor: Fraction
    control: Fraction
    targets: Tuple[Fraction, ...]

    @field_validator('prefactor', 'control', mode='before')
    @classmethod
    def parse_scalar(cls, v):
        return _to_fraction(v)

    @field_validator('targets', mode='before')
    @classmethod
    def parse_targets(cls, v):
        if not isinstance(v, (list, tuple)):
            raise ValueError(f"targets must be a list (got {v!r})")
        return tuple(_to_fraction(x) for x in v)

    @classmethod
    def three_qubit(cls) -> 'ExcitationWeights':
        return cls(prefactor=Fraction(1, 8), control=Fraction(3, 4),
                   targets=(Fraction(13, 8), Fraction(3, 8)))

    @classmethod
    def default_for(cls, n_sites: int) -> 'ExcitationWeights':
        if n_sites != 3:
            raise WeightMismatchError(
                f"no default excitation weights for N = {n_sites}; supply a weights section"
            )
        return cls.three_qubit()

    def check_against(self, cfg: SystemConfig) -> None:
        if len(self.targets) != cfg.n_sites - 1:
            raise WeightMismatchError(
                f"expected {cfg.n_sites - 1} target weights (got {len(self.targets)})"
            )


def _weights(cfg: SystemConfig, weights: Optional[ExcitationWeights]) -> ExcitationWeights:
    w = weights or ExcitationWeights.default_for(cfg.n_sites)
    w.check_against(cfg)
    return w


def atomic_excitation_fraction(
    cfg: SystemConfig, weights: Optional[ExcitationWeights] = None
) -> Fraction:
    """
    prefactor · [control · Σ_m (Ω_1^(m)/Δ_1^(c))² + Σ_n w_n (Ω_n/Δ_n^(c))²], exactly.

    Floats enter as their exact binary values, so unit Rabi
    frequencies and Δ^(c) = 20 give 7/6400 with no rounding.
    """
    w = _weights(cfg, weights)
    ctrl = sum(
        (Fraction(cfg.rabi_1(m)) ** 2 / Fraction(cfg.delta_c(1)) ** 2 for m in cfg.drives),
        Fraction(0),
    )
    tgt = sum(
        (wn * Fraction(cfg.rabi_n(n)) ** 2 / Fraction(cfg.delta_c(n)) ** 2
         for wn, n in zip(w.targets, cfg.targets)),
        Fraction(0),
    )
    return w.prefactor * (w.control * ctrl + tgt)


def atomic_excitation_probability(
    cfg: SystemConfig, weights: Optional[ExcitationWeights] = None
) -> float:
    return float(atomic_excitation_fraction(cfg, weights))


def photonic_sums(cfg: SystemConfig) -> Tuple[np.ndarray, np.ndarray]:
    """
    Unweighted sums Σ_k (ξ_{m,k}/D_{m,k})² per drive m and Σ_k (ζ_{n,k}/D_{n,k})²
    per target n, with D the dispersive denominators.
    """
    spectrum = mode_frequencies(cfg.n_sites, cfg.hop)
    omega = spectrum.omega
    raman = raman_coefficients(cfg, spectrum)
    ctrl = np.array([
        math.fsum((raman.xi[m - 1] / (cfg.delta_c(1) - omega - cfg.delta_1(m))) ** 2)
        for m in cfg.drives
    ])
    tgt = np.array([
        math.fsum((raman.zeta[n - 2] / (cfg.delta_c(n) - omega - cfg.delta_n(n))) ** 2)
        for n in cfg.targets
    ])
    return ctrl, tgt


def photonic_excitation_probability(
    cfg: SystemConfig, weights: Optional[ExcitationWeights] = None
) -> float:
    """control · Σ_m Σ_k (ξ/D)² + Σ_n w_n Σ_k (ζ/D)²."""
    w = _weights(cfg, weights)
    ctrl, tgt = photonic_sums(cfg)
    terms = [float(w.control) * s for s in ctrl]
    terms += [float(wn) * s for wn, s in zip(w.targets, tgt)]
    return math.fsum(terms)


def fidelity_estimate(cfg: SystemConfig, p_e: float, p_c: float, t: float) -> float:
    if t < 0:
        raise PreconditionError(f"t must be ≥ 0 (got {t})")
    return 1.0 - (p_e * cfg.gamma + p_c * cfg.kappa) * t


def cavity_lifetime_margin(t_seconds: float, lifetime: float = CAVITY_LIFETIME_S) -> float:
    """How many gate durations fit into one cavity lifetime."""
    if t_seconds <= 0:
        return math.inf
    return lifetime / t_seconds


class ErrorBudget(BaseModel):
    model_config = ConfigDict(frozen=True)

    p_e: float
    p_c: float
    gamma_e: float
    kappa_c: float
    fidelity_estimate: float
    lifetime_margin: float


def error_budget(
    cfg: SystemConfig,
    t: float,
    weights: Optional[ExcitationWeights] = None,
    g_hz: float = G_HZ_DEFAULT,
    lifetime: float = CAVITY_LIFETIME_S,
) -> ErrorBudget:
    """All budget quantities at gate time t (units 1/g)."""
    p_e = atomic_excitation_probability(cfg, weights)
    p_c = photonic_excitation_probability(cfg, weights)
    return ErrorBudget(
        p_e=p_e,
        p_c=p_c,
        gamma_e=p_e * cfg.gamma,
        kappa_c=p_c * cfg.kappa,
        fidelity_estimate=fidelity_estimate(cfg, p_e, p_c, t),
        lifetime_margin=cavity_lifetime_margin(t / g_hz, lifetime),
    )
