"""
Error types for the cavity phase-gate toolkit.

Every failure raised by the library derives from CavityGateError so the CLI can
catch one type. Errors that describe a bad value also derive from ValueError,
which keeps them usable inside pydantic validators.
"""

from typing import List, Sequence


class CavityGateError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(CavityGateError, ValueError):
    """Configuration data violates a SystemConfig invariant."""

    def __init__(self, violations: Sequence[str]):
        self.violations: List[str] = list(violations)
        joined = "; ".join(self.violations)
        super().__init__(f"Invalid configuration: {joined}")


class SingularParameterError(CavityGateError, ValueError):
    """A denominator of the elimination chain is exactly zero."""

    def __init__(self, quantity: str, index: tuple):
        self.quantity = quantity
        self.index = index
        super().__init__(f"Singular denominator in {quantity} at index {index}")


class PreconditionError(CavityGateError, ValueError):
    """An operation was called outside its stated domain."""


class CapacityError(CavityGateError):
    """Requested Hilbert space exceeds the configured dimension cap."""


class SettingsError(CavityGateError, ValueError):
    """Propagation settings violate their invariants."""


class NormDriftError(CavityGateError):
    """State norm left the tolerance band during propagation."""

    def __init__(self, step: int, time: float, drift: float, tolerance: float):
        self.step = step
        self.time = time
        self.drift = drift
        self.tolerance = tolerance
        super().__init__(
            f"Norm drift {drift:.3e} exceeds tolerance {tolerance:.1e} "
            f"at step {step} (t = {time:.6g})"
        )


class SamplingError(CavityGateError):
    """Trajectory sampling is too coarse to unwrap the overlap phase."""


class DesignError(CavityGateError):
    """Couplings are not equalized; run the detuning designer first."""


class DesignInfeasibleError(CavityGateError):
    """No admissible root of the coupling mismatch exists in the bracket."""

    def __init__(self, target: int, rejected: Sequence[str]):
        self.target = target
        self.rejected = list(rejected)
        detail = ", ".join(self.rejected) if self.rejected else "no sign change"
        super().__init__(f"No admissible detuning for target {target} ({detail})")


class WeightMismatchError(CavityGateError, ValueError):
    """Error-budget weights do not match the configuration."""


class ScenarioError(CavityGateError, ValueError):
    """Unknown scenario, task or sweep path."""
