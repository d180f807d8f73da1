"""
Detuning designer: choose the resonant pairs (Δ_1^(j-1), Δ_j), j = 3..N, so
that every Λ'_{1,j} equals the anchor coupling Λ'_{1,2}.

Λ'_{1,j} depends only on its own pair, so each unknown is a 1-D root-finding
problem. Roots are found on a fixed grid refined by bisection, then chosen in
ascending j to keep the largest off-resonance separation from the anchor and
from the pairs already chosen.
"""

import math
from typing import Dict, List, Optional, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.optimize import bisect

from .config_model import SystemConfig, cross_detuning, target_detuning
from .exceptions import DesignError, DesignInfeasibleError, SingularParameterError
from .spectral_couplings import (
    ConditionReport,
    ConditionThresholds,
    ModeSpectrum,
    condition_ratios,
    mode_frequencies,
    target_couplings,
)


class DesignProblem(BaseModel):
    """
    Attributes:
        base: Shared parameters; its detuning pairs for the unknowns are ignored
        anchor: Value placed on the anchor pair (Δ_1^(1), Δ_2)
        half_width: Default bracket is [anchor - half_width, anchor + half_width]
        brackets: Per-target bracket overrides, j -> (lo, hi)
        step: Scan grid spacing
        xtol: Bisection tolerance
        min_separation: Smallest admissible off-resonance separation
        pole_tolerance: A converged sign change with |mismatch| above this
            fraction of |Λ'_{1,2}| is a pole, not a root
        require_conditions: Raise if the assembled design fails condition_ratios
    """

    model_config = ConfigDict(frozen=True)

    base: SystemConfig
    anchor: float
    half_width: float = Field(default=8.0, gt=0)
    brackets: Dict[int, Tuple[float, float]] = Field(default_factory=dict)
    step: float = Field(default=0.01, gt=0)
    xtol: float = Field(default=1e-6, gt=0)
    min_separation: float = Field(default=0.25, ge=0)
    pole_tolerance: float = Field(default=1e-3, gt=0)
    thresholds: ConditionThresholds = ConditionThresholds()
    require_conditions: bool = True

    @model_validator(mode='after')
    def check_brackets(self):
        for j, (lo, hi) in self.brackets.items():
            if j not in range(3, self.base.n_sites + 1):
                raise ValueError(f"bracket for unknown target j must have 3 ≤ j ≤ N (got {j})")
            if not lo < hi:
                raise ValueError(f"bracket for j={j} must have lo < hi (got [{lo}, {hi}])")
        return self

    @property
    def unknowns(self) -> range:
        return range(3, self.base.n_sites + 1)

    def bracket(self, j: int) -> Tuple[float, float]:
        return self.brackets.get(j, (self.anchor - self.half_width, self.anchor + self.half_width))

    def anchored(self) -> SystemConfig:
        return self.base.with_pair(2, self.anchor)


class SolvedPair(BaseModel):
    model_config = ConfigDict(frozen=True)

    j: int
    delta_target: float
    delta_control: float
    mismatch_residual: float
    min_separation: float
    rejected: Tuple[str, ...] = ()


class DesignResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    config: SystemConfig
    anchor_lambda: float
    solutions: Tuple[SolvedPair, ...]
    conditions: ConditionReport


class _Mismatch:
    """Λ'_{1,j}(x) - Λ'_{1,2}(anchor) for one problem, with the spectrum cached."""

    def __init__(self, problem: DesignProblem):
        self.problem = problem
        self.anchored = problem.anchored()
        self.spectrum: ModeSpectrum = mode_frequencies(problem.base.n_sites, problem.base.hop)
        self.target = target_couplings(self.anchored, 2, self.spectrum)[2]

    def trial(self, j: int, x: float) -> SystemConfig:
        cfg = self.anchored.with_pair(j, x)
        if cfg.delta_n(j) == 0.0 or cfg.delta_1(j - 1) == 0.0:
            raise SingularParameterError("Delta_j", (j,))
        return cfg

    def __call__(self, j: int, x: float) -> float:
        return target_couplings(self.trial(j, x), j, self.spectrum)[2] - self.target


def coupling_mismatch(problem: DesignProblem, j: int, x: float) -> float:
    """Λ'_{1,j} with the pair of target j set to x, minus the anchor Λ'_{1,2}."""
    return _Mismatch(problem)(j, x)


def _pair_separation(cfg: SystemConfig, j: int, fixed: List[int]) -> float:
    """Smallest off-resonance separation between target j's pair and the fixed pairs."""
    values = []
    for other in fixed:
        values.append(abs(cross_detuning(cfg, j - 1, other)))
        values.append(abs(cross_detuning(cfg, other - 1, j)))
        values.append(abs(target_detuning(cfg, j, other)))
    return min(values) if values else math.inf


def _scan_roots(f: _Mismatch, j: int) -> Tuple[List[float], List[str]]:
    """Roots of the mismatch on target j's bracket, and the sign changes rejected as poles."""
    problem = f.problem
    lo, hi = problem.bracket(j)
    n_points = int(round((hi - lo) / problem.step))
    grid = lo + problem.step * np.arange(n_points + 1)

    def safe(x: float) -> float:
        try:
            return f(j, x)
        except SingularParameterError:
            return math.nan

    values = np.array([safe(float(x)) for x in grid])
    roots: List[float] = []
    poles: List[str] = []
    previous: Optional[int] = None
    for i, v in enumerate(values):
        if math.isnan(v):
            continue
        if v == 0.0:
            roots.append(float(grid[i]))
        elif previous is not None and values[previous] * v < 0.0:
            a, b = float(grid[previous]), float(grid[i])
            try:
                x = bisect(lambda x: f(j, x), a, b, xtol=problem.xtol)
                residual = f(j, x)
            except SingularParameterError:
                x, residual = 0.5 * (a + b), math.inf
            if abs(residual) > problem.pole_tolerance * abs(f.target):
                poles.append(f"{x:.6g} (pole)")
                logger.debug(f"j={j}: sign change near {x:.6g} is a pole")
            else:
                roots.append(x)
        previous = i
    return roots, poles


def equalize_couplings(problem: DesignProblem) -> DesignResult:
    """
    Solve every unknown pair and validate the assembled configuration.

    Raises:
        DesignInfeasibleError: some target has no admissible root
        DesignError: the assembled design fails the validity conditions
    """
    f = _Mismatch(problem)
    found = {j: _scan_roots(f, j) for j in problem.unknowns}

    cfg = f.anchored
    fixed = [2]
    solutions: List[SolvedPair] = []
    for j in problem.unknowns:
        roots, rejected = found[j]
        rejected = list(rejected)
        best: Optional[Tuple[float, float]] = None
        for x in roots:
            sep = _pair_separation(cfg.with_pair(j, x), j, fixed)
            if sep < problem.min_separation:
                rejected.append(f"{x:.6g} (separation {sep:.3g} < {problem.min_separation:g})")
                continue
            if best is None or sep > best[1]:
                best = (x, sep)
        if best is None:
            raise DesignInfeasibleError(j, rejected)
        x, sep = best
        cfg = cfg.with_pair(j, x)
        fixed.append(j)
        solutions.append(SolvedPair(
            j=j,
            delta_target=cfg.delta_n(j),
            delta_control=cfg.delta_1(j - 1),
            mismatch_residual=f(j, x),
            min_separation=sep,
            rejected=tuple(rejected),
        ))
        logger.info(f"target {j}: Delta = {x:.6g} (separation {sep:.3g}, {len(rejected)} rejected)")

    # with_pair skips validation; re-validate the assembled design
    cfg = SystemConfig.from_sections(cfg.model_dump())
    conditions = condition_ratios(cfg, problem.thresholds)
    if problem.require_conditions and not conditions.passed:
        failing = [name for name, _, _, ok in conditions.rows() if not ok]
        raise DesignError(f"designed detunings fail validity conditions: {', '.join(failing)}")
    return DesignResult(
        config=cfg,
        anchor_lambda=f.target,
        solutions=tuple(solutions),
        conditions=conditions,
    )
