"""
Tests for the detuning designer that equalizes the conditional couplings.
"""

import pytest
from pydantic import ValidationError

from models.cavity_gate.detuning_designer import (
    DesignProblem,
    coupling_mismatch,
    equalize_couplings,
)
from models.cavity_gate.exceptions import DesignError, DesignInfeasibleError
from models.cavity_gate.presets import ring_config
from models.cavity_gate.spectral_couplings import ConditionThresholds, reduced_couplings

from cavity_gate_tests.reference_constants import ReferenceValues, Tolerances


@pytest.fixture(scope="module")
def n3_result():
    return equalize_couplings(DesignProblem(base=ring_config(3, (18.0, 20.0)), anchor=ReferenceValues.ANCHOR))


@pytest.fixture(scope="module")
def n4_result():
    return equalize_couplings(DesignProblem(base=ring_config(4, (18.0, 20.0, 20.0)), anchor=ReferenceValues.ANCHOR))


class TestCouplingMismatch:
    """Lambda'_{1,j}(x) minus the anchor coupling."""

    def test_degenerate_root_at_anchor(self):
        problem = DesignProblem(base=ring_config(3, ReferenceValues.N3_PAIRS), anchor=ReferenceValues.ANCHOR)
        assert coupling_mismatch(problem, 3, ReferenceValues.ANCHOR) == 0.0

    def test_paper_n4_pair(self, cfg_n4):
        problem = DesignProblem(base=cfg_n4, anchor=ReferenceValues.ANCHOR)
        assert abs(coupling_mismatch(problem, 3, 18.34)) < Tolerances.LAMBDA_N4


class TestThreeQubitDesign:
    """Solving the single unknown pair of the three-qubit gate."""

    def test_solved_pair(self, n3_result):
        (solution,) = n3_result.solutions
        assert solution.j == 3
        assert solution.delta_target == pytest.approx(ReferenceValues.N3_PAIRS[1], abs=Tolerances.DESIGN_N3)
        assert solution.delta_control == solution.delta_target
        assert abs(solution.mismatch_residual) < 1e-8
        assert solution.min_separation >= 0.25

    def test_anchor_root_rejected(self, n3_result):
        rejected = n3_result.solutions[0].rejected
        assert any(entry.startswith("18 (separation") for entry in rejected)

    def test_couplings_equalized(self, n3_result):
        coup = reduced_couplings(n3_result.config)
        assert coup.lambda_spread() < 1e-5
        assert n3_result.anchor_lambda == pytest.approx(ReferenceValues.N3_LAMBDA, abs=Tolerances.LAMBDA_N3)
        assert n3_result.conditions.passed

    def test_bracket_without_root(self):
        problem = DesignProblem(
            base=ring_config(3, ReferenceValues.N3_PAIRS), anchor=ReferenceValues.ANCHOR, brackets={3: (30.0, 35.0)}
        )
        with pytest.raises(DesignInfeasibleError) as exc:
            equalize_couplings(problem)
        assert exc.value.target == 3
        assert "no sign change" in str(exc.value)

    def test_strict_conditions(self):
        problem = DesignProblem(
            base=ring_config(3, ReferenceValues.N3_PAIRS),
            anchor=ReferenceValues.ANCHOR,
            thresholds=ConditionThresholds(cross=1e9),
        )
        with pytest.raises(DesignError):
            equalize_couplings(problem)
        relaxed = problem.model_copy(update={"require_conditions": False})
        assert not equalize_couplings(relaxed).conditions.passed


class TestFourQubitDesign:
    """Two unknown pairs, chosen in ascending target order."""

    def test_solved_pairs(self, n4_result):
        deltas = {s.j: s.delta_target for s in n4_result.solutions}
        assert deltas[3] == pytest.approx(ReferenceValues.N4_PAIRS[1], abs=Tolerances.DESIGN_N4_J3)
        assert deltas[4] == pytest.approx(ReferenceValues.N4_PAIRS[2], abs=Tolerances.DESIGN_N4_J4)

    def test_common_coupling(self, n4_result):
        coup = reduced_couplings(n4_result.config)
        assert coup.lambda_spread() < 1e-5
        assert coup.lambda_p(4) == pytest.approx(ReferenceValues.N4_LAMBDA, abs=Tolerances.LAMBDA_N4)


class TestDesignProblem:
    """Problem validation and trivial sizes."""

    def test_bracket_for_anchor_rejected(self):
        with pytest.raises(ValidationError):
            DesignProblem(base=ring_config(3, ReferenceValues.N3_PAIRS), anchor=18.0, brackets={2: (10.0, 20.0)})

    def test_empty_bracket_rejected(self):
        with pytest.raises(ValidationError):
            DesignProblem(base=ring_config(3, ReferenceValues.N3_PAIRS), anchor=18.0, brackets={3: (22.0, 21.0)})

    def test_two_sites_need_no_design(self):
        result = equalize_couplings(DesignProblem(base=ring_config(2, (17.0,)), anchor=ReferenceValues.ANCHOR))
        assert result.solutions == ()
        assert result.config.delta_n(2) == ReferenceValues.ANCHOR
