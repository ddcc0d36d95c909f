import dataclasses
import math

import pytest
from hypothesis import given, settings

from src.dcf_engine import rollback, two_scenario_value
from src.models import DistributionKind
from src.tree_model import (
    BranchControl,
    CashFlowDist,
    FirstStageBranch,
    ModelValidationError,
    OptionTree,
    PROBABILITY_TOLERANCE,
    Scenario,
    TerminalBranch,
    TwoScenarioProject,
    path_probabilities,
    require_valid_tree,
    tree_from_scenarios,
    validate_project,
    validate_tree,
)
from tests.strategies import option_trees


def _replace_first(tree: OptionTree, **changes) -> OptionTree:
    first = dataclasses.replace(tree.stage1[0], **changes)
    return dataclasses.replace(tree, stage1=(first, tree.stage1[1]))


class TestCashFlowDist:
    def test_gaussian_from_cv(self):
        dist = CashFlowDist.gaussian(2000, cv=0.1)
        assert dist.kind == DistributionKind.GAUSSIAN
        assert dist.sd == pytest.approx(200.0)
        assert dist.cv == 0.1

    def test_gaussian_sd_wins_over_cv(self):
        dist = CashFlowDist.gaussian(2200, sd=308.0, cv=0.14)
        assert dist.sd == 308.0

    def test_uniform_moments(self):
        dist = CashFlowDist.uniform(1800, 2200)
        assert dist.expected == 2000.0
        assert dist.variance == pytest.approx(400 ** 2 / 12)

    def test_deterministic(self):
        dist = CashFlowDist.deterministic(42)
        assert dist.expected == 42.0
        assert dist.variance == 0.0
        assert not dist.is_random

    def test_zero_width_is_not_random(self):
        assert not CashFlowDist.gaussian(100, sd=0).is_random
        assert not CashFlowDist.uniform(5, 5).is_random
        assert CashFlowDist.gaussian(100, sd=1).is_random

    @pytest.mark.parametrize("build", [
        lambda: CashFlowDist.gaussian(100, sd=-1),
        lambda: CashFlowDist.gaussian(100, cv=-0.1),
        lambda: CashFlowDist.uniform(2200, 1800),
        lambda: CashFlowDist.deterministic(math.nan),
        lambda: CashFlowDist.deterministic(math.inf),
    ])
    def test_rejects_bad_parameters(self, build):
        with pytest.raises(ValueError):
            build()


class TestValidateTree:
    def test_bundled_trees_are_valid(self, reduction_tree, switching_tree):
        assert validate_tree(reduction_tree).is_valid
        assert validate_tree(switching_tree).is_valid

    def test_probability_out_of_range_names_field(self, reduction_tree):
        tree = _replace_first(reduction_tree, control=BranchControl(1.3))
        report = validate_tree(tree)
        assert "stage1[1].p" in report.paths
        assert "stage1.p" in report.paths

    def test_sibling_sum(self, reduction_tree):
        second = reduction_tree.stage1[1].branches[0]
        bad = dataclasses.replace(second, control=BranchControl(0.7))
        first = dataclasses.replace(reduction_tree.stage1[1], branches=(bad, reduction_tree.stage1[1].branches[1]))
        tree = dataclasses.replace(reduction_tree, stage1=(reduction_tree.stage1[0], first))
        assert validate_tree(tree).paths == ["stage2[2].p"]

    def test_terminal_length(self, reduction_tree):
        tree = dataclasses.replace(reduction_tree, horizon=5)
        report = validate_tree(tree)
        assert "stage3[1][1][1].cash_flows" in report.paths
        assert len(report) == 8

    def test_collects_every_violation(self, reduction_tree):
        tree = dataclasses.replace(
            _replace_first(reduction_tree, control=BranchControl(-0.5)),
            rate=-1.0,
            initial_investment=-10.0,
        )
        paths = validate_tree(tree).paths
        assert {"initial_investment", "rate", "stage1[1].p", "stage1.p"} <= set(paths)

    def test_horizon_too_short(self, reduction_tree):
        tree = dataclasses.replace(reduction_tree, horizon=2)
        assert "horizon" in validate_tree(tree).paths

    def test_arity(self, reduction_tree):
        tree = dataclasses.replace(reduction_tree, stage1=reduction_tree.stage1[:1])
        assert validate_tree(tree).paths == ["stage1"]

    def test_require_valid_tree_raises_with_report(self, reduction_tree):
        tree = _replace_first(reduction_tree, control=BranchControl(1.3))
        with pytest.raises(ModelValidationError) as excinfo:
            require_valid_tree(tree)
        assert "stage1[1].p" in excinfo.value.report.paths
        assert "stage1[1].p" in str(excinfo.value)

    def test_node_access(self, switching_tree):
        assert switching_tree.node(2).control.delta.expected == -100.0
        assert switching_tree.node(2, 1).control.delta.expected == -500.0
        assert switching_tree.node(2, 2, 1).cash_flows[0].expected == 2200.0
        with pytest.raises(ValueError):
            switching_tree.node()


class TestValidateProject:
    def test_valid(self, base_project):
        assert validate_project(base_project).is_valid

    def test_probabilities_must_sum_to_one(self):
        project = TwoScenarioProject(5000, 0.2, [Scenario(0.5, [1, 2, 3]), Scenario(0.6, [1, 2, 3])])
        assert validate_project(project).paths == ["scenarios.probability"]

    def test_horizons_must_match(self):
        project = TwoScenarioProject(5000, 0.2, [Scenario(0.5, [1, 2, 3]), Scenario(0.5, [1, 2])])
        assert "scenarios.cash_flows" in validate_project(project).paths


class TestPathProbabilities:
    def test_reduction_tree(self, reduction_tree):
        probabilities = dict(path_probabilities(reduction_tree))
        assert len(probabilities) == 8
        assert probabilities[(1, 1, 1)] == 0.5
        assert probabilities[(2, 1, 1)] == 0.5
        assert probabilities[(2, 2, 1)] == 0.0

    def test_switching_tree(self, switching_tree):
        by_stage2 = {}
        for (i, j, _), p in path_probabilities(switching_tree):
            by_stage2[(i, j)] = by_stage2.get((i, j), 0.0) + p
        assert by_stage2 == {(1, 1): 0.5, (1, 2): 0.0, (2, 1): 0.25, (2, 2): 0.25}

    @settings(max_examples=1000, deadline=None)
    @given(tree=option_trees())
    def test_sum_to_one(self, tree):
        total = sum(p for _, p in path_probabilities(tree))
        assert abs(total - 1.0) <= PROBABILITY_TOLERANCE

    @settings(max_examples=300, deadline=None)
    @given(tree=option_trees(degenerate=True))
    def test_certain_siblings_leave_one_path(self, tree):
        probabilities = sorted(p for _, p in path_probabilities(tree))
        assert probabilities == [0.0] * 7 + [1.0]


class TestTreeFromScenarios:
    def test_values_match_two_scenario_value(self, base_project):
        tree = tree_from_scenarios(base_project)
        assert validate_tree(tree).is_valid
        assert rollback(tree).v0 == pytest.approx(two_scenario_value(base_project).v0, rel=1e-12)

    def test_time_one_values_match(self, base_project):
        tree_values = rollback(tree_from_scenarios(base_project)).node_values
        scenario_values = two_scenario_value(base_project).node_values
        for i in (1, 2):
            assert tree_values[(i,)] == pytest.approx(scenario_values[(i,)], rel=1e-12)

    def test_rejects_short_projects(self):
        project = TwoScenarioProject(0, 0.1, [Scenario(0.5, [1, 2]), Scenario(0.5, [3, 4])])
        with pytest.raises(ModelValidationError):
            tree_from_scenarios(project)

    def test_leaves_carry_scenario_flows(self, base_project):
        tree = tree_from_scenarios(base_project)
        leaf = tree.node(2, 1, 1)
        assert isinstance(leaf, TerminalBranch)
        assert [cf.expected for cf in leaf.cash_flows] == [1300.0, 2000.0]
        assert isinstance(tree.node(1), FirstStageBranch)
