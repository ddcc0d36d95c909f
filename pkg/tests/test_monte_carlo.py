import dataclasses

import numpy as np
import pytest

from src.brcf_gaussian import BrcfOneStageModel, option_moments
from src.dcf_engine import rollback
from src.models import SimulationMode, SimulationResult
from src.monte_carlo import (
    HISTOGRAM_HEADER,
    SimulationComparison,
    SimulationSpec,
    UnsupportedModeError,
    compare,
    draw,
    histogram,
    histogram_csv,
    layout_width,
    sample_values,
    simulate,
    transform,
)
from src.rng import UnitStream
from src.tree_model import CashFlowDist, ModelValidationError

M = 100_000
BRANCH = SimulationMode.BRANCH_SAMPLING


class TestDraw:
    def test_deterministic(self):
        assert draw(CashFlowDist.deterministic(42), UnitStream(1)) == 42.0

    def test_zero_sd_gaussian(self):
        assert draw(CashFlowDist.gaussian(100, sd=0), UnitStream(1)) == 100.0

    def test_each_draw_consumes_one_deviate(self):
        stream = UnitStream(3)
        draw(CashFlowDist.deterministic(1), stream)
        draw(CashFlowDist.gaussian(0, sd=1), stream)
        reference = UnitStream(3)
        reference.skip(2)
        assert stream.next_unit() == reference.next_unit()

    def test_uniform_mean(self):
        values = transform(CashFlowDist.uniform(1800, 2200), UnitStream(11).units(M))
        assert values.min() >= 1800 and values.max() <= 2200
        assert values.mean() == pytest.approx(2000, abs=4)

    def test_gaussian_moments(self):
        values = transform(CashFlowDist.gaussian(2000, sd=200), UnitStream(11).units(M))
        assert values.mean() == pytest.approx(2000, abs=4)
        assert values.std(ddof=1) == pytest.approx(200, abs=4)


class TestBrcfSimulation:
    def test_gaussian_option_matches_analytic(self, gauss_option_model):
        result = simulate(SimulationSpec(gauss_option_model, samples=M, seed=20240501))
        mean, sd = option_moments(gauss_option_model)
        assert result.sample_mean == pytest.approx(mean, abs=30)
        assert result.sample_sd == pytest.approx(sd, abs=15)
        assert result.pv_alpha == pytest.approx(5065, abs=30)
        assert result.pvar == pytest.approx(result.sample_mean - result.pv_alpha)

    def test_uniform_base(self, uniform_base_model):
        result = simulate(SimulationSpec(uniform_base_model, samples=M, seed=1))
        assert result.sample_mean == pytest.approx(5507, abs=25)
        assert result.sample_sd == pytest.approx(204, abs=10)
        assert result.pv_alpha == pytest.approx(5171, abs=30)

    def test_uniform_option(self, uniform_option_model):
        result = simulate(SimulationSpec(uniform_option_model, samples=M, seed=1))
        assert result.sample_mean == pytest.approx(5678, abs=25)
        assert result.sample_sd == pytest.approx(218, abs=11)
        assert result.pv_alpha == pytest.approx(5323, abs=30)

    def test_uniform_comparison(self, uniform_option_model, uniform_base_model):
        option = simulate(SimulationSpec(uniform_option_model, samples=M, seed=1))
        basic = simulate(SimulationSpec(uniform_base_model, samples=M, seed=1))
        comparison = compare(option, basic, investment=5000.0)
        assert comparison.option_feasible and comparison.basic_feasible
        assert comparison.attractive
        assert comparison.verdict == "Real Option project looks more attractive"
        assert comparison.option_value == pytest.approx(152, abs=40)
        assert comparison.differences["pv_alpha"] == comparison.option_value

    def test_branch_sampling_agrees_in_mean(self, gauss_option_model):
        expectation = simulate(SimulationSpec(gauss_option_model, samples=M, seed=5))
        branch = simulate(SimulationSpec(gauss_option_model, samples=M, seed=5, mode=BRANCH))
        assert branch.sample_mean == pytest.approx(expectation.sample_mean, abs=30)
        assert branch.sample_sd > expectation.sample_sd

    def test_deterministic_model(self):
        model = BrcfOneStageModel([CashFlowDist.deterministic(1200)], 0.2)
        result = simulate(SimulationSpec(model, samples=500, seed=0))
        assert result.sample_mean == pytest.approx(1000.0)
        assert result.sample_sd == 0.0
        assert result.pv_alpha == result.sample_mean
        assert len(result.histogram) == 1
        assert result.histogram[0].count == 500
        assert result.histogram[0].width == 0.0

    def test_single_sample(self, gauss_option_model):
        result = simulate(SimulationSpec(gauss_option_model, samples=1, seed=9))
        assert result.sample_sd == 0.0
        assert result.pv_alpha == result.sample_mean


class TestReproducibility:
    def test_worker_count_does_not_change_values(self, uniform_option_model):
        spec = SimulationSpec(uniform_option_model, samples=10_000, seed=77)
        assert np.array_equal(sample_values(spec, workers=1), sample_values(spec, workers=4))

    def test_same_seed_same_result(self, gauss_option_model):
        spec = SimulationSpec(gauss_option_model, samples=5000, seed=3)
        assert simulate(spec) == simulate(spec, workers=3)

    def test_prefix_stability(self, gauss_option_model):
        small = sample_values(SimulationSpec(gauss_option_model, samples=5000, seed=3))
        large = sample_values(SimulationSpec(gauss_option_model, samples=9000, seed=3))
        assert np.array_equal(small, large[:5000])

    def test_seeds_differ(self, gauss_option_model):
        a = simulate(SimulationSpec(gauss_option_model, samples=1000, seed=1))
        b = simulate(SimulationSpec(gauss_option_model, samples=1000, seed=2))
        assert a.sample_mean != b.sample_mean


class TestTreeSimulation:
    def test_expectation_form_rejected(self, reduction_tree):
        with pytest.raises(UnsupportedModeError):
            simulate(SimulationSpec(reduction_tree, samples=10))

    def test_reduction_tree(self, reduction_tree):
        result = simulate(SimulationSpec(reduction_tree, samples=M, seed=4, mode=BRANCH))
        assert result.sample_mean == pytest.approx(rollback(reduction_tree).v0, abs=30)

    def test_switching_tree(self, switching_tree):
        result = simulate(SimulationSpec(switching_tree, samples=M, seed=4, mode=BRANCH))
        assert result.sample_mean == pytest.approx(5674, abs=30)

    def test_layout_width(self, switching_tree, gauss_option_model):
        assert layout_width(switching_tree) == 3 + 4 + switching_tree.horizon - 2
        assert layout_width(gauss_option_model) == gauss_option_model.horizon + 2

    def test_random_leaf_flows(self, reduction_tree):
        node = reduction_tree.stage1[0]
        second = node.branches[0]
        leaf = second.terminals[0]
        random_leaf = dataclasses.replace(
            leaf, cash_flows=[CashFlowDist.gaussian(cf.expected, sd=100) for cf in leaf.cash_flows])
        second = dataclasses.replace(second, terminals=(random_leaf, second.terminals[1]))
        node = dataclasses.replace(node, branches=(second, node.branches[1]))
        tree = dataclasses.replace(reduction_tree, stage1=(node, reduction_tree.stage1[1]))
        result = simulate(SimulationSpec(tree, samples=M, seed=4, mode=BRANCH))
        assert result.sample_mean == pytest.approx(rollback(tree, use_means=True).v0, abs=30)


class TestValidation:
    @pytest.mark.parametrize("changes", [
        {"samples": 0},
        {"samples": True},
        {"seed": -1},
        {"alpha": 0.7},
        {"histogram_buckets": 0},
    ])
    def test_bad_spec(self, gauss_option_model, changes):
        with pytest.raises(ValueError):
            simulate(SimulationSpec(gauss_option_model, **changes))

    def test_invalid_model(self, gauss_option_model):
        model = dataclasses.replace(gauss_option_model, option_probability=2.0)
        with pytest.raises(ModelValidationError):
            simulate(SimulationSpec(model, samples=10))

    def test_compare_alpha_mismatch(self, gauss_option_model):
        a = simulate(SimulationSpec(gauss_option_model, samples=100, alpha=0.05))
        b = simulate(SimulationSpec(gauss_option_model, samples=100, alpha=0.01))
        with pytest.raises(ValueError):
            compare(a, b)


class TestHistogram:
    def test_span_of_a_few_ulps(self, narrow_tree):
        result = simulate(SimulationSpec(narrow_tree, samples=1000, seed=7, mode=BRANCH))
        assert sum(bucket.count for bucket in result.histogram) == 1000
        assert len(result.histogram) == 1
        assert result.histogram[0].lower == 0.3

    def test_narrow_span_uses_one_bucket(self):
        lo = 1000.0
        values = np.array([lo, np.nextafter(lo, 2000.0), lo])
        buckets = histogram(values, buckets=50)
        assert len(buckets) == 1
        assert buckets[0].lower == lo
        assert buckets[0].count == 3

    def test_identical_values(self):
        buckets = histogram(np.full(10, 42.0))
        assert [(b.lower, b.width, b.count) for b in buckets] == [(42.0, 0.0, 10)]

    def test_counts_sum_to_samples(self, uniform_option_model):
        result = simulate(SimulationSpec(uniform_option_model, samples=10_000, seed=8))
        assert len(result.histogram) == 50
        assert sum(bucket.count for bucket in result.histogram) == 10_000
        widths = {bucket.width for bucket in result.histogram}
        assert len(widths) == 1

    def test_csv(self, uniform_option_model):
        result = simulate(SimulationSpec(uniform_option_model, samples=2000, seed=8, histogram_buckets=10))
        lines = histogram_csv(result).splitlines()
        assert lines[0] == ",".join(HISTOGRAM_HEADER)
        assert len(lines) == 11
        assert sum(int(line.rsplit(",", 1)[1]) for line in lines[1:]) == 2000


def test_identical_results_have_zero_differences(gauss_option_model):
    result = simulate(SimulationSpec(gauss_option_model, samples=1000, seed=6))
    comparison = compare(result, result)
    assert all(value == 0.0 for value in comparison.differences.values())
    assert comparison.verdict == "Projects are equally attractive"


def _result(pv_alpha):
    return SimulationResult(sample_mean=pv_alpha + 100.0, sample_sd=60.0, pv_alpha=pv_alpha, pvar=100.0,
                            histogram=(), samples=10, seed=0, alpha=0.05, mode=BRANCH)


def test_comparison_feasibility_counts_ties():
    comparison = SimulationComparison(option=_result(5000.0), basic=_result(4999.5), investment=5000.0)
    assert comparison.option_feasible is True
    assert comparison.basic_feasible is False
    assert SimulationComparison(option=_result(5000.0), basic=_result(5000.0)).option_feasible is None
