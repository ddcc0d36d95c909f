"""Shared fixtures: bundled scenarios and hand-built models."""

from pathlib import Path

import pytest

from src.scenario_io import load
from src.tree_model import (
    BranchControl,
    CashFlowDist,
    FirstStageBranch,
    OptionTree,
    SecondStageBranch,
    TerminalBranch,
)

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

BUNDLED = [
    "base_two_scenario",
    "reduction_option",
    "switching_option",
    "gauss_base",
    "gauss_option",
    "uniform_base",
    "uniform_option",
]


def scenario_path(name: str) -> Path:
    return SCENARIOS / f"{name}.yaml"


@pytest.fixture
def base_project():
    return load(scenario_path("base_two_scenario")).body


@pytest.fixture
def reduction_tree():
    return load(scenario_path("reduction_option")).body


@pytest.fixture
def switching_tree():
    return load(scenario_path("switching_option")).body


@pytest.fixture
def gauss_base_model():
    return load(scenario_path("gauss_base")).body


@pytest.fixture
def gauss_option_model():
    return load(scenario_path("gauss_option")).body


@pytest.fixture
def uniform_base_model():
    return load(scenario_path("uniform_base")).body


@pytest.fixture
def uniform_option_model():
    return load(scenario_path("uniform_option")).body


@pytest.fixture
def gaussian_flows():
    """Four Gaussian flows given by mean and coefficient of variation."""
    return [
        CashFlowDist.gaussian(2000, cv=0.10),
        CashFlowDist.gaussian(2100, cv=0.12),
        CashFlowDist.gaussian(2200, cv=0.14),
        CashFlowDist.gaussian(2300, cv=0.16),
    ]


@pytest.fixture
def narrow_tree():
    """Two live values, 0.1 + 0.2 and 0.3, that differ in the last bit only."""
    zero = CashFlowDist.deterministic(0.0)

    def first(cash_flow, delta):
        leaves = [TerminalBranch(0.5, [zero]), TerminalBranch(0.5, [zero])]
        second = [SecondStageBranch(BranchControl(0.5), zero, leaves) for _ in range(2)]
        return FirstStageBranch(BranchControl(0.5, CashFlowDist.deterministic(delta)),
                                CashFlowDist.deterministic(cash_flow), second)

    return OptionTree(initial_investment=0.0, rate=0.0, horizon=3, stage1=[first(0.1, 0.2), first(0.3, 0.0)])
