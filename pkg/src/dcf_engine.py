"""Deterministic DCF valuation.

Implements:
- Plain present value of a flow vector
- Two-scenario project value (expected value of the scenario PVs)
- Rollback of the two-active-stage option tree, leaves to root:

    V3(ijl) = sum_{k=3..n} CF_k / (1+r)^(k-3)
    V2(ij)  = (CF2 + delta2) + sum_l p3 * V3 / (1+r)
    V1(i)   = (CF1 + delta1) + sum_j p2 * V2 / (1+r)
    V0      = sum_i p1 * V1 / (1+r)

- The same V0 as a single expanded summation (closed form)
- Option value as a difference of NPVs

All arithmetic is full precision; rounding to whole $K happens only in
src.reporting.

Usage:
    from src.dcf_engine import rollback, closed_form_value

    result = rollback(tree)
    print(result.v0, result.npv)
"""

import logging
import math
from typing import Dict, Sequence

from src.models import NodePath, ValuationResult, format_path
from src.tree_model import (
    CashFlowDist,
    OptionTree,
    TwoScenarioProject,
    require_valid_project,
    require_valid_tree,
)

logger = logging.getLogger(__name__)


class DomainError(ValueError):
    """Math domain error, e.g. a discount rate <= -1."""


class UnresolvedDistributionError(ValueError):
    """A random distribution reached a deterministic engine without use_means."""


def _check_rate(rate: float) -> None:
    if not (math.isfinite(rate) and rate > -1):
        raise DomainError(f"Discount rate must be > -1, got {rate}")


def present_value(flows: Sequence[float], rate: float) -> float:
    """Discount flows for periods k = 1..n to t = 0.

    Args:
        flows: Cash flows ($K), first element at k = 1
        rate: Per-period discount rate (decimal)

    Returns:
        sum flows_k / (1+rate)^k; an empty vector is worth 0

    Raises:
        DomainError: If rate <= -1
    """
    _check_rate(rate)
    return math.fsum(cf / (1 + rate) ** k for k, cf in enumerate(flows, start=1))


def two_scenario_value(project: TwoScenarioProject) -> ValuationResult:
    """Expected value of the two scenarios.

    V0 = sum_i p(i) * PV(scenario i). node_values[(i,)] holds the time-1
    value V1(i) + CF1(i), where V1(i) discounts k = 2..n to t = 1; V0 is
    the same number as sum_i p(i) * (V1(i) + CF1(i)) / (1+r).
    """
    require_valid_project(project)
    _check_rate(project.rate)

    v0 = math.fsum(s.probability * present_value(s.cash_flows, project.rate) for s in project.scenarios)

    node_values: Dict[NodePath, float] = {}
    for i, scenario in enumerate(project.scenarios, start=1):
        flows = scenario.cash_flows
        v1 = math.fsum(cf / (1 + project.rate) ** (k - 1) for k, cf in enumerate(flows[1:], start=2))
        node_values[(i,)] = v1 + flows[0]

    logger.debug(f"Two-scenario value V0={v0:.4f}")
    return ValuationResult(
        v0=v0,
        npv=v0 - project.investment,
        initial_investment=project.investment,
        node_values=node_values,
    )


def _resolve(dist: CashFlowDist, use_means: bool) -> float:
    if dist.is_random and not use_means:
        raise UnresolvedDistributionError(
            f"Random {dist.kind.value} cash flow in a deterministic valuation; "
            "pass use_means=True to value the expected flows or run a simulation"
        )
    return dist.expected


def rollback(tree: OptionTree, use_means: bool = False) -> ValuationResult:
    """Value an option tree by backward induction from the leaves.

    Args:
        tree: Valid option tree
        use_means: Replace random distributions by their expected values.
            Without it, any random distribution is rejected.

    Returns:
        ValuationResult with V1 (i,), V2 (i, j) and V3 (i, j, l) node values

    Raises:
        ModelValidationError: If the tree is invalid
        UnresolvedDistributionError: If a random flow is found and use_means is False
    """
    require_valid_tree(tree)
    discount = 1 + tree.rate
    node_values: Dict[NodePath, float] = {}

    v0_terms = []
    for i, first in enumerate(tree.stage1, start=1):
        stage2_terms = []
        for j, second in enumerate(first.branches, start=1):
            stage3_terms = []
            for l, leaf in enumerate(second.terminals, start=1):
                v3 = math.fsum(
                    _resolve(cf, use_means) / discount ** offset
                    for offset, cf in enumerate(leaf.cash_flows)
                )
                node_values[(i, j, l)] = v3
                stage3_terms.append(leaf.p * v3)
            v2 = (
                _resolve(second.cash_flow, use_means)
                + _resolve(second.control.delta, use_means)
                + math.fsum(stage3_terms) / discount
            )
            node_values[(i, j)] = v2
            stage2_terms.append(second.control.p * v2)
        v1 = (
            _resolve(first.cash_flow, use_means)
            + _resolve(first.control.delta, use_means)
            + math.fsum(stage2_terms) / discount
        )
        node_values[(i,)] = v1
        v0_terms.append(first.control.p * v1)

    v0 = math.fsum(v0_terms) / discount
    for path in sorted(node_values):
        logger.debug(f"V{len(path)}{format_path(path)} = {node_values[path]:.4f}")

    return ValuationResult(
        v0=v0,
        npv=v0 - tree.initial_investment,
        initial_investment=tree.initial_investment,
        node_values=node_values,
    )


def closed_form_value(tree: OptionTree, use_means: bool = False) -> float:
    """V0 as one expanded summation over periods and paths.

    V0 = sum_i p1 (CF1+d1)/(1+r)
       + sum_i sum_j p1 p2 (CF2+d2)/(1+r)^2
       + sum_i sum_j sum_l sum_{k>=3} p1 p2 p3 CF_k/(1+r)^k

    Raises:
        As rollback()
    """
    require_valid_tree(tree)
    discount = 1 + tree.rate
    terms = []
    for first in tree.stage1:
        p1 = first.control.p
        terms.append(
            p1 * (_resolve(first.cash_flow, use_means) + _resolve(first.control.delta, use_means)) / discount
        )
        for second in first.branches:
            p12 = p1 * second.control.p
            terms.append(
                p12 * (_resolve(second.cash_flow, use_means) + _resolve(second.control.delta, use_means))
                / discount ** 2
            )
            for leaf in second.terminals:
                p123 = p12 * leaf.p
                for k, cf in enumerate(leaf.cash_flows, start=3):
                    terms.append(p123 * _resolve(cf, use_means) / discount ** k)
    return math.fsum(terms)


def continuation_value(result: ValuationResult, path: NodePath, rate: float) -> float:
    """Node value discounted one period back, V(path) / (1+r).

    For a stage-3 path this is the discounted continuation that enters the
    stage-2 node above it.
    """
    _check_rate(rate)
    if path not in result.node_values:
        raise KeyError(f"No node value for path {format_path(path)}")
    return result.node_values[path] / (1 + rate)


def option_value(npv_with: float, npv_without: float) -> float:
    """Value of the option: NPV with the option minus NPV without it."""
    return npv_with - npv_without
