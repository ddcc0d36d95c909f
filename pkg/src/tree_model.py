"""Decision-tree data model for real-option valuation.

Defines the cash-flow distributions, the branch control variables (p, delta)
and the two-active-stage binomial tree:

    t=0 --p1(i)--> stage 1 (i) --p2(ij)--> stage 2 (i,j) --p3(ijl)--> stage 3 (i,j,l)
                   CF1 + delta1            CF2 + delta2               CF3..CFn

plus the plain two-scenario project. Validation never raises: it collects
every violated invariant into a ValidationReport with a path per violation,
e.g. "stage2[2][1].p". Operations that need a valid model raise
ModelValidationError carrying that report.

Usage:
    from src.tree_model import CashFlowDist, validate_tree, path_probabilities

    report = validate_tree(tree)
    if report.is_valid:
        for path, probability in path_probabilities(tree):
            ...
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple

from src.models import DistributionKind

logger = logging.getLogger(__name__)

# Sibling probabilities must sum to 1 within this tolerance
PROBABILITY_TOLERANCE = 1e-12

# Two active stages plus at least one terminal period
MIN_HORIZON = 3

BRANCHES_PER_NODE = 2


def _finite(*values: float) -> bool:
    return all(math.isfinite(v) for v in values)


@dataclass(frozen=True)
class CashFlowDist:
    """A single-period cash flow ($K): fixed, Gaussian or uniform.

    Build instances with the deterministic(), gaussian() and uniform()
    constructors. Only the fields of the chosen kind are meaningful.

    Attributes:
        kind: Distribution kind
        value: Deterministic value
        mean: Gaussian mean
        sd: Gaussian standard deviation (>= 0)
        cv: Coefficient of variation the sd was derived from, if any
        lo: Uniform lower bound
        hi: Uniform upper bound (>= lo)
    """
    kind: DistributionKind = DistributionKind.DETERMINISTIC
    value: float = 0.0
    mean: float = 0.0
    sd: float = 0.0
    cv: Optional[float] = None
    lo: float = 0.0
    hi: float = 0.0

    def __post_init__(self):
        """Validate distribution parameters."""
        if not _finite(self.value, self.mean, self.sd, self.lo, self.hi):
            raise ValueError(f"Distribution parameters must be finite: {self}")
        if self.sd < 0:
            raise ValueError(f"Gaussian sd must be >= 0, got {self.sd}")
        if self.cv is not None and (not math.isfinite(self.cv) or self.cv < 0):
            raise ValueError(f"Coefficient of variation must be >= 0, got {self.cv}")
        if self.lo > self.hi:
            raise ValueError(f"Uniform bounds must satisfy lo <= hi, got lo={self.lo}, hi={self.hi}")

    @classmethod
    def deterministic(cls, value: float) -> "CashFlowDist":
        return cls(kind=DistributionKind.DETERMINISTIC, value=float(value))

    @classmethod
    def gaussian(
        cls,
        mean: float,
        sd: Optional[float] = None,
        cv: Optional[float] = None,
    ) -> "CashFlowDist":
        """Gaussian flow given either sd or a coefficient of variation.

        When only cv is given, sd = |mean| * cv. When both are given, sd wins
        and cv is kept as a record of how the flow was specified.
        """
        if sd is None:
            sd = abs(mean) * cv if cv is not None else 0.0
        return cls(
            kind=DistributionKind.GAUSSIAN,
            mean=float(mean),
            sd=float(sd),
            cv=float(cv) if cv is not None else None,
        )

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "CashFlowDist":
        return cls(kind=DistributionKind.UNIFORM, lo=float(lo), hi=float(hi))

    @property
    def is_random(self) -> bool:
        """False for deterministic flows and zero-width distributions."""
        if self.kind == DistributionKind.GAUSSIAN:
            return self.sd > 0
        if self.kind == DistributionKind.UNIFORM:
            return self.hi > self.lo
        return False

    @property
    def expected(self) -> float:
        """Expected value ($K)."""
        if self.kind == DistributionKind.GAUSSIAN:
            return self.mean
        if self.kind == DistributionKind.UNIFORM:
            return (self.lo + self.hi) / 2
        return self.value

    @property
    def variance(self) -> float:
        if self.kind == DistributionKind.GAUSSIAN:
            return self.sd ** 2
        if self.kind == DistributionKind.UNIFORM:
            return (self.hi - self.lo) ** 2 / 12
        return 0.0


ZERO_FLOW = CashFlowDist.deterministic(0.0)


@dataclass(frozen=True)
class BranchControl:
    """Control variables of one option branch.

    Attributes:
        p: Probability that this branch materializes, in [0, 1]
        delta: Additional cash flow the branch triggers; a negative mean is
            an investment (outflow), positive an inflow, zero no action
    """
    p: float
    delta: CashFlowDist = ZERO_FLOW


@dataclass(frozen=True)
class TerminalBranch:
    """Stage-3 leaf carrying the cash flows for periods 3..n."""
    p: float
    cash_flows: Tuple[CashFlowDist, ...]

    def __post_init__(self):
        object.__setattr__(self, "cash_flows", tuple(self.cash_flows))


@dataclass(frozen=True)
class SecondStageBranch:
    """Stage-2 node (i, j): period-2 cash flow, delta2 and its leaves."""
    control: BranchControl
    cash_flow: CashFlowDist
    terminals: Tuple[TerminalBranch, ...]

    def __post_init__(self):
        object.__setattr__(self, "terminals", tuple(self.terminals))


@dataclass(frozen=True)
class FirstStageBranch:
    """Stage-1 node (i): period-1 cash flow, delta1 and its stage-2 branches."""
    control: BranchControl
    cash_flow: CashFlowDist
    branches: Tuple[SecondStageBranch, ...]

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(self.branches))


@dataclass(frozen=True)
class OptionTree:
    """Two-active-stage binomial decision tree.

    Attributes:
        initial_investment: I0 at t = 0 ($K, >= 0)
        rate: Per-period discount rate (decimal, > -1)
        horizon: Number of periods n (>= 3)
        stage1: The two stage-1 branches, each holding its subtree
    """
    initial_investment: float
    rate: float
    horizon: int
    stage1: Tuple[FirstStageBranch, ...]

    def __post_init__(self):
        object.__setattr__(self, "stage1", tuple(self.stage1))

    def node(self, *path: int):
        """Return the branch at a 1-indexed path (i,), (i, j) or (i, j, l)."""
        if not 1 <= len(path) <= 3:
            raise ValueError(f"Node path must have 1-3 indices, got {path}")
        node = self.stage1[path[0] - 1]
        if len(path) >= 2:
            node = node.branches[path[1] - 1]
        if len(path) == 3:
            node = node.terminals[path[2] - 1]
        return node

    def iter_paths(self) -> Iterator[Tuple[Tuple[int, int, int], FirstStageBranch, SecondStageBranch, TerminalBranch]]:
        """Yield ((i, j, l), stage-1 branch, stage-2 branch, leaf) for every path."""
        for i, first in enumerate(self.stage1, start=1):
            for j, second in enumerate(first.branches, start=1):
                for l, leaf in enumerate(second.terminals, start=1):
                    yield (i, j, l), first, second, leaf

    def distributions(self) -> Iterator[CashFlowDist]:
        """Every cash-flow distribution in the tree, deltas included."""
        for first in self.stage1:
            yield first.cash_flow
            yield first.control.delta
            for second in first.branches:
                yield second.cash_flow
                yield second.control.delta
                for leaf in second.terminals:
                    yield from leaf.cash_flows


@dataclass(frozen=True)
class Scenario:
    """One scenario of a two-scenario project: probability and flows k = 1..n."""
    probability: float
    cash_flows: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "cash_flows", tuple(float(cf) for cf in self.cash_flows))


@dataclass(frozen=True)
class TwoScenarioProject:
    """Plain DCF project with two probability-weighted scenarios."""
    investment: float
    rate: float
    scenarios: Tuple[Scenario, ...]

    def __post_init__(self):
        object.__setattr__(self, "scenarios", tuple(self.scenarios))

    @property
    def horizon(self) -> int:
        return len(self.scenarios[0].cash_flows) if self.scenarios else 0


# ==================== Validation ====================

@dataclass(frozen=True)
class Violation:
    """A single violated invariant."""
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


@dataclass
class ValidationReport:
    """Every violation found in a model; empty means valid."""
    violations: List[Violation] = field(default_factory=list)

    @property
    def is_valid(self) -> bool:
        return not self.violations

    @property
    def paths(self) -> List[str]:
        return [v.path for v in self.violations]

    def add(self, path: str, message: str) -> None:
        self.violations.append(Violation(path, message))

    def __len__(self) -> int:
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)

    def __str__(self) -> str:
        if not self.violations:
            return "valid"
        return "\n".join(str(v) for v in self.violations)


class ModelValidationError(ValueError):
    """Raised when an operation requires a valid model and gets an invalid one."""

    def __init__(self, report: ValidationReport, what: str = "model"):
        self.report = report
        super().__init__(f"Invalid {what}:\n  " + "\n  ".join(str(v) for v in report))


def _check_probability(report: ValidationReport, path: str, p: float) -> None:
    if not (0.0 <= p <= 1.0):
        report.add(path, f"probability must be in [0, 1], got {p}")


def _check_siblings(report: ValidationReport, path: str, probabilities: Sequence[float]) -> None:
    total = sum(probabilities)
    if not abs(total - 1.0) <= PROBABILITY_TOLERANCE:
        report.add(path, f"sibling probabilities sum to {total:.15g}, expected 1")


def _check_arity(report: ValidationReport, path: str, branches: Sequence) -> bool:
    if len(branches) != BRANCHES_PER_NODE:
        report.add(path, f"expected {BRANCHES_PER_NODE} branches, got {len(branches)}")
        return False
    return True


def validate_tree(tree: OptionTree) -> ValidationReport:
    """Check every OptionTree invariant and report all violations.

    Args:
        tree: Tree to check

    Returns:
        ValidationReport; empty when the tree is valid
    """
    report = ValidationReport()

    if not (math.isfinite(tree.initial_investment) and tree.initial_investment >= 0):
        report.add("initial_investment", f"must be a finite value >= 0, got {tree.initial_investment}")
    if not (math.isfinite(tree.rate) and tree.rate > -1):
        report.add("rate", f"discount rate must be > -1, got {tree.rate}")
    if isinstance(tree.horizon, bool) or not isinstance(tree.horizon, int) or tree.horizon < MIN_HORIZON:
        report.add("horizon", f"must be an integer >= {MIN_HORIZON}, got {tree.horizon}")
        terminal_length = None
    else:
        terminal_length = tree.horizon - 2

    if not _check_arity(report, "stage1", tree.stage1):
        return report

    for i, first in enumerate(tree.stage1, start=1):
        _check_probability(report, f"stage1[{i}].p", first.control.p)
        if not _check_arity(report, f"stage2[{i}]", first.branches):
            continue
        for j, second in enumerate(first.branches, start=1):
            _check_probability(report, f"stage2[{i}][{j}].p", second.control.p)
            if not _check_arity(report, f"stage3[{i}][{j}]", second.terminals):
                continue
            for l, leaf in enumerate(second.terminals, start=1):
                _check_probability(report, f"stage3[{i}][{j}][{l}].p", leaf.p)
                if terminal_length is not None and len(leaf.cash_flows) != terminal_length:
                    report.add(
                        f"stage3[{i}][{j}][{l}].cash_flows",
                        f"expected {terminal_length} flows (k = 3..{tree.horizon}), got {len(leaf.cash_flows)}",
                    )
            _check_siblings(report, f"stage3[{i}][{j}].p", [leaf.p for leaf in second.terminals])
        _check_siblings(report, f"stage2[{i}].p", [b.control.p for b in first.branches])
    _check_siblings(report, "stage1.p", [b.control.p for b in tree.stage1])

    if report.violations:
        logger.debug(f"Tree validation found {len(report)} violation(s)")
    return report


def validate_project(project: TwoScenarioProject) -> ValidationReport:
    """Check TwoScenarioProject invariants."""
    report = ValidationReport()
    if not (math.isfinite(project.investment) and project.investment >= 0):
        report.add("investment", f"must be a finite value >= 0, got {project.investment}")
    if not (math.isfinite(project.rate) and project.rate > -1):
        report.add("rate", f"discount rate must be > -1, got {project.rate}")
    if not _check_arity(report, "scenarios", project.scenarios):
        return report

    for i, scenario in enumerate(project.scenarios, start=1):
        _check_probability(report, f"scenarios[{i}].probability", scenario.probability)
        if not scenario.cash_flows:
            report.add(f"scenarios[{i}].cash_flows", "at least one cash flow is required")
        if not _finite(*scenario.cash_flows):
            report.add(f"scenarios[{i}].cash_flows", "cash flows must be finite")
    _check_siblings(report, "scenarios.probability", [s.probability for s in project.scenarios])

    lengths = {len(s.cash_flows) for s in project.scenarios}
    if len(lengths) > 1:
        report.add("scenarios.cash_flows", f"scenarios must share one horizon, got lengths {sorted(lengths)}")
    return report


def require_valid_tree(tree: OptionTree) -> None:
    """Raise ModelValidationError unless the tree is valid."""
    report = validate_tree(tree)
    if not report.is_valid:
        raise ModelValidationError(report, "option tree")


def require_valid_project(project: TwoScenarioProject) -> None:
    report = validate_project(project)
    if not report.is_valid:
        raise ModelValidationError(report, "two-scenario project")


# ==================== Operations ====================

def path_probabilities(tree: OptionTree) -> List[Tuple[Tuple[int, int, int], float]]:
    """Probability of each of the 8 root-to-leaf paths.

    Each probability is the product p1(i) * p2(ij) * p3(ijl).

    Raises:
        ModelValidationError: If the tree is invalid
    """
    require_valid_tree(tree)
    return [
        (path, first.control.p * second.control.p * leaf.p)
        for path, first, second, leaf in tree.iter_paths()
    ]


def tree_from_scenarios(project: TwoScenarioProject) -> OptionTree:
    """Express a two-scenario project as a degenerate option tree.

    Stage-2 and stage-3 probabilities are {1, 0} and every delta is zero, so
    each stage-1 branch carries exactly one live path with that scenario's
    flows.

    Raises:
        ModelValidationError: If the project is invalid or shorter than 3 periods
    """
    require_valid_project(project)
    if project.horizon < MIN_HORIZON:
        report = ValidationReport()
        report.add("scenarios.cash_flows", f"a tree needs at least {MIN_HORIZON} periods, got {project.horizon}")
        raise ModelValidationError(report, "two-scenario project")

    stage1 = []
    for scenario in project.scenarios:
        flows = [CashFlowDist.deterministic(cf) for cf in scenario.cash_flows]
        terminals = (TerminalBranch(1.0, flows[2:]), TerminalBranch(0.0, flows[2:]))
        second = tuple(
            SecondStageBranch(BranchControl(p), flows[1], terminals) for p in (1.0, 0.0)
        )
        stage1.append(FirstStageBranch(BranchControl(scenario.probability), flows[0], second))

    return OptionTree(
        initial_investment=project.investment,
        rate=project.rate,
        horizon=project.horizon,
        stage1=tuple(stage1),
    )
