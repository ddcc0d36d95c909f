"""Data models shared across realopt.

This module contains the enums and result dataclasses passed between the
valuation engines, the scenario loader and the command-line front end.
Input models (distributions, trees, projects) live in src.tree_model and
src.brcf_gaussian.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple


class DistributionKind(Enum):
    """How a single-period cash flow is specified."""
    DETERMINISTIC = "deterministic"
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"


class QuantileMode(Enum):
    """How the z multiplier of PV_alpha is obtained.

    EXACT uses the full-precision inverse normal CDF. PAPER truncates the
    exact value to two decimals, which gives the classic 1.64 at alpha 0.05.
    """
    EXACT = "exact"
    PAPER = "paper"

    @classmethod
    def parse(cls, value: str) -> "QuantileMode":
        """Accept 'exact', 'paper' or 'paper_compat'."""
        if value == "paper_compat":
            return cls.PAPER
        return cls(value)


class SimulationMode(Enum):
    """Monte Carlo evaluation mode.

    EXPECTATION_FORM samples the inputs of the averaged value functional
    (p and g enter as constants). BRANCH_SAMPLING draws the option branch
    itself on every replication.
    """
    EXPECTATION_FORM = "expectation_form"
    BRANCH_SAMPLING = "branch_sampling"


class ScenarioKind(Enum):
    """Body type of a scenario document."""
    TWO_SCENARIO = "two_scenario"
    OPTION_TREE = "option_tree"
    BRCF_ONE_STAGE = "brcf_one_stage"


class OptionClass(Enum):
    """Descriptive real-option tag carried in scenario metadata."""
    EXPANSION = "expansion"
    REDUCTION = "reduction"
    SWITCHING = "switching"
    ABANDONMENT = "abandonment"
    DEFERRAL = "deferral"
    STAGING = "staging"
    GROWTH = "growth"
    OTHER = "other"


# Node paths are 1-indexed branch tuples: (i,), (i, j) or (i, j, l)
NodePath = Tuple[int, ...]


def format_path(path: NodePath) -> str:
    """Render a node path the way reports and validation messages do."""
    return "".join(f"[{index}]" for index in path)


def feasibility(pv_alpha_value: float, investment: float) -> bool:
    """True when PV_alpha covers the initial investment; a tie is feasible."""
    return pv_alpha_value >= investment


@dataclass(frozen=True)
class ValuationResult:
    """Deterministic project valuation.

    Attributes:
        v0: Project value at t = 0 ($K)
        npv: v0 minus the initial investment ($K)
        initial_investment: I0 used for npv ($K)
        node_values: Node path -> node value. For option trees these are
            V1 (i,), V2 (i, j) and V3 (i, j, l) in their rollback form, each
            including its own period's cash flow. For two-scenario projects
            the (i,) entries are V1 + CF1 at time 1.
    """
    v0: float
    npv: float
    initial_investment: float
    node_values: Dict[NodePath, float] = field(default_factory=dict)


@dataclass(frozen=True)
class RiskReport:
    """Analytic risk metrics of a Gaussian project value.

    Invariants: pvar = z * sd and pv_alpha = mean - pvar, both computed
    exactly that way, so pvar >= 0 whenever sd >= 0.
    """
    mean: float
    sd: float
    alpha: float
    quantile_mode: QuantileMode
    z: float
    pvar: float
    pv_alpha: float
    investment: Optional[float] = None

    @property
    def feasible(self) -> Optional[bool]:
        """pv_alpha >= investment (ties feasible); None without an investment."""
        if self.investment is None:
            return None
        return feasibility(self.pv_alpha, self.investment)

    @property
    def safety_margin(self) -> Optional[float]:
        """How far pv_alpha clears the investment ($K)."""
        if self.investment is None:
            return None
        return self.pv_alpha - self.investment

    def to_dict(self) -> dict:
        """Convert to dictionary for serialization."""
        return {
            "mean": self.mean,
            "sd": self.sd,
            "alpha": self.alpha,
            "quantile_mode": self.quantile_mode.value,
            "z": self.z,
            "pvar": self.pvar,
            "pv_alpha": self.pv_alpha,
            "investment": self.investment,
            "feasible": self.feasible,
        }


@dataclass(frozen=True)
class HistogramBucket:
    """One equal-width histogram bucket of simulated project values."""
    lower: float
    width: float
    count: int


@dataclass(frozen=True)
class SimulationResult:
    """Summary statistics of one Monte Carlo run.

    Attributes:
        sample_mean: Mean of the simulated project values ($K)
        sample_sd: Unbiased standard deviation (divisor M - 1)
        pv_alpha: Empirical alpha-quantile of the sample
        pvar: sample_mean - pv_alpha
        histogram: Buckets whose counts sum to samples
        samples: Number of replications M
        seed: Seed the run was keyed with
        alpha: Quantile level used for pv_alpha
        mode: Simulation mode that produced the sample
    """
    sample_mean: float
    sample_sd: float
    pv_alpha: float
    pvar: float
    histogram: Tuple[HistogramBucket, ...]
    samples: int
    seed: int
    alpha: float
    mode: SimulationMode
