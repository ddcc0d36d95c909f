"""Analytic Binomial-Random-Cash-Flow (BRCF) engine for Gaussian flows.

Covers the one-stage option structure: at t = 1 the project either stays
on its base forecast (probability 1 - p) or exercises an option that costs
I1 and grows every later flow by g (probability p).

    V_B = sum_{k=1..n} CF_k / (1+r)^(k-1)
    V_O = -I1 + CF1 + sum_{k=2..n} CF_k (1+g) / (1+r)^(k-1)
    V   = (p V_O + (1-p) V_B) / (1+r)
        = (CF1 - p I1) / (1+r) + sum_{k>=2} CF_k (1 + p g) / (1+r)^k

V is linear in independent Gaussian inputs, so it is Gaussian and its
mean and standard deviation follow in closed form. PV_alpha is the lower
(1 - alpha) confidence bound m - z sd and PVaR = z sd is the potential
loss at that level.

Usage:
    from src.brcf_gaussian import option_moments, pv_alpha

    mean, sd = option_moments(model)
    report = pv_alpha(mean, sd, 0.05, QuantileMode.PAPER, investment=5000)
    print(report.pv_alpha, report.feasible)
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from src.dcf_engine import DomainError
from src.models import DistributionKind, QuantileMode, RiskReport, feasibility  # noqa: F401
from src.stats import check_alpha, upper_quantile
from src.tree_model import (
    CashFlowDist,
    ModelValidationError,
    ValidationReport,
    ZERO_FLOW,
)

logger = logging.getLogger(__name__)

Number = Union[float, np.ndarray]


class NonGaussianError(ValueError):
    """A non-Gaussian distribution reached the analytic engine."""


@dataclass(frozen=True)
class BrcfOneStageModel:
    """One-stage option on a forecast of independent cash flows.

    Attributes:
        base_flows: Cash flows for k = 1..n ($K)
        rate: Per-period discount rate (decimal, > -1)
        option_probability: p, probability the option is exercised
        additional_investment: I1, entered as a positive magnitude and
            applied as an outflow at k = 1
        growth: g, growth applied to flows k >= 2 under the option (> -1)
        investment: Optional I0 ($K) the project is judged against
    """
    base_flows: Tuple[CashFlowDist, ...]
    rate: float
    option_probability: float = 0.0
    additional_investment: CashFlowDist = ZERO_FLOW
    growth: float = 0.0
    investment: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "base_flows", tuple(self.base_flows))

    @property
    def horizon(self) -> int:
        return len(self.base_flows)

    def distributions(self):
        yield from self.base_flows
        yield self.additional_investment


@dataclass(frozen=True)
class OptionAssessment:
    """Side-by-side judgement of a project with and without its option."""
    basic: RiskReport
    option: RiskReport
    option_value: float

    @property
    def attractive(self) -> bool:
        """The option raises the lower confidence bound of project value."""
        return self.option.pv_alpha > self.basic.pv_alpha

    @property
    def verdict(self) -> str:
        if self.attractive:
            return "Real Option project looks more attractive"
        if self.option.pv_alpha == self.basic.pv_alpha:
            return "Projects are equally attractive"
        return "Basic project looks more attractive"

    def to_dict(self) -> dict:
        return {
            "basic": self.basic.to_dict(),
            "option": self.option.to_dict(),
            "option_value": self.option_value,
            "attractive": self.attractive,
        }


def validate_model(model: BrcfOneStageModel) -> ValidationReport:
    """Check BrcfOneStageModel invariants and report every violation."""
    report = ValidationReport()
    if not model.base_flows:
        report.add("base_flows", "at least one cash flow is required")
    if not (math.isfinite(model.rate) and model.rate > -1):
        report.add("rate", f"discount rate must be > -1, got {model.rate}")
    if not (0.0 <= model.option_probability <= 1.0):
        report.add("option_probability", f"probability must be in [0, 1], got {model.option_probability}")
    if not (math.isfinite(model.growth) and model.growth > -1):
        report.add("growth", f"growth must be > -1, got {model.growth}")
    if model.investment is not None and not (math.isfinite(model.investment) and model.investment >= 0):
        report.add("investment", f"must be a finite value >= 0, got {model.investment}")
    return report


def require_valid_model(model: BrcfOneStageModel) -> None:
    report = validate_model(model)
    if not report.is_valid:
        raise ModelValidationError(report, "BRCF model")


def _gaussian_moments(dist: CashFlowDist, what: str) -> Tuple[float, float]:
    """(mean, variance) of a Gaussian or deterministic flow."""
    if dist.kind == DistributionKind.UNIFORM:
        raise NonGaussianError(
            f"{what} is uniform; the analytic engine handles Gaussian flows only, "
            "use a Monte Carlo simulation instead"
        )
    return dist.expected, dist.variance


def pv_moments(flows: Sequence[CashFlowDist], rate: float) -> Tuple[float, float]:
    """Mean and standard deviation of the present value of independent flows.

    Args:
        flows: Gaussian (or deterministic) flows for k = 1..n
        rate: Per-period discount rate

    Returns:
        (m_PV, sd_PV) with m_PV = sum m_k/(1+r)^k and
        sd_PV^2 = sum sd_k^2/(1+r)^(2k)

    Raises:
        DomainError: If rate <= -1
        NonGaussianError: If any flow is uniform
    """
    if not (math.isfinite(rate) and rate > -1):
        raise DomainError(f"Discount rate must be > -1, got {rate}")

    discount = 1 + rate
    means, variances = [], []
    for k, dist in enumerate(flows, start=1):
        mean, variance = _gaussian_moments(dist, f"cash flow k={k}")
        means.append(mean / discount ** k)
        variances.append(variance / discount ** (2 * k))
    return math.fsum(means), math.sqrt(math.fsum(variances))


def option_moments(model: BrcfOneStageModel) -> Tuple[float, float]:
    """Mean and standard deviation of V for the one-stage option model.

    With p = 0, or with g = 0 and I1 identically 0, the result equals
    pv_moments(model.base_flows, model.rate) exactly.

    Raises:
        ModelValidationError: If the model is invalid
        NonGaussianError: If any flow or I1 is uniform
    """
    require_valid_model(model)
    p, g = model.option_probability, model.growth
    discount = 1 + model.rate
    scale = 1 + p * g

    i1_mean, i1_var = _gaussian_moments(model.additional_investment, "additional_investment")
    first = model.base_flows[0]
    cf1_mean, cf1_var = _gaussian_moments(first, "cash flow k=1")

    means = [(p * -i1_mean + cf1_mean) / discount ** 1]
    variances = [(p ** 2 * i1_var + cf1_var) / discount ** 2]
    for k, dist in enumerate(model.base_flows[1:], start=2):
        mean, variance = _gaussian_moments(dist, f"cash flow k={k}")
        means.append(mean * scale / discount ** k)
        variances.append(variance * scale ** 2 / discount ** (2 * k))

    m_v, sd_v = math.fsum(means), math.sqrt(math.fsum(variances))
    logger.debug(f"Option moments: p={p} g={g} -> mean={m_v:.4f} sd={sd_v:.4f}")
    return m_v, sd_v


def pv_alpha(
    mean: float,
    sd: float,
    alpha: float = 0.05,
    mode: QuantileMode = QuantileMode.EXACT,
    investment: Optional[float] = None,
) -> RiskReport:
    """Lower confidence bound of a Gaussian project value.

    Args:
        mean: m_PV ($K)
        sd: sd_PV ($K, >= 0)
        alpha: Upper-tail level in (0, 0.5]
        mode: EXACT for the full-precision z, PAPER for z truncated to
            two decimals (1.64 at 0.05)
        investment: Optional I0 for the feasibility verdict

    Returns:
        RiskReport with pvar = z * sd and pv_alpha = mean - pvar

    Raises:
        ValueError: If alpha is outside (0, 0.5] or sd < 0
    """
    check_alpha(alpha)
    if not sd >= 0:
        raise ValueError(f"Standard deviation must be >= 0, got {sd}")
    z = upper_quantile(alpha, mode)
    pvar = z * sd
    return RiskReport(
        mean=mean,
        sd=sd,
        alpha=alpha,
        quantile_mode=mode,
        z=z,
        pvar=pvar,
        pv_alpha=mean - pvar,
        investment=investment,
    )


def brcf_option_value(report_with: RiskReport, report_without: RiskReport) -> float:
    """Option value as the gain in PV_alpha.

    Raises:
        ValueError: If the reports use different alpha or quantile modes
    """
    if report_with.alpha != report_without.alpha:
        raise ValueError(
            f"Cannot compare reports at different alpha: {report_with.alpha} vs {report_without.alpha}"
        )
    if report_with.quantile_mode != report_without.quantile_mode:
        raise ValueError(
            "Cannot compare reports with different quantile modes: "
            f"{report_with.quantile_mode.value} vs {report_without.quantile_mode.value}"
        )
    return report_with.pv_alpha - report_without.pv_alpha


def assess_option(
    model: BrcfOneStageModel,
    alpha: float = 0.05,
    mode: QuantileMode = QuantileMode.EXACT,
    investment: Optional[float] = None,
) -> OptionAssessment:
    """Risk reports for the base forecast and the option project.

    The base report uses pv_moments of the base flows; the option report
    uses option_moments. investment defaults to the model's own I0.
    """
    require_valid_model(model)
    if investment is None:
        investment = model.investment

    basic = pv_alpha(*pv_moments(model.base_flows, model.rate), alpha, mode, investment)
    option = pv_alpha(*option_moments(model), alpha, mode, investment)
    value = brcf_option_value(option, basic)
    logger.info(
        f"Option assessment: basic PV_alpha={basic.pv_alpha:.2f}, "
        f"option PV_alpha={option.pv_alpha:.2f}, value={value:.2f}"
    )
    return OptionAssessment(basic=basic, option=option, option_value=value)


# ==================== Branch values ====================
# flows[k-1] is CF_k; scalars or equally shaped numpy arrays

def base_branch_value(flows: Sequence[Number], rate: float) -> Number:
    """V_B / (1+r): the base branch discounted to t = 0."""
    total = 0.0
    for k, cf in enumerate(flows, start=1):
        total = total + cf / (1 + rate) ** k
    return total


def option_branch_value(
    flows: Sequence[Number],
    investment: Number,
    rate: float,
    growth: float,
) -> Number:
    """V_O / (1+r): the exercised branch discounted to t = 0."""
    total = (flows[0] - investment) / (1 + rate)
    for k, cf in enumerate(flows[1:], start=2):
        total = total + cf * (1 + growth) / (1 + rate) ** k
    return total


def expectation_value(
    flows: Sequence[Number],
    investment: Number,
    rate: float,
    probability: float,
    growth: float,
) -> Number:
    """Probability-averaged project value (CF1 - p I1)/(1+r) + sum CF_k (1+pg)/(1+r)^k."""
    total = (probability * -investment + flows[0]) / (1 + rate)
    scale = 1 + probability * growth
    for k, cf in enumerate(flows[1:], start=2):
        total = total + cf * scale / (1 + rate) ** k
    return total
