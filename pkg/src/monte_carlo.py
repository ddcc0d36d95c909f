"""Seeded Monte Carlo estimation of project value.

Each replication samples every random input of the model, evaluates the
project value y_i = f(x_1, ..., x_n) and the sample of M values is
summarized by its mean, unbiased standard deviation, empirical
alpha-quantile (PV_alpha) and an equal-width histogram.

Two evaluation modes:
- EXPECTATION_FORM: BRCF models only. Samples CF_k and I1 and evaluates
  the probability-averaged value (CF1 - p I1)/(1+r) + sum CF_k (1+pg)/(1+r)^k
  with p and g as constants. Its moments match src.brcf_gaussian.
- BRANCH_SAMPLING: draws the branch outcome itself. For BRCF models a
  Bernoulli(p) draw picks V_O or V_B; for option trees three stage draws
  pick a full path whose flows (deltas included) are sampled and
  discounted.

Replication i always reads the same deviates for a given seed (see
src.rng), and blocks are concatenated in order before any reduction, so
results are bit-identical for any worker count.

Usage:
    from src.monte_carlo import SimulationSpec, simulate

    result = simulate(SimulationSpec(model, samples=100_000, seed=7), workers=4)
    print(result.sample_mean, result.pv_alpha)
"""

import csv
import io
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import List, Optional, Union

import numpy as np

from src.brcf_gaussian import (
    BrcfOneStageModel,
    base_branch_value,
    expectation_value,
    feasibility,
    option_branch_value,
    require_valid_model,
)
from src.models import DistributionKind, HistogramBucket, SimulationMode, SimulationResult
from src.rng import UnitStream, block_count, block_span, block_units, check_seed
from src.stats import check_alpha, empirical_quantile, normal_ppf
from src.tree_model import CashFlowDist, OptionTree, require_valid_tree

logger = logging.getLogger(__name__)

DEFAULT_SAMPLES = 100_000
DEFAULT_BUCKETS = 50

HISTOGRAM_HEADER = ("bucket_lo", "bucket_width", "count")

# Option-tree rows: three stage draws, CF1, delta1, CF2, delta2, then CF3..CFn
_TREE_BRANCH_COLUMNS = 3
_TREE_STAGE_COLUMNS = 4

Model = Union[BrcfOneStageModel, OptionTree]


class UnsupportedModeError(ValueError):
    """The simulation mode is not defined for the model type."""


@dataclass(frozen=True)
class SimulationSpec:
    """Everything that determines a simulation result.

    Attributes:
        model: BRCF one-stage model or option tree, any distribution kinds
        samples: Number of replications M (>= 1)
        seed: 64-bit unsigned seed
        mode: Evaluation mode
        alpha: Level of the empirical quantile PV_alpha
        histogram_buckets: Number of equal-width buckets
    """
    model: Model
    samples: int = DEFAULT_SAMPLES
    seed: int = 0
    mode: SimulationMode = SimulationMode.EXPECTATION_FORM
    alpha: float = 0.05
    histogram_buckets: int = DEFAULT_BUCKETS


@dataclass(frozen=True)
class SimulationComparison:
    """Statistics of an option project next to its basic version."""
    option: SimulationResult
    basic: SimulationResult
    investment: Optional[float] = None

    @property
    def option_value(self) -> float:
        return self.option.pv_alpha - self.basic.pv_alpha

    @property
    def differences(self) -> dict:
        """Option minus basic for each statistic."""
        return {
            "sample_mean": self.option.sample_mean - self.basic.sample_mean,
            "sample_sd": self.option.sample_sd - self.basic.sample_sd,
            "pvar": self.option.pvar - self.basic.pvar,
            "pv_alpha": self.option_value,
        }

    @property
    def option_feasible(self) -> Optional[bool]:
        if self.investment is None:
            return None
        return feasibility(self.option.pv_alpha, self.investment)

    @property
    def basic_feasible(self) -> Optional[bool]:
        if self.investment is None:
            return None
        return feasibility(self.basic.pv_alpha, self.investment)

    @property
    def attractive(self) -> bool:
        """The option project has the larger margin of safety."""
        return self.option.pv_alpha > self.basic.pv_alpha

    @property
    def verdict(self) -> str:
        if self.attractive:
            return "Real Option project looks more attractive"
        if self.option.pv_alpha == self.basic.pv_alpha:
            return "Projects are equally attractive"
        return "Basic project looks more attractive"


# ==================== Sampling ====================

def transform(dist: CashFlowDist, units: np.ndarray) -> np.ndarray:
    """Map unit deviates to draws of a distribution, one draw per deviate."""
    units = np.asarray(units, dtype=np.float64)
    if dist.kind == DistributionKind.GAUSSIAN:
        return dist.mean + dist.sd * normal_ppf(units)
    if dist.kind == DistributionKind.UNIFORM:
        return dist.lo + (dist.hi - dist.lo) * units
    return np.full(units.shape, dist.value)


def draw(dist: CashFlowDist, stream: UnitStream) -> float:
    """Draw one value from a distribution, consuming one deviate."""
    return float(transform(dist, np.array([stream.next_unit()]))[0])


def layout_width(model: Model) -> int:
    """Deviates consumed per replication."""
    if isinstance(model, OptionTree):
        return _TREE_BRANCH_COLUMNS + _TREE_STAGE_COLUMNS + model.horizon - 2
    # n flows, I1, branch draw
    return model.horizon + 2


def _brcf_values(model: BrcfOneStageModel, mode: SimulationMode, units: np.ndarray) -> np.ndarray:
    n = model.horizon
    flows = [transform(dist, units[:, k]) for k, dist in enumerate(model.base_flows)]
    investment = transform(model.additional_investment, units[:, n])
    p, g, r = model.option_probability, model.growth, model.rate

    if mode == SimulationMode.EXPECTATION_FORM:
        return expectation_value(flows, investment, r, p, g)

    exercised = units[:, n + 1] < p
    return np.where(
        exercised,
        option_branch_value(flows, investment, r, g),
        base_branch_value(flows, r),
    )


def _choose(index: np.ndarray, dists: List[CashFlowDist], units: np.ndarray) -> np.ndarray:
    """Draw from the distribution each row's path selects."""
    return np.choose(index, [transform(dist, units) for dist in dists])


def _tree_values(tree: OptionTree, units: np.ndarray) -> np.ndarray:
    discount = 1 + tree.rate
    firsts = tree.stage1
    seconds = [second for first in firsts for second in first.branches]
    leaves = [leaf for second in seconds for leaf in second.terminals]

    # Branch 1 is taken when the stage draw falls below its probability
    p1 = np.array([firsts[0].control.p])
    p2 = np.array([first.branches[0].control.p for first in firsts])
    p3 = np.array([second.terminals[0].p for second in seconds])

    i = np.where(units[:, 0] < p1[0], 0, 1)
    j = np.where(units[:, 1] < p2[i], 0, 1)
    ij = 2 * i + j
    l = np.where(units[:, 2] < p3[ij], 0, 1)
    ijl = 2 * ij + l

    col = _TREE_BRANCH_COLUMNS
    cf1 = _choose(i, [f.cash_flow for f in firsts], units[:, col])
    delta1 = _choose(i, [f.control.delta for f in firsts], units[:, col + 1])
    cf2 = _choose(ij, [s.cash_flow for s in seconds], units[:, col + 2])
    delta2 = _choose(ij, [s.control.delta for s in seconds], units[:, col + 3])

    values = (cf1 + delta1) / discount + (cf2 + delta2) / discount ** 2
    col += _TREE_STAGE_COLUMNS
    for offset in range(tree.horizon - 2):
        cf = _choose(ijl, [leaf.cash_flows[offset] for leaf in leaves], units[:, col + offset])
        values = values + cf / discount ** (offset + 3)
    return values


def _evaluate_block(spec: SimulationSpec, width: int, block: int) -> np.ndarray:
    _, rows = block_span(block, spec.samples)
    units = block_units(spec.seed, block, rows, width)
    if isinstance(spec.model, OptionTree):
        return _tree_values(spec.model, units)
    return _brcf_values(spec.model, spec.mode, units)


# ==================== Simulation ====================

def validate_spec(spec: SimulationSpec) -> None:
    """Reject specs that cannot be simulated.

    Raises:
        ValueError: Bad samples, seed, alpha or bucket count
        ModelValidationError: If the model is invalid
        UnsupportedModeError: EXPECTATION_FORM on an option tree
    """
    if isinstance(spec.samples, bool) or not isinstance(spec.samples, int) or spec.samples < 1:
        raise ValueError(f"samples must be an integer >= 1, got {spec.samples!r}")
    if spec.histogram_buckets < 1:
        raise ValueError(f"histogram_buckets must be >= 1, got {spec.histogram_buckets}")
    check_seed(spec.seed)
    check_alpha(spec.alpha)

    if isinstance(spec.model, OptionTree):
        if spec.mode == SimulationMode.EXPECTATION_FORM:
            raise UnsupportedModeError(
                "expectation_form is defined for one-stage BRCF models only; "
                "simulate option trees with branch_sampling"
            )
        require_valid_tree(spec.model)
    elif isinstance(spec.model, BrcfOneStageModel):
        require_valid_model(spec.model)
    else:
        raise TypeError(f"Cannot simulate a {type(spec.model).__name__}")


def sample_values(spec: SimulationSpec, workers: int = 1) -> np.ndarray:
    """All M simulated project values in replication order."""
    validate_spec(spec)
    width = layout_width(spec.model)
    blocks = block_count(spec.samples)
    evaluate = partial(_evaluate_block, spec, width)

    logger.debug(f"Simulating {spec.samples} replications in {blocks} block(s), width {width}, {workers} worker(s)")
    if workers > 1 and blocks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(evaluate, range(blocks)))
    else:
        parts = [evaluate(block) for block in range(blocks)]
    return np.concatenate(parts)


def histogram(values: np.ndarray, buckets: int = DEFAULT_BUCKETS) -> tuple:
    """Equal-width buckets spanning [min, max].

    All values equal gives one zero-width bucket. A span too narrow to
    split into distinct float edges gives one bucket covering [min, max].
    """
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        return (HistogramBucket(lower=lo, width=0.0, count=int(values.size)),)
    edges = np.linspace(lo, hi, buckets + 1)
    if not np.all(np.diff(edges) > 0):
        logger.debug(f"Sample span {hi - lo!r} too narrow for {buckets} buckets, using one")
        return (HistogramBucket(lower=lo, width=hi - lo, count=int(values.size)),)
    counts, edges = np.histogram(values, bins=edges)
    width = (hi - lo) / buckets
    return tuple(
        HistogramBucket(lower=float(edges[b]), width=width, count=int(counts[b]))
        for b in range(buckets)
    )


def simulate(spec: SimulationSpec, workers: int = 1) -> SimulationResult:
    """Run a simulation and summarize the sample.

    Args:
        spec: Simulation spec
        workers: Threads evaluating blocks; never changes the result

    Returns:
        SimulationResult

    Raises:
        As validate_spec()
    """
    values = sample_values(spec, workers)

    if np.all(values == values[0]):
        mean = float(values[0])
        sd = 0.0
        quantile = mean
    else:
        mean = float(np.mean(values))
        sd = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
        quantile = empirical_quantile(values, spec.alpha)

    result = SimulationResult(
        sample_mean=mean,
        sample_sd=sd,
        pv_alpha=quantile,
        pvar=mean - quantile,
        histogram=histogram(values, spec.histogram_buckets),
        samples=spec.samples,
        seed=spec.seed,
        alpha=spec.alpha,
        mode=spec.mode,
    )
    logger.info(
        f"Simulated {spec.samples} replications ({spec.mode.value}, seed {spec.seed}): "
        f"mean={mean:.2f} sd={sd:.2f} PV_alpha={quantile:.2f}"
    )
    return result


def compare(
    option: SimulationResult,
    basic: SimulationResult,
    investment: Optional[float] = None,
) -> SimulationComparison:
    """Pair an option project with its basic version.

    Raises:
        ValueError: If the results were computed at different alpha
    """
    if option.alpha != basic.alpha:
        raise ValueError(f"Cannot compare results at different alpha: {option.alpha} vs {basic.alpha}")
    return SimulationComparison(option=option, basic=basic, investment=investment)


def histogram_csv(result: SimulationResult) -> str:
    """Histogram as CSV text: header bucket_lo,bucket_width,count then one row per bucket."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(HISTOGRAM_HEADER)
    for bucket in result.histogram:
        writer.writerow((repr(bucket.lower), repr(bucket.width), bucket.count))
    return buffer.getvalue()
