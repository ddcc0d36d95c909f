#!/usr/bin/env python3
"""realopt - Main Entry Point.

Command-line front end of the real-options valuation engine.

Usage:
    python -m src.main [--config CONFIG] [--debug] COMMAND [options]

Commands:
- value:    deterministic project value, NPV, node values and option value
- risk:     analytic PV_alpha / PVaR report for Gaussian BRCF scenarios
- simulate: Monte Carlo statistics for any scenario
- fmt:      rewrite scenario files in canonical form

Exit codes: 0 ok, 2 input/load error, 3 math domain error, 4 usage/mode error.
Results go to stdout; logs go to stderr.
"""

import argparse
import dataclasses
import logging
import os
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import List, Optional

import yaml

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src import reporting
from src.brcf_gaussian import (
    BrcfOneStageModel,
    NonGaussianError,
    OptionAssessment,
    brcf_option_value,
    option_moments,
    pv_alpha,
)
from src.config import Config, load_config
from src.dcf_engine import DomainError, UnresolvedDistributionError, rollback, two_scenario_value
from src.models import QuantileMode, ScenarioKind, SimulationMode
from src.monte_carlo import SimulationSpec, UnsupportedModeError, compare, histogram_csv, simulate
from src.scenario_io import ScenarioDocument, ScenarioError, load, save
from src.stats import check_alpha
from src.tree_model import ModelValidationError, OptionTree, tree_from_scenarios

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_LOAD_ERROR = 2
EXIT_DOMAIN_ERROR = 3
EXIT_USAGE_ERROR = 4

# Handlers installed by setup_logging, replaced on every call
_log_handlers: List[logging.Handler] = []


class UsageError(Exception):
    """Bad flag value or a command that does not apply to the scenario."""


class CliParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with EXIT_USAGE_ERROR."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE_ERROR, f"{self.prog}: error: {message}\n")


def setup_logging(config: Config, debug: bool = False) -> None:
    """Configure logging based on config settings.

    Args:
        config: Configuration object
        debug: Enable debug mode
    """
    # Determine log level
    level = logging.DEBUG if debug else getattr(
        logging, config.logging.level.upper(), logging.INFO
    )

    # Create formatter
    formatter = logging.Formatter(
        "%(asctime)s %(levelname)s %(name)s: %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S"
    )

    # Configure root logger
    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    for handler in _log_handlers:
        root_logger.removeHandler(handler)
        handler.close()
    _log_handlers.clear()

    # Console handler (stderr, so stdout carries results only)
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    _log_handlers.append(console_handler)

    # File handler (if configured)
    if config.logging.file:
        log_path = config.resolve_path(config.logging.file)
        log_path.parent.mkdir(parents=True, exist_ok=True)

        file_handler = RotatingFileHandler(
            log_path,
            maxBytes=config.logging.max_size_mb * 1024 * 1024,
            backupCount=config.logging.backup_count,
        )
        file_handler.setLevel(level)
        file_handler.setFormatter(formatter)
        _log_handlers.append(file_handler)

    for handler in _log_handlers:
        root_logger.addHandler(handler)

    logger.debug(f"Logging configured (level: {logging.getLevelName(level)})")


# ==================== Helpers ====================

def _name(path: str, doc: ScenarioDocument) -> str:
    return doc.metadata.name or Path(path).stem


def _with_rate(doc: ScenarioDocument, rate: Optional[float]) -> ScenarioDocument:
    """Replace the document's discount rate; r <= -1 is a domain error."""
    if rate is None:
        return doc
    if not rate > -1:
        raise DomainError(f"Discount rate must be > -1, got {rate}")
    return dataclasses.replace(doc, body=dataclasses.replace(doc.body, rate=rate))


def _investment(doc: ScenarioDocument) -> Optional[float]:
    if doc.kind == ScenarioKind.OPTION_TREE:
        return doc.body.initial_investment
    return doc.body.investment


def _check_alpha(alpha: float) -> float:
    try:
        check_alpha(alpha)
    except ValueError as e:
        raise UsageError(str(e))
    return alpha


def _emit(report: reporting.Report, fmt: str) -> None:
    sys.stdout.write(reporting.render(report, fmt))


def _value(doc: ScenarioDocument, use_means: bool):
    if doc.kind == ScenarioKind.TWO_SCENARIO:
        return two_scenario_value(doc.body)
    if doc.kind == ScenarioKind.OPTION_TREE:
        return rollback(doc.body, use_means=use_means)
    raise UsageError(
        "value applies to two_scenario and option_tree scenarios; "
        "use 'risk' or 'simulate' for brcf_one_stage scenarios"
    )


def _brcf(doc: ScenarioDocument) -> BrcfOneStageModel:
    if doc.kind != ScenarioKind.BRCF_ONE_STAGE:
        raise UsageError(f"risk applies to brcf_one_stage scenarios, got {doc.kind.value}; use 'simulate'")
    return doc.body


def _simulation_model(doc: ScenarioDocument):
    if doc.kind == ScenarioKind.TWO_SCENARIO:
        return tree_from_scenarios(doc.body)
    return doc.body


def _default_mode(model, config: Config) -> SimulationMode:
    if isinstance(model, OptionTree):
        return SimulationMode.BRANCH_SAMPLING
    return SimulationMode(config.simulation.mode)


# ==================== Commands ====================

def cmd_value(args, config: Config) -> int:
    """Value a deterministic scenario, optionally against a baseline."""
    doc = _with_rate(load(args.scenario), args.rate_override)
    result = _value(doc, args.use_means)

    baseline = baseline_name = None
    if args.baseline:
        base_doc = _with_rate(load(args.baseline), args.rate_override)
        baseline = _value(base_doc, args.use_means)
        baseline_name = _name(args.baseline, base_doc)

    report = reporting.valuation_report(
        _name(args.scenario, doc), result, doc.body.rate, baseline, baseline_name or "",
    )
    _emit(report, args.format or config.reporting.format)
    return EXIT_OK


def cmd_risk(args, config: Config) -> int:
    """Analytic risk report of a Gaussian BRCF scenario."""
    alpha = _check_alpha(args.alpha if args.alpha is not None else config.risk.alpha)
    mode = QuantileMode.parse(args.quantile or config.risk.quantile)

    doc = _with_rate(load(args.scenario), args.rate_override)
    model = _brcf(doc)
    investment = args.investment if args.investment is not None else model.investment
    risk = pv_alpha(*option_moments(model), alpha, mode, investment)

    if args.baseline:
        base_model = _brcf(_with_rate(load(args.baseline), args.rate_override))
        basic = pv_alpha(*option_moments(base_model), alpha, mode, investment)
        assessment = OptionAssessment(basic=basic, option=risk, option_value=brcf_option_value(risk, basic))
        report = reporting.risk_comparison_report(assessment)
    else:
        report = reporting.risk_report(_name(args.scenario, doc), risk)

    _emit(report, args.format or config.reporting.format)
    return EXIT_OK


def cmd_simulate(args, config: Config) -> int:
    """Monte Carlo statistics, optionally compared with a baseline."""
    sim = config.simulation
    samples = args.samples if args.samples is not None else sim.samples
    if samples < 1:
        raise UsageError(f"--samples must be at least 1, got {samples}")
    seed = args.seed if args.seed is not None else sim.seed
    if not 0 <= seed <= 2 ** 64 - 1:
        raise UsageError(f"--seed must be in [0, 2^64 - 1], got {seed}")
    alpha = _check_alpha(args.alpha if args.alpha is not None else sim.alpha)

    def run(path: str):
        doc = _with_rate(load(path), args.rate_override)
        model = _simulation_model(doc)
        mode = SimulationMode(args.mode) if args.mode else _default_mode(model, config)
        spec = SimulationSpec(
            model=model, samples=samples, seed=seed, mode=mode, alpha=alpha,
            histogram_buckets=sim.histogram_buckets,
        )
        return doc, simulate(spec, workers=sim.threads)

    doc, result = run(args.scenario)
    investment = args.investment if args.investment is not None else _investment(doc)

    if args.baseline:
        _, basic = run(args.baseline)
        report = reporting.simulation_comparison_report(compare(result, basic, investment))
    else:
        report = reporting.simulation_report(_name(args.scenario, doc), result, investment)

    if args.hist:
        with open(args.hist, "w", newline="") as f:
            f.write(histogram_csv(result))
        logger.info(f"Histogram written to {args.hist}")

    _emit(report, args.format or config.reporting.format)
    return EXIT_OK


def cmd_fmt(args, config: Config) -> int:
    """Rewrite scenario files canonically, or list the ones that are not."""
    stale = []
    for path in args.files:
        current = Path(path).read_bytes() if Path(path).exists() else b""
        canonical = save(load(path))
        if current == canonical:
            continue
        stale.append(path)
        if not args.check:
            Path(path).write_bytes(canonical)
            logger.info(f"Reformatted {path}")

    if args.check and stale:
        for path in stale:
            print(f"not canonical: {path}", file=sys.stderr)
        return EXIT_LOAD_ERROR
    return EXIT_OK


COMMANDS = {
    "value": cmd_value,
    "risk": cmd_risk,
    "simulate": cmd_simulate,
    "fmt": cmd_fmt,
}


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(
        prog="realopt",
        description="Real-options valuation: DCF trees, Gaussian risk bounds and Monte Carlo",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
    # Value the reduction option against the project without options
    python -m src.main value scenarios/reduction_option.yaml --baseline scenarios/base_two_scenario.yaml

    # Analytic comparison with the two-decimal z of 1.64
    python -m src.main risk scenarios/gauss_option.yaml --baseline scenarios/gauss_base.yaml --quantile paper

    # Monte Carlo comparison with a histogram
    python -m src.main simulate scenarios/uniform_option.yaml --baseline scenarios/uniform_base.yaml \\
        --seed 7 --hist hist.csv

    # Check bundled scenarios are canonical
    python -m src.main fmt --check scenarios/*.yaml
        """
    )
    parser.add_argument(
        "--config", "-c",
        default=None,
        help="Path to configuration file (default: config.local.yaml or config.yaml if present)"
    )
    parser.add_argument(
        "--debug", "-d",
        action="store_true",
        help="Enable debug logging"
    )
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")
    commands.required = True

    def common(sub, baseline: bool = True):
        sub.add_argument("scenario", help="Scenario file")
        if baseline:
            sub.add_argument("--baseline", "-b", help="Scenario without the option, for comparison")
        sub.add_argument("--rate-override", type=float, default=None, help="Discount rate to use instead of the file's")
        sub.add_argument("--format", "-f", choices=(reporting.FORMAT_TABLE, reporting.FORMAT_CSV), default=None,
                         help="Output format (default: reporting.format from config)")

    value = commands.add_parser("value", help="Deterministic project value and NPV")
    common(value)
    value.add_argument("--use-means", action="store_true",
                       help="Value random cash flows at their expected values")

    risk = commands.add_parser("risk", help="Analytic PV_alpha and PVaR for Gaussian flows")
    common(risk)
    risk.add_argument("--alpha", "-a", type=float, default=None, help="Upper-tail level in (0, 0.5]")
    risk.add_argument("--quantile", "-q", choices=("exact", "paper", "paper_compat"), default=None,
                      help="z multiplier: full precision or truncated to two decimals")
    risk.add_argument("--investment", "-i", type=float, default=None, help="Initial investment I0 ($K)")

    sim = commands.add_parser("simulate", help="Monte Carlo statistics")
    common(sim)
    sim.add_argument("--samples", "-n", type=int, default=None, help="Replications M")
    sim.add_argument("--seed", "-s", type=int, default=None, help="64-bit unsigned seed")
    sim.add_argument("--mode", "-m", choices=[m.value for m in SimulationMode], default=None,
                     help="Evaluation mode (default: branch_sampling for trees, simulation.mode otherwise)")
    sim.add_argument("--alpha", "-a", type=float, default=None, help="Quantile level of PV_alpha")
    sim.add_argument("--investment", "-i", type=float, default=None, help="Initial investment I0 ($K)")
    sim.add_argument("--hist", default=None, help="Write the histogram of the scenario to this CSV file")

    fmt = commands.add_parser("fmt", help="Rewrite scenario files in canonical form")
    fmt.add_argument("files", nargs="+", help="Scenario files")
    fmt.add_argument("--check", action="store_true", help="Only report non-canonical files (exit 2)")

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point.

    Args:
        argv: Arguments without the program name (default: sys.argv[1:])

    Returns:
        Process exit code
    """
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
    except (OSError, yaml.YAMLError, ValueError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_LOAD_ERROR

    setup_logging(config, args.debug)
    logger.debug(f"Running {args.command}")

    try:
        return COMMANDS[args.command](args, config)
    except (ScenarioError, ModelValidationError, OSError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_LOAD_ERROR
    except DomainError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_DOMAIN_ERROR
    except NonGaussianError as e:
        print(f"Error: {e}. Run 'simulate' for non-Gaussian flows.", file=sys.stderr)
        return EXIT_USAGE_ERROR
    except (UsageError, UnsupportedModeError, UnresolvedDistributionError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE_ERROR
    except Exception as e:
        print(f"Error: {e}", file=sys.stderr)
        if args.debug:
            import traceback
            traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
