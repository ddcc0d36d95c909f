"""Text and CSV rendering of valuation, risk and simulation results.

Every command builds one Report (rows of typed values, one column per
alternative) and renders it either as an aligned table or as CSV, so both
formats always carry the same numbers. Tables print money in whole $K
with thousands separators; CSV prints full precision.
"""

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

from src.brcf_gaussian import OptionAssessment, feasibility
from src.models import RiskReport, SimulationResult, ValuationResult, format_path
from src.monte_carlo import SimulationComparison

logger = logging.getLogger(__name__)

FORMAT_TABLE = "table"
FORMAT_CSV = "csv"

MONEY = "money"
RATIO = "ratio"
COUNT = "count"
FLAG = "flag"
TEXT = "text"

Value = Union[float, int, bool, str, None]


@dataclass
class Row:
    """One metric across the report's columns."""
    label: str
    metric: str
    values: Sequence[Value]
    kind: str = MONEY


@dataclass
class Report:
    """Rendering-neutral result table.

    Attributes:
        title: Heading printed above the table
        columns: Table column headings, one per value
        keys: CSV column names, one per value
        rows: Metric rows
        notes: Free-text lines printed under the table (table format only)
    """
    title: str
    columns: List[str]
    keys: List[str]
    rows: List[Row] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    def add(self, label: str, metric: str, *values: Value, kind: str = MONEY) -> None:
        self.rows.append(Row(label, metric, values, kind))


def money(value: float) -> str:
    """Whole $K with thousands separators, e.g. 5,168."""
    return f"{value:,.0f}"


def _table_cell(value: Value, kind: str) -> str:
    if value is None:
        return ""
    if kind == MONEY:
        return money(value)
    if kind == RATIO:
        return f"{value:.4g}"
    if kind == FLAG:
        return "feasible" if value else "infeasible"
    return str(value)


def _csv_cell(value: Value, kind: str) -> str:
    if value is None:
        return ""
    if kind == FLAG:
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_table(report: Report) -> str:
    header = ["Metric"] + report.columns
    body = [[row.label] + [_table_cell(v, row.kind) for v in row.values] for row in report.rows]
    widths = [max(len(line[c]) if c < len(line) else 0 for line in [header] + body)
              for c in range(len(header))]

    def line(cells: List[str]) -> str:
        first = cells[0].ljust(widths[0])
        rest = [cells[c].rjust(widths[c]) if c < len(cells) else " " * widths[c]
                for c in range(1, len(widths))]
        return "  ".join([first] + rest).rstrip()

    lines = [report.title, "", line(header), line(["-" * w for w in widths])]
    lines += [line(cells) for cells in body]
    if report.notes:
        lines.append("")
        lines += report.notes
    return "\n".join(lines) + "\n"


def render_csv(report: Report) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["metric"] + report.keys)
    for row in report.rows:
        cells = [_csv_cell(v, row.kind) for v in row.values]
        writer.writerow([row.metric] + cells + [""] * (len(report.keys) - len(cells)))
    return buffer.getvalue()


def render(report: Report, fmt: str = FORMAT_TABLE) -> str:
    if fmt == FORMAT_CSV:
        return render_csv(report)
    return render_table(report)


# ==================== Builders ====================

def valuation_report(
    name: str,
    result: ValuationResult,
    rate: float,
    baseline: Optional[ValuationResult] = None,
    baseline_name: str = "",
) -> Report:
    """V0, NPV and node values; option value when a baseline is given.

    Each node row carries the node value and its continuation value
    V/(1+r), the amount it contributes one period earlier.
    """
    report = Report(title=f"Project value: {name}", columns=["Value", "Discounted"],
                    keys=["value", "discounted"])
    report.add("V0", "v0", result.v0)
    report.add("Initial investment", "initial_investment", result.initial_investment)
    report.add("NPV", "npv", result.npv)
    for path, value in sorted(result.node_values.items()):
        label = f"V{len(path)}{format_path(path)}"
        report.add(label, f"node{format_path(path)}", value, value / (1 + rate))

    if baseline is not None:
        report.add(f"NPV without option ({baseline_name})", "baseline_npv", baseline.npv)
        report.add("Option value", "option_value", result.npv - baseline.npv)
    return report


def _risk_rows(report: Report, risks: Sequence[RiskReport]) -> None:
    alpha = risks[0].alpha
    report.add("PV Mean Value", "mean", *[r.mean for r in risks])
    report.add("PV Standard Deviation", "sd", *[r.sd for r in risks])
    report.add("PVaR", "pvar", *[r.pvar for r in risks])
    report.add(f"PV_{alpha:g}", "pv_alpha", *[r.pv_alpha for r in risks])
    report.add("z", "z", *[r.z for r in risks], kind=RATIO)
    if all(r.investment is not None for r in risks):
        report.add("Investment", "investment", *[r.investment for r in risks])
        report.add("Verdict", "feasible", *[r.feasible for r in risks], kind=FLAG)
        report.add("Safety margin", "safety_margin", *[r.safety_margin for r in risks])


def risk_report(name: str, risk: RiskReport) -> Report:
    """Analytic risk metrics of one project."""
    report = Report(title=f"Risk report: {name} (alpha {risk.alpha:g}, {risk.quantile_mode.value} quantile)",
                    columns=[name], keys=["value"])
    _risk_rows(report, [risk])
    return report


def risk_comparison_report(assessment: OptionAssessment) -> Report:
    """Option project next to its basic version, the 'comparison of projects metrics' layout."""
    option, basic = assessment.option, assessment.basic
    report = Report(
        title=f"Comparison of projects metrics (alpha {option.alpha:g}, {option.quantile_mode.value} quantile)",
        columns=["Real Option Project", "Basic Project's Version"],
        keys=["option", "basic"],
    )
    _risk_rows(report, [option, basic])
    report.add("Option value", "option_value", assessment.option_value)
    report.notes.append(assessment.verdict)
    return report


def _simulation_rows(report: Report, results: Sequence[SimulationResult]) -> None:
    alpha = results[0].alpha
    report.add("PV Mean Value", "sample_mean", *[r.sample_mean for r in results])
    report.add("PV Standard Deviation", "sample_sd", *[r.sample_sd for r in results])
    report.add("PVaR", "pvar", *[r.pvar for r in results])
    report.add(f"PV_{alpha:g}", "pv_alpha", *[r.pv_alpha for r in results])
    report.add("Samples", "samples", *[r.samples for r in results], kind=COUNT)
    report.add("Seed", "seed", *[r.seed for r in results], kind=COUNT)
    report.add("Mode", "mode", *[r.mode.value for r in results], kind=TEXT)


def simulation_report(name: str, result: SimulationResult, investment: Optional[float] = None) -> Report:
    """Monte Carlo statistics of one project."""
    report = Report(title=f"Monte Carlo statistics: {name}", columns=[name], keys=["value"])
    _simulation_rows(report, [result])
    if investment is not None:
        report.add("Investment", "investment", investment)
        report.add("Verdict", "feasible", feasibility(result.pv_alpha, investment), kind=FLAG)
    return report


def simulation_comparison_report(comparison: SimulationComparison) -> Report:
    """Option and basic simulations side by side, the 'comparison of projects statistics' layout."""
    report = Report(
        title="Comparison of projects statistics by MC simulation",
        columns=["Real Option Project", "Basic Project's Version"],
        keys=["option", "basic"],
    )
    _simulation_rows(report, [comparison.option, comparison.basic])
    if comparison.investment is not None:
        report.add("Investment", "investment", comparison.investment, comparison.investment)
        report.add("Verdict", "feasible", comparison.option_feasible, comparison.basic_feasible, kind=FLAG)
    report.add("Option value", "option_value", comparison.option_value)
    report.notes.append(comparison.verdict)
    return report
