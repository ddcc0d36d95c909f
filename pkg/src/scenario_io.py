"""Scenario files: load, validate and canonically save project definitions.

A scenario file is YAML with four top-level keys, in this order:

    schema_version: '1'
    kind: two_scenario | option_tree | brcf_one_stage
    metadata:
      name: ...
      description: ...
      option_class: expansion | reduction | switching | ...   (optional)
    body: ...                                                  (per kind)

Amounts are $K, rates are decimals. A cash flow is either a bare number
(deterministic) or a mapping:

    {kind: gaussian, mean: 2000.0, sd: 200.0}      sd and/or cv; sd wins
    {kind: uniform, lo: 1800.0, hi: 2200.0}

A Gaussian given only by cv has its sd computed at load time and both are
kept, so a saved file records the sd it was valued with.

option_tree body:
    initial_investment, rate, horizon,
    stage1: [{p, delta, cash_flow,
              stage2: [{p, delta, cash_flow,
                        stage3: [{p, cash_flows: [CF3..CFn]}]}]}]

two_scenario body:
    investment, rate, scenarios: [{probability, cash_flows: [CF1..CFn]}]

brcf_one_stage body:
    investment (optional), rate, option_probability, growth,
    additional_investment, base_flows: [CF1..CFn]

save() writes keys in exactly these orders with every number as a float
in shortest round-trip form (horizon excepted), so save(load(save(d)))
is byte-identical to save(d).

Usage:
    from src.scenario_io import load, save

    doc = load("scenarios/reduction_option.yaml")
    data = save(doc)
"""

import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, BinaryIO, Dict, List, Optional, TextIO, Union

import yaml

from src.brcf_gaussian import BrcfOneStageModel, validate_model
from src.models import DistributionKind, OptionClass, ScenarioKind
from src.tree_model import (
    BranchControl,
    CashFlowDist,
    FirstStageBranch,
    OptionTree,
    Scenario,
    SecondStageBranch,
    TerminalBranch,
    TwoScenarioProject,
    ValidationReport,
    validate_project,
    validate_tree,
)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1"
SUPPORTED_SCHEMA_VERSIONS = ("1",)

Body = Union[TwoScenarioProject, OptionTree, BrcfOneStageModel]
Source = Union[str, os.PathLike, bytes, BinaryIO, TextIO]


class ScenarioError(ValueError):
    """A scenario file could not be read, parsed, validated or saved.

    Attributes:
        path: Field path of the offending value, if known
        line: 1-indexed line of a syntax error, if known
        column: 1-indexed column of a syntax error, if known
        report: ValidationReport when the model broke an invariant
    """

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        line: Optional[int] = None,
        column: Optional[int] = None,
        report: Optional[ValidationReport] = None,
    ):
        self.path = path
        self.line = line
        self.column = column
        self.report = report
        if path:
            message = f"{path}: {message}"
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class ScenarioMetadata:
    """Descriptive document fields; never used in valuation."""
    name: str = ""
    description: str = ""
    option_class: Optional[OptionClass] = None


@dataclass(frozen=True)
class ScenarioDocument:
    """A validated scenario: kind, model body and metadata."""
    kind: ScenarioKind
    body: Body
    metadata: ScenarioMetadata = field(default_factory=ScenarioMetadata)
    schema_version: str = SCHEMA_VERSION


# ==================== Field readers ====================

def _require(data: Dict[str, Any], key: str, path: str) -> Any:
    if key not in data:
        raise ScenarioError("missing required field", path=_join(path, key))
    return data[key]


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _mapping(value: Any, path: str, allowed: tuple) -> Dict[str, Any]:
    if not isinstance(value, dict):
        raise ScenarioError(f"expected a mapping, got {type(value).__name__}", path=path)
    unknown = sorted(str(k) for k in value if k not in allowed)
    if unknown:
        raise ScenarioError(
            f"unknown field(s) {', '.join(unknown)}; expected {', '.join(allowed)}", path=path
        )
    return value


def _sequence(value: Any, path: str) -> List[Any]:
    if not isinstance(value, list):
        raise ScenarioError(f"expected a list, got {type(value).__name__}", path=path)
    return value


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"expected a number, got {value!r}", path=path)
    number = float(value)
    if not math.isfinite(number):
        raise ScenarioError(f"expected a finite number, got {value!r}", path=path)
    return number


def _integer(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"expected an integer, got {value!r}", path=path)
    return value


def _string(value: Any, path: str) -> str:
    if value is None:
        return ""
    if not isinstance(value, str):
        raise ScenarioError(f"expected a string, got {value!r}", path=path)
    return value


def _distribution(value: Any, path: str) -> CashFlowDist:
    """Read a cash flow: a bare number or a gaussian/uniform mapping."""
    if not isinstance(value, dict):
        return CashFlowDist.deterministic(_number(value, path))

    kind = _require(value, "kind", path)
    try:
        if kind == DistributionKind.GAUSSIAN.value:
            data = _mapping(value, path, ("kind", "mean", "sd", "cv"))
            if "sd" not in data and "cv" not in data:
                raise ScenarioError("gaussian needs sd or cv", path=path)
            return CashFlowDist.gaussian(
                _number(_require(data, "mean", path), _join(path, "mean")),
                sd=_number(data["sd"], _join(path, "sd")) if "sd" in data else None,
                cv=_number(data["cv"], _join(path, "cv")) if "cv" in data else None,
            )
        if kind == DistributionKind.UNIFORM.value:
            data = _mapping(value, path, ("kind", "lo", "hi"))
            return CashFlowDist.uniform(
                _number(_require(data, "lo", path), _join(path, "lo")),
                _number(_require(data, "hi", path), _join(path, "hi")),
            )
        if kind == DistributionKind.DETERMINISTIC.value:
            data = _mapping(value, path, ("kind", "value"))
            return CashFlowDist.deterministic(_number(_require(data, "value", path), _join(path, "value")))
    except ScenarioError:
        raise
    except ValueError as e:
        raise ScenarioError(str(e), path=path) from e

    choices = ", ".join(k.value for k in DistributionKind)
    raise ScenarioError(f"unknown distribution kind {kind!r}; expected one of {choices}", path=_join(path, "kind"))


def _flows(value: Any, path: str) -> List[CashFlowDist]:
    return [_distribution(v, f"{path}[{k}]") for k, v in enumerate(_sequence(value, path), start=1)]


# ==================== Body readers ====================

def _read_two_scenario(data: Any) -> TwoScenarioProject:
    data = _mapping(data, "body", ("investment", "rate", "scenarios"))
    scenarios = []
    for i, raw in enumerate(_sequence(_require(data, "scenarios", "body"), "body.scenarios"), start=1):
        path = f"body.scenarios[{i}]"
        raw = _mapping(raw, path, ("probability", "cash_flows"))
        flows = _sequence(_require(raw, "cash_flows", path), f"{path}.cash_flows")
        scenarios.append(Scenario(
            probability=_number(_require(raw, "probability", path), f"{path}.probability"),
            cash_flows=[_number(cf, f"{path}.cash_flows[{k}]") for k, cf in enumerate(flows, start=1)],
        ))
    return TwoScenarioProject(
        investment=_number(_require(data, "investment", "body"), "body.investment"),
        rate=_number(_require(data, "rate", "body"), "body.rate"),
        scenarios=scenarios,
    )


def _read_option_tree(data: Any) -> OptionTree:
    data = _mapping(data, "body", ("initial_investment", "rate", "horizon", "stage1"))
    stage1 = []
    for i, raw1 in enumerate(_sequence(_require(data, "stage1", "body"), "body.stage1"), start=1):
        path1 = f"body.stage1[{i}]"
        raw1 = _mapping(raw1, path1, ("p", "delta", "cash_flow", "stage2"))
        branches = []
        for j, raw2 in enumerate(_sequence(_require(raw1, "stage2", path1), f"{path1}.stage2"), start=1):
            path2 = f"{path1}.stage2[{j}]"
            raw2 = _mapping(raw2, path2, ("p", "delta", "cash_flow", "stage3"))
            terminals = []
            for l, raw3 in enumerate(_sequence(_require(raw2, "stage3", path2), f"{path2}.stage3"), start=1):
                path3 = f"{path2}.stage3[{l}]"
                raw3 = _mapping(raw3, path3, ("p", "cash_flows"))
                terminals.append(TerminalBranch(
                    p=_number(_require(raw3, "p", path3), f"{path3}.p"),
                    cash_flows=_flows(_require(raw3, "cash_flows", path3), f"{path3}.cash_flows"),
                ))
            branches.append(SecondStageBranch(
                control=_control(raw2, path2),
                cash_flow=_distribution(_require(raw2, "cash_flow", path2), f"{path2}.cash_flow"),
                terminals=terminals,
            ))
        stage1.append(FirstStageBranch(
            control=_control(raw1, path1),
            cash_flow=_distribution(_require(raw1, "cash_flow", path1), f"{path1}.cash_flow"),
            branches=branches,
        ))
    return OptionTree(
        initial_investment=_number(_require(data, "initial_investment", "body"), "body.initial_investment"),
        rate=_number(_require(data, "rate", "body"), "body.rate"),
        horizon=_integer(_require(data, "horizon", "body"), "body.horizon"),
        stage1=stage1,
    )


def _control(raw: Dict[str, Any], path: str) -> BranchControl:
    delta = _distribution(raw["delta"], f"{path}.delta") if "delta" in raw else CashFlowDist.deterministic(0.0)
    return BranchControl(p=_number(_require(raw, "p", path), f"{path}.p"), delta=delta)


def _read_brcf(data: Any) -> BrcfOneStageModel:
    data = _mapping(data, "body", (
        "investment", "rate", "option_probability", "growth", "additional_investment", "base_flows",
    ))
    investment = data.get("investment")
    return BrcfOneStageModel(
        base_flows=_flows(_require(data, "base_flows", "body"), "body.base_flows"),
        rate=_number(_require(data, "rate", "body"), "body.rate"),
        option_probability=_number(data.get("option_probability", 0.0), "body.option_probability"),
        additional_investment=_distribution(data.get("additional_investment", 0.0), "body.additional_investment"),
        growth=_number(data.get("growth", 0.0), "body.growth"),
        investment=_number(investment, "body.investment") if investment is not None else None,
    )


_READERS = {
    ScenarioKind.TWO_SCENARIO: _read_two_scenario,
    ScenarioKind.OPTION_TREE: _read_option_tree,
    ScenarioKind.BRCF_ONE_STAGE: _read_brcf,
}


def _validate_body(kind: ScenarioKind, body: Body) -> ValidationReport:
    if kind == ScenarioKind.OPTION_TREE:
        return validate_tree(body)
    if kind == ScenarioKind.TWO_SCENARIO:
        return validate_project(body)
    return validate_model(body)


def _require_valid(doc: ScenarioDocument) -> None:
    report = _validate_body(doc.kind, doc.body)
    if not report.is_valid:
        details = "\n  ".join(str(v) for v in report)
        raise ScenarioError(f"invalid {doc.kind.value} scenario:\n  {details}", report=report)


def _read_metadata(value: Any) -> ScenarioMetadata:
    if value is None:
        return ScenarioMetadata()
    data = _mapping(value, "metadata", ("name", "description", "option_class"))
    option_class = data.get("option_class")
    if option_class is not None:
        try:
            option_class = OptionClass(option_class)
        except ValueError:
            choices = ", ".join(c.value for c in OptionClass)
            raise ScenarioError(f"unknown option class {option_class!r}; expected one of {choices}",
                                path="metadata.option_class")
    return ScenarioMetadata(
        name=_string(data.get("name"), "metadata.name"),
        description=_string(data.get("description"), "metadata.description"),
        option_class=option_class,
    )


# ==================== Public API ====================

def loads(text: Union[str, bytes]) -> ScenarioDocument:
    """Parse and validate a scenario document from text.

    Raises:
        ScenarioError: Syntax error (with line/column), unsupported
            schema_version, malformed field (with field path) or a model
            invariant violation (with the full ValidationReport)
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ScenarioError(f"not UTF-8 text: {e}") from e

    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        problem = getattr(e, "problem", None) or str(e)
        if mark is not None:
            raise ScenarioError(f"syntax error: {problem}", line=mark.line + 1, column=mark.column + 1) from e
        raise ScenarioError(f"syntax error: {problem}") from e

    data = _mapping(data, "", ("schema_version", "kind", "metadata", "body"))

    version = str(_require(data, "schema_version", ""))
    if version not in SUPPORTED_SCHEMA_VERSIONS:
        raise ScenarioError(
            f"unsupported schema_version {version!r}; this version reads {', '.join(SUPPORTED_SCHEMA_VERSIONS)}",
            path="schema_version",
        )

    raw_kind = _require(data, "kind", "")
    try:
        kind = ScenarioKind(raw_kind)
    except ValueError:
        choices = ", ".join(k.value for k in ScenarioKind)
        raise ScenarioError(f"unknown kind {raw_kind!r}; expected one of {choices}", path="kind")

    doc = ScenarioDocument(
        kind=kind,
        body=_READERS[kind](_require(data, "body", "")),
        metadata=_read_metadata(data.get("metadata")),
        schema_version=version,
    )
    _require_valid(doc)
    return doc


def load(source: Source) -> ScenarioDocument:
    """Load a scenario from a path, raw bytes or an open stream.

    Raises:
        ScenarioError: If the source cannot be read or is not a valid scenario
    """
    if isinstance(source, (str, os.PathLike)):
        path = Path(source)
        try:
            text = path.read_bytes()
        except OSError as e:
            raise ScenarioError(f"cannot read {path}: {e.strerror or e}") from e
        doc = loads(text)
        logger.info(f"Loaded {doc.kind.value} scenario from {path}")
        return doc
    if isinstance(source, bytes):
        return loads(source)
    return loads(source.read())


def _number_out(value: float) -> float:
    return float(value)


def _distribution_out(dist: CashFlowDist) -> Any:
    if dist.kind == DistributionKind.GAUSSIAN:
        data = {"kind": dist.kind.value, "mean": dist.mean, "sd": dist.sd}
        if dist.cv is not None:
            data["cv"] = dist.cv
        return data
    if dist.kind == DistributionKind.UNIFORM:
        return {"kind": dist.kind.value, "lo": dist.lo, "hi": dist.hi}
    return _number_out(dist.value)


def _body_out(kind: ScenarioKind, body: Body) -> Dict[str, Any]:
    if kind == ScenarioKind.TWO_SCENARIO:
        return {
            "investment": _number_out(body.investment),
            "rate": _number_out(body.rate),
            "scenarios": [
                {"probability": _number_out(s.probability), "cash_flows": [_number_out(cf) for cf in s.cash_flows]}
                for s in body.scenarios
            ],
        }
    if kind == ScenarioKind.OPTION_TREE:
        return {
            "initial_investment": _number_out(body.initial_investment),
            "rate": _number_out(body.rate),
            "horizon": int(body.horizon),
            "stage1": [
                {
                    "p": _number_out(first.control.p),
                    "delta": _distribution_out(first.control.delta),
                    "cash_flow": _distribution_out(first.cash_flow),
                    "stage2": [
                        {
                            "p": _number_out(second.control.p),
                            "delta": _distribution_out(second.control.delta),
                            "cash_flow": _distribution_out(second.cash_flow),
                            "stage3": [
                                {"p": _number_out(leaf.p),
                                 "cash_flows": [_distribution_out(cf) for cf in leaf.cash_flows]}
                                for leaf in second.terminals
                            ],
                        }
                        for second in first.branches
                    ],
                }
                for first in body.stage1
            ],
        }
    data = {}
    if body.investment is not None:
        data["investment"] = _number_out(body.investment)
    data.update({
        "rate": _number_out(body.rate),
        "option_probability": _number_out(body.option_probability),
        "growth": _number_out(body.growth),
        "additional_investment": _distribution_out(body.additional_investment),
        "base_flows": [_distribution_out(cf) for cf in body.base_flows],
    })
    return data


def to_data(doc: ScenarioDocument) -> Dict[str, Any]:
    """Canonical plain-data form of a document (fixed key order)."""
    metadata = {"name": doc.metadata.name, "description": doc.metadata.description}
    if doc.metadata.option_class is not None:
        metadata["option_class"] = doc.metadata.option_class.value
    return {
        "schema_version": doc.schema_version,
        "kind": doc.kind.value,
        "metadata": metadata,
        "body": _body_out(doc.kind, doc.body),
    }


def save(doc: ScenarioDocument) -> bytes:
    """Serialize a valid document canonically.

    Raises:
        ScenarioError: If the document is invalid
    """
    if doc.schema_version not in SUPPORTED_SCHEMA_VERSIONS:
        raise ScenarioError(f"unsupported schema_version {doc.schema_version!r}", path="schema_version")
    _require_valid(doc)
    text = yaml.safe_dump(to_data(doc), sort_keys=False, default_flow_style=False, allow_unicode=True)
    return text.encode("utf-8")


def save_file(doc: ScenarioDocument, path: Union[str, os.PathLike]) -> None:
    """Write a document canonically to a file."""
    data = save(doc)
    with open(path, "wb") as f:
        f.write(data)
    logger.info(f"Saved {doc.kind.value} scenario to {path}")
