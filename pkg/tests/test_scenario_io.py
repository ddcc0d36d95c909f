import io

import pytest

from src.models import OptionClass, ScenarioKind
from src.scenario_io import ScenarioError, load, loads, save, save_file
from tests.conftest import BUNDLED, scenario_path

MINIMAL_BRCF = """\
schema_version: '1'
kind: brcf_one_stage
body:
  rate: 0.2
  base_flows:
  - {flow}
"""


def _brcf(flow: str) -> str:
    return MINIMAL_BRCF.format(flow=flow)


class TestBundledFiles:
    @pytest.mark.parametrize("name", BUNDLED)
    def test_files_are_canonical(self, name):
        path = scenario_path(name)
        assert save(load(path)) == path.read_bytes()

    @pytest.mark.parametrize("name", BUNDLED)
    def test_reload_gives_same_document(self, name):
        doc = load(scenario_path(name))
        assert loads(save(doc)) == doc
        assert save(loads(save(doc))) == save(doc)

    def test_kinds_and_metadata(self):
        assert load(scenario_path("base_two_scenario")).kind == ScenarioKind.TWO_SCENARIO
        doc = load(scenario_path("switching_option"))
        assert doc.kind == ScenarioKind.OPTION_TREE
        assert doc.metadata.option_class == OptionClass.SWITCHING
        assert doc.metadata.name == "switching_option"
        assert load(scenario_path("gauss_base")).metadata.option_class is None


class TestSources:
    def test_bytes_and_stream(self):
        data = scenario_path("gauss_option").read_bytes()
        expected = load(scenario_path("gauss_option"))
        assert load(data) == expected
        assert load(io.BytesIO(data)) == expected
        assert load(io.StringIO(data.decode("utf-8"))) == expected

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioError, match="cannot read"):
            load(tmp_path / "nope.yaml")

    def test_save_file(self, tmp_path):
        doc = load(scenario_path("reduction_option"))
        target = tmp_path / "copy.yaml"
        save_file(doc, target)
        assert target.read_bytes() == scenario_path("reduction_option").read_bytes()


class TestErrors:
    def test_probability_out_of_range_names_field(self):
        text = scenario_path("reduction_option").read_text().replace("  - p: 0.5\n", "  - p: 1.3\n", 1)
        with pytest.raises(ScenarioError) as excinfo:
            loads(text)
        assert "stage1[1].p" in str(excinfo.value)
        assert "stage1[1].p" in excinfo.value.report.paths

    def test_syntax_error_has_line(self):
        with pytest.raises(ScenarioError) as excinfo:
            loads("schema_version: '1'\nkind: option_tree\nbody: [1, 2\n")
        assert excinfo.value.line is not None
        assert str(excinfo.value).startswith("line ")

    def test_unsupported_schema_version(self):
        text = _brcf("1200.0").replace("'1'", "'2'")
        with pytest.raises(ScenarioError) as excinfo:
            loads(text)
        assert excinfo.value.path == "schema_version"

    def test_unknown_kind(self):
        with pytest.raises(ScenarioError) as excinfo:
            loads(_brcf("1200.0").replace("brcf_one_stage", "lattice"))
        assert excinfo.value.path == "kind"

    def test_unknown_option_class(self):
        text = _brcf("1200.0").replace("body:", "metadata:\n  option_class: barrier\nbody:")
        with pytest.raises(ScenarioError) as excinfo:
            loads(text)
        assert excinfo.value.path == "metadata.option_class"

    def test_uniform_bounds_reversed(self):
        with pytest.raises(ScenarioError) as excinfo:
            loads(_brcf("{kind: uniform, lo: 2200.0, hi: 1800.0}"))
        assert excinfo.value.path == "body.base_flows[1]"

    def test_missing_field_names_path(self):
        with pytest.raises(ScenarioError) as excinfo:
            loads(_brcf("{kind: uniform, lo: 1800.0}"))
        assert excinfo.value.path == "body.base_flows[1].hi"

    def test_gaussian_needs_spread(self):
        with pytest.raises(ScenarioError):
            loads(_brcf("{kind: gaussian, mean: 2000.0}"))

    def test_not_a_number(self):
        with pytest.raises(ScenarioError) as excinfo:
            loads(_brcf("'lots'"))
        assert excinfo.value.path == "body.base_flows[1]"

    def test_unknown_field(self):
        with pytest.raises(ScenarioError, match="unknown field"):
            loads(_brcf("1200.0") + "  volatility: 0.3\n")

    def test_save_rejects_invalid_document(self):
        import dataclasses
        doc = load(scenario_path("gauss_option"))
        bad = dataclasses.replace(doc, body=dataclasses.replace(doc.body, option_probability=1.5))
        with pytest.raises(ScenarioError) as excinfo:
            save(bad)
        assert "option_probability" in excinfo.value.report.paths


class TestCanonicalForm:
    def test_cv_only_gaussian_records_sd(self):
        doc = loads(_brcf("{kind: gaussian, mean: 2000, cv: 0.1}"))
        text = save(doc).decode("utf-8")
        assert "sd: 200.0" in text
        assert "cv: 0.1" in text

    def test_integers_become_floats(self):
        text = save(loads(_brcf("1200"))).decode("utf-8")
        assert "- 1200.0" in text
        assert "rate: 0.2" in text

    def test_defaults_are_written(self):
        text = save(loads(_brcf("1200.0"))).decode("utf-8")
        assert "option_probability: 0.0" in text
        assert "investment" not in text.split("additional_investment")[0]
