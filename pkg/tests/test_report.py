"""Unit tests for verification reports."""
import json

import mpmath as mp
import pytest

from src.core.report import CheckRecord, ReportFormatter, VerificationReport, number_field


@pytest.fixture
def report():
    """A report with one passing, one failing and one unresolved check."""
    report = VerificationReport(config={"d": -23, "c": 1, "char_index": 1, "prec": 128})
    report.add(CheckRecord.compare("stark-unit", "stark-unit-formula", mp.mpf(1), mp.mpf(1), 1e-10))
    report.add(CheckRecord.compare("petersson", "petersson-rankin-selberg", mp.mpf(1), mp.mpf(2), 1e-10))
    report.add(CheckRecord(check_id="rs-constant", anchor="petersson-adjoint-constant",
                           error="RecognitionError: no rational"))
    report.constants["stark-regulator.regulator_ratio"] = "2"
    return report


class TestCheckRecord:
    """Test cases for CheckRecord."""

    def test_compare_pass(self):
        """Equal sides pass."""
        record = CheckRecord.compare("kronecker-limit", "kronecker-limit-formula",
                                     mp.mpf("0.5"), mp.mpf("0.5") + mp.mpf(10) ** -20, 1e-12)
        assert record.status == "pass"
        assert record.anchor == "kronecker-limit-formula"

    def test_compare_fail(self):
        """A relative error above tolerance fails."""
        record = CheckRecord.compare("petersson", "petersson-rankin-selberg", mp.mpf(1), mp.mpf("1.1"), 1e-3)
        assert record.status == "fail"
        assert record.rel_error["display"].startswith("0.09")

    def test_default_status(self):
        """A record without a comparison is unresolved."""
        assert CheckRecord(check_id="x", anchor="y").status == "unresolved"

    def test_number_field(self):
        """Numbers keep a full-precision value next to the display string."""
        with mp.workdps(30):
            field = number_field(mp.mpf(1) / 3, digits=5)
        assert field["display"] == "0.33333"
        assert field["value"].startswith("0.3333333333333333333")
        assert number_field(None) == {"value": "", "display": "-"}
        assert number_field("2/3")["value"] == "2/3"


class TestVerificationReport:
    """Test cases for VerificationReport."""

    def test_status_lists(self, report):
        assert [c.check_id for c in report.failed] == ["petersson"]
        assert [c.check_id for c in report.unresolved] == ["rs-constant"]
        assert report.by_id("stark-unit").status == "pass"
        assert report.by_id("missing") is None

    def test_exit_code(self, report):
        """Failures give exit code 1, unresolved checks alone do not."""
        assert report.exit_code() == 1
        report.checks = [c for c in report.checks if c.status != "fail"]
        assert report.exit_code() == 0


class TestReportFormatter:
    """Test cases for ReportFormatter."""

    @pytest.fixture
    def formatter(self, tmp_path):
        return ReportFormatter(str(tmp_path))

    def test_json_schema(self, formatter, report):
        """JSON output carries the schema version and one entry per check."""
        data = json.loads(formatter.to_json(report))
        assert data["schema_version"] == "1.0"
        assert len(data["checks"]) == 3
        assert data["checks"][0]["anchor"] == "stark-unit-formula"
        assert data["constants"]["stark-regulator.regulator_ratio"] == "2"

    def test_markdown(self, formatter, report):
        markdown = formatter.format_markdown(report)
        assert "# StarkCheck report" in markdown
        assert "| petersson |" in markdown
        assert "d = -23, c = 1" in markdown

    def test_save_json(self, formatter, report, tmp_path):
        path = formatter.save_json(report, str(tmp_path / "out" / "report.json"))
        with open(path, "r", encoding="utf-8") as f:
            assert json.load(f)["config"]["d"] == -23

    def test_save_default_paths(self, formatter, report):
        assert formatter.save_json(report).endswith(".json")
        assert formatter.save_markdown(report).endswith(".md")

    def test_rich_table(self, formatter, report):
        table = formatter.rich_table(report)
        assert table.row_count == 3
