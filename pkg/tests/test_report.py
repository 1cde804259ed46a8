"""Tests for analysis reports."""

import json
import os
import tempfile

from protoalg.equivalence import check_equivalence
from protoalg.errors import Issue
from protoalg.fixtures import load_fixture
from protoalg.report import (
    add_issues,
    comparable,
    equivalence_results,
    function_results,
    new_report,
    render_text,
    write_report,
)
from protoalg.schema import validate_report
from protoalg.semantics import Variant, computed_function


class TestReport:
    """Test report building and rendering."""

    def test_new_report(self):
        """Test that a new report records its models."""
        model = load_fixture("countdown")
        report = new_report(["compute", "countdown.json"], [model])
        assert validate_report(report)
        assert report["models"][0]["name"] == "countdown-3"
        assert len(report["models"][0]["sha256"]) == 64

    def test_function_results(self):
        """Test the per-input table of a computed function."""
        results = function_results(computed_function(load_fixture("handoff")))
        assert list(results["function"]) == ["0", "1"]
        assert results["function"]["1"] == {"defined": False, "outputs": [2], "reason": "DIVERGENT"}
        assert results["total"] is False

    def test_equivalence_results(self):
        """Test that translations are rendered with value tokens."""
        left = load_fixture("countdown")
        result = check_equivalence(left, left, Variant.ALGORITHMIC)
        entry = equivalence_results(result)
        assert entry["verdict"] is True
        assert entry["gamma_i"] == {"0": 0, "1": 1, "2": 2, "3": 3}
        assert entry["relation_size"] > 0

    def test_issues_keep_witnesses(self):
        """Test that issue witnesses become plain JSON values."""
        report = new_report(["validate"])
        add_issues(report, [Issue("CycleWithoutFunctionVertex", "cycle", "main", ["a", "b", "a"])])
        assert report["diagnostics"]["errors"] == [
            {
                "code": "CycleWithoutFunctionVertex",
                "message": "cycle",
                "position": "main",
                "witness": ["a", "b", "a"],
            }
        ]

    def test_render_text(self):
        """Test the human-readable rendering."""
        report = new_report(["compute", "m.json"], [load_fixture("countdown")])
        report["verdict"] = True
        report["results"].update(function_results(computed_function(load_fixture("countdown"))))
        text = render_text(report)
        lines = text.splitlines()
        assert lines[0] == "command: compute m.json"
        assert lines[1].startswith("model: countdown-3 (")
        assert lines[2] == "verdict: holds"
        assert "  2:" in lines
        assert "    outputs: [0]" in lines
        assert lines[-1] == "exit code: 0"
        assert "diagnostics" not in text

    def test_write_report(self):
        """Test that written reports load back and compare equal."""
        report = new_report(["gen"])
        with tempfile.TemporaryDirectory() as temp_dir:
            path = os.path.join(temp_dir, "out", "report.json")
            write_report(report, path)
            with open(path) as f:
                loaded = json.load(f)
        assert comparable(loaded) == comparable(report)
        assert "generated_at" not in comparable(report)
