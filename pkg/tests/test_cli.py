"""Tests for the protoalg CLI."""

import json
import os
import tempfile
from unittest.mock import patch

import pytest

from protoalg.cli import main, parse_args, run_cli, setup_logging
from protoalg.errors import Issue
from protoalg.fixtures import (
    countdown,
    f1_prime,
    f1_unrolled,
    handoff,
    load_fixture,
    rename_document,
)
from protoalg.model import ValidationLevel
from protoalg.modelio import load_model
from protoalg.report import comparable, new_report


@pytest.fixture
def workdir():
    with tempfile.TemporaryDirectory() as temp_dir:
        yield temp_dir


def write_document(directory, name, document):
    path = os.path.join(directory, name)
    with open(path, "w") as f:
        json.dump(document, f)
    return path


class TestArguments:
    """Test argument parsing and logging setup."""

    def test_parse_args_defaults(self):
        """Test parsing command-line arguments with defaults."""
        args = parse_args(["validate", "model.json"])
        assert args.command == "validate"
        assert args.model == "model.json"
        assert args.level == "strict"
        assert args.bottom_policy is None
        assert args.state_cap is None
        assert args.json is None
        assert args.verbose is False

    def test_parse_args_with_values(self):
        """Test parsing command-line arguments with explicit values."""
        args = parse_args(
            ["check-equiv", "a.json", "b.json", "--variant", "computational"]
            + ["--state-cap", "50", "-v"]
        )
        assert (args.left, args.right) == ("a.json", "b.json")
        assert args.variant == "computational"
        assert args.state_cap == 50
        assert args.verbose is True

    @patch("logging.basicConfig")
    def test_setup_logging(self, mock_basic_config):
        """Test logging setup."""
        # Test normal logging
        setup_logging(False)
        args, kwargs = mock_basic_config.call_args
        assert kwargs["level"] == 20  # INFO level

        # Test verbose logging
        mock_basic_config.reset_mock()
        setup_logging(True)
        args, kwargs = mock_basic_config.call_args
        assert kwargs["level"] == 10  # DEBUG level

    def test_usage_errors(self):
        """Test that malformed command lines exit with 4 and no report."""
        for argv in (
            [],
            ["frobnicate", "model.json"],
            ["compute"],
            ["run", "model.json"],
            ["gen", "countdown", "2"],
            ["compute", "model.json", "--state-cap", "0"],
        ):
            code, report = run_cli(argv)
            assert code == 4, argv
            assert report is None


class TestValidate:
    """Test the validate command."""

    def test_valid_model(self, workdir):
        """Test that a well-formed model exits with 0."""
        path = write_document(workdir, "countdown.json", countdown())
        code, report = run_cli(["validate", path])
        assert code == 0
        model = report["results"]["model"]
        assert model["bottom_policy"] == "lifted"
        assert model["vertices"] == [4]
        assert report["models"][0]["name"] == "countdown-3"

    def test_invalid_model(self, workdir):
        """Test that a validation error exits with 2 and lists the issue."""
        document = countdown()
        document["components"][0]["edges"][0]["label"] = 1
        path = write_document(workdir, "bad.json", document)
        code, report = run_cli(["validate", path])
        assert code == 2
        assert [e["code"] for e in report["diagnostics"]["errors"]] == ["FunctionEdgeLabeled"]

    def test_syntax_error(self, workdir):
        """Test that malformed JSON exits with 2."""
        path = os.path.join(workdir, "broken.json")
        with open(path, "w") as f:
            f.write("{not json")
        code, report = run_cli(["validate", path])
        assert code == 2
        assert report["diagnostics"]["errors"][0]["code"] == "SyntaxError"

    def test_missing_file(self, workdir):
        """Test that a missing model file is a usage error."""
        code, _ = run_cli(["validate", os.path.join(workdir, "absent.json")])
        assert code == 4

    def test_report_is_started_from_command_line(self, workdir):
        """Test that the command line is recorded in a freshly started report."""
        path = write_document(workdir, "countdown.json", countdown())
        with patch("protoalg.cli.new_report", wraps=new_report) as mock_new_report:
            code, report = run_cli(["validate", path])
        assert code == 0
        mock_new_report.assert_called_once_with(["validate", path])
        assert report["command"] == ["validate", path]

    def test_main_returns_exit_code(self, workdir):
        """Test that main returns the exit code of the command."""
        path = write_document(workdir, "countdown.json", countdown())
        assert main(["validate", path]) == 0


class TestExecution:
    """Test the run and compute commands."""

    def test_run(self, workdir):
        """Test enumerating the runs from one input."""
        path = write_document(workdir, "countdown.json", countdown())
        code, report = run_cli(["run", path, "--input", "2"])
        assert code == 0
        assert report["results"]["runs"] == {"count": 1, "by_terminal": {"final": 1}}
        assert report["witnesses"]["runs"][0]["output"] == 0

    def test_run_unknown_input(self, workdir):
        """Test that an input outside the input domain is a usage error."""
        path = write_document(workdir, "countdown.json", countdown())
        code, _ = run_cli(["run", path, "--input", "7"])
        assert code == 4

    def test_compute(self, workdir):
        """Test computing the function of the sequential model."""
        path = write_document(workdir, "countdown.json", countdown())
        code, report = run_cli(["compute", path])
        assert code == 0
        assert report["results"]["total"] is True
        assert report["results"]["function"]["2"] == {
            "defined": True,
            "outputs": [0],
            "reason": None,
        }

    def test_compute_divergent(self, workdir):
        """Test that divergence is reported with a lasso witness."""
        path = write_document(workdir, "handoff.json", handoff())
        code, report = run_cli(["compute", path, "--input", "1"])
        assert code == 0
        assert report["results"]["function"]["1"]["reason"] == "DIVERGENT"
        assert report["results"]["total"] is False
        assert report["diagnostics"]["lassos"]

    def test_state_cap(self, workdir):
        """Test that exceeding the state cap exits with 3."""
        path = write_document(workdir, "countdown.json", countdown())
        code, report = run_cli(["compute", path, "--state-cap", "3"])
        assert code == 3
        assert report["resources"]["exceeded"]["cap"] == 3

    def test_invalid_environment_cap(self, workdir):
        """Test that a malformed cap in the environment is a usage error."""
        path = write_document(workdir, "countdown.json", countdown())
        with patch.dict(os.environ, {"PROTOALG_STATE_CAP": "many"}):
            code, _ = run_cli(["compute", path])
        assert code == 4

    def test_environment_cap(self, workdir):
        """Test that the cap is read from the environment."""
        path = write_document(workdir, "countdown.json", countdown())
        with patch.dict(os.environ, {"PROTOALG_STATE_CAP": "3"}):
            code, report = run_cli(["compute", path])
        assert code == 3
        assert report["resources"]["state_cap"] == 3

    def test_json_report_is_deterministic(self, workdir):
        """Test that repeated runs write the same report apart from its timestamp."""
        path = write_document(workdir, "handoff.json", handoff())
        out = os.path.join(workdir, "report.json")
        reports = []
        for _ in range(2):
            assert run_cli(["compute", path, "--json", out])[0] == 0
            with open(out) as f:
                reports.append(comparable(json.load(f)))
        assert reports[0] == reports[1]
        assert reports[0]["format"] == "protoalg-report"


class TestComparison:
    """Test the isomorphism, simulation and equivalence commands."""

    def test_check_iso(self, workdir):
        """Test that a renamed copy is isomorphic and an unrolled one is not."""
        left = write_document(workdir, "countdown.json", countdown())
        renamed = write_document(workdir, "renamed.json", rename_document(countdown()))
        unrolled = write_document(workdir, "unrolled.json", f1_unrolled())

        code, report = run_cli(["check-iso", left, renamed])
        assert code == 0
        assert report["verdict"] is True
        assert "isomorphism" in report["witnesses"]

        code, report = run_cli(["check-iso", left, unrolled])
        assert code == 1
        assert report["verdict"] is False

    @patch("protoalg.cli.verify_isomorphism")
    def test_check_iso_rejected_witness(self, mock_verify, workdir):
        """Test that a witness failing re-verification exits with 1."""
        mock_verify.return_value = [Issue("LabelNotPreserved", "tampered")]
        left = write_document(workdir, "countdown.json", countdown())
        renamed = write_document(workdir, "renamed.json", rename_document(countdown()))
        code, report = run_cli(["check-iso", left, renamed])
        assert code == 1
        assert report["verdict"] is False
        assert report["diagnostics"]["errors"][0]["code"] == "LabelNotPreserved"

    def test_check_equiv_variants(self, workdir):
        """Test that the extra loop test separates the variants."""
        left = write_document(workdir, "countdown.json", countdown())
        right = write_document(workdir, "prime.json", f1_prime())
        code, report = run_cli(["check-equiv", left, right])
        assert code == 1
        assert report["verdict"] is False
        code, report = run_cli(["check-equiv", left, right, "--variant", "computational"])
        assert code == 0
        assert report["results"]["equivalence"]["variant"] == "computational"
        assert report["witnesses"]["relation"]

    def test_check_sim_reports_consequences(self, workdir):
        """Test that a found simulation comes with checked consequences."""
        left = write_document(workdir, "countdown.json", countdown())
        right = write_document(workdir, "unrolled.json", f1_unrolled())
        code, report = run_cli(["check-sim", left, right])
        assert code == 0
        assert report["results"]["consequences"]["holds"] is True


class TestOutputs:
    """Test the commands that write files."""

    def test_sequentialize(self, workdir):
        """Test compiling the handoff model with a certificate."""
        path = write_document(workdir, "handoff.json", handoff())
        out = os.path.join(workdir, "seq.json")
        code, report = run_cli(["sequentialize", path, "-o", out, "--certify"])
        assert code == 0
        assert report["verdict"] is True
        assert report["results"]["sequentialization"]["certified"] is True
        assert load_model(out, ValidationLevel.LENIENT).is_sequential

    def test_sequentialize_strict_policy(self, workdir):
        """Test that the strict bottom policy exits with 2."""
        path = write_document(workdir, "handoff.json", handoff())
        out = os.path.join(workdir, "seq.json")
        code, _ = run_cli(["sequentialize", path, "-o", out, "--bottom-policy", "strict"])
        assert code == 2
        assert not os.path.exists(out)

    def test_export_dot(self, workdir):
        """Test exporting component graphs and a state graph."""
        path = write_document(workdir, "countdown.json", countdown())
        out = os.path.join(workdir, "model.dot")
        assert run_cli(["export-dot", path, "-o", out])[0] == 0
        with open(out) as f:
            assert f.read().startswith('digraph "countdown-3"')

        code, report = run_cli(["export-dot", path, "--state-graph", "--input", "2", "-o", out])
        assert code == 0
        assert report["results"]["state_graph"]["summary"]["total"] == 8

    def test_export_dot_usage(self, workdir):
        """Test that --state-graph and --input must come together."""
        path = write_document(workdir, "countdown.json", countdown())
        out = os.path.join(workdir, "model.dot")
        assert run_cli(["export-dot", path, "--state-graph", "-o", out])[0] == 4
        assert run_cli(["export-dot", path, "--input", "2", "-o", out])[0] == 4

    def test_gen(self, workdir):
        """Test generating an example model."""
        out = os.path.join(workdir, "gen.json")
        code, _ = run_cli(["gen", "countdown", "2", "-o", out])
        assert code == 0
        assert load_model(out) == load_fixture("countdown", 2)

    def test_gen_bad_size(self, workdir):
        """Test that an invalid generator size is a usage error."""
        out = os.path.join(workdir, "gen.json")
        assert run_cli(["gen", "handoff", "0", "-o", out])[0] == 4
        assert not os.path.exists(out)


if __name__ == "__main__":
    pytest.main(["-v", "test_cli.py"])
