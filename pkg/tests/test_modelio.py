"""Tests for reading and writing model documents."""

import json
import os
import tempfile
from unittest.mock import patch

import pytest

from protoalg.errors import ModelParseError, ModelValidationError
from protoalg.fixtures import countdown, handoff, load_document, load_fixture
from protoalg.model import BOT, BottomPolicy, ValidationLevel, validate_model
from protoalg.modelio import (
    load_model,
    model_digest,
    model_to_document,
    parse_document,
    parse_model,
    parse_model_text,
    save_model,
    serialize_model,
    write_text_atomic,
)


def parse_codes(text):
    with pytest.raises(ModelParseError) as excinfo:
        parse_model_text(text)
    return excinfo.value.codes


class TestParse:
    """Test parsing of model documents."""

    def test_parse_countdown(self):
        """Test that a fixture document parses into raw structures."""
        raw = parse_document(countdown())
        assert raw.name == "countdown-3"
        assert raw.alphabet.predicate == ["z"]
        assert raw.components[0].root == "r"
        assert raw.interpretation.tables["dec"][BOT] is BOT
        assert raw.interpretation.tables["dec"][2] == 1

    def test_binary_tables(self):
        """Test that setting tables become two-level mappings."""
        raw = parse_document(handoff())
        assert raw.interpretation.tables["put"][1][BOT] == 1
        assert raw.interpretation.tables["take"][BOT][2] == 2

    def test_syntax_error(self):
        """Test that malformed JSON is reported with its position."""
        with pytest.raises(ModelParseError) as excinfo:
            parse_model_text("")
        issue = excinfo.value.issues[0]
        assert issue.code == "SyntaxError"
        assert issue.position == "1:1"

    def test_duplicate_key(self):
        """Test that repeated object keys are rejected."""
        assert parse_codes('{"name": "a", "name": "b"}') == ["DuplicateKey"]

    def test_missing_fields(self):
        """Test that all missing top-level fields are reported at once."""
        document = countdown()
        del document["domains"]
        del document["components"]
        with pytest.raises(ModelParseError) as excinfo:
            parse_document(document)
        assert excinfo.value.codes == ["MissingField", "MissingField"]
        assert {i.position for i in excinfo.value.issues} == {"$.domains", "$.components"}

    def test_unknown_field(self):
        """Test that unknown fields are rejected."""
        document = countdown()
        document["extra"] = 1
        assert parse_codes(json.dumps(document)) == ["UnknownField"]

    def test_wrong_format(self):
        """Test that documents of another format are rejected."""
        document = countdown()
        document["format"] = "something-else"
        assert parse_codes(json.dumps(document)) == ["InvalidField"]

    def test_undeclared_value(self):
        """Test that table cells must come from the declared domain."""
        document = countdown()
        document["interpretation"]["tables"]["dec"]["2"] = 7
        with pytest.raises(ModelParseError) as excinfo:
            parse_document(document)
        assert excinfo.value.codes == ["UndeclaredValue"]
        assert excinfo.value.issues[0].position == "$.interpretation.tables.dec.2"

    def test_invalid_bottom_policy(self):
        """Test that the bottom policy must be strict or lifted."""
        document = countdown()
        document["interpretation"]["bottom_policy"] = "lazy"
        assert parse_codes(json.dumps(document)) == ["InvalidField"]

    def test_duplicate_vertex_id(self):
        """Test that vertex ids are unique per component."""
        document = countdown()
        document["components"][0]["vertices"].append({"id": "v1", "label": "dec"})
        assert parse_codes(json.dumps(document)) == ["DuplicateId"]

    def test_name_defaults_to_file_stem(self):
        """Test that a document without name is named after its file."""
        document = countdown()
        del document["name"]
        with tempfile.TemporaryDirectory() as temp_dir:
            path = os.path.join(temp_dir, "loop.json")
            with open(path, "w") as f:
                json.dump(document, f)
            assert parse_model(path).name == "loop"


class TestSerialize:
    """Test canonical serialization."""

    def test_round_trip_is_stable(self):
        """Test that serialize, parse, validate, serialize gives the same bytes."""
        for model in (load_fixture("countdown"), load_fixture("handoff")):
            text = serialize_model(model)
            again = validate_model(parse_model_text(text))
            assert again == model
            assert serialize_model(again) == text

    def test_canonical_key_order(self):
        """Test that documents list their keys sorted."""
        document = model_to_document(load_fixture("countdown"))
        assert list(document) == sorted(document)
        assert list(document["components"][0]) == sorted(document["components"][0])

    def test_bot_rows_last(self):
        """Test that the BOT row follows the domain rows."""
        document = model_to_document(load_fixture("countdown"))
        assert list(document["interpretation"]["tables"]["dec"]) == ["0", "1", "2", "3", "_bot"]
        assert document["interpretation"]["tables"]["dec"]["_bot"] == "_bot"

    def test_strict_policy_has_no_bot_rows(self):
        """Test that strict models serialize without BOT rows."""
        model = load_fixture("countdown", bottom_policy=BottomPolicy.STRICT)
        tables = model_to_document(model)["interpretation"]["tables"]
        assert "_bot" not in tables["dec"]
        assert model_to_document(model)["interpretation"]["bottom_policy"] == "strict"

    def test_digest(self):
        """Test that equal models have equal digests and different ones do not."""
        assert model_digest(load_fixture("countdown")) == model_digest(load_fixture("countdown"))
        assert model_digest(load_fixture("countdown")) != model_digest(load_fixture("countdown", 2))


class TestFiles:
    """Test loading and saving model files."""

    def test_save_and_load(self):
        """Test that a saved model loads back equal."""
        model = load_fixture("handoff")
        with tempfile.TemporaryDirectory() as temp_dir:
            path = os.path.join(temp_dir, "models", "handoff.json")
            save_model(model, path)
            assert load_model(path) == model

    def test_load_invalid_model(self):
        """Test that validation errors surface from load_model."""
        document = countdown()
        document["components"][0]["edges"][0]["label"] = 1
        with tempfile.TemporaryDirectory() as temp_dir:
            path = os.path.join(temp_dir, "bad.json")
            with open(path, "w") as f:
                json.dump(document, f)
            with pytest.raises(ModelValidationError) as excinfo:
                load_model(path)
        assert excinfo.value.codes == ["FunctionEdgeLabeled"]

    def test_load_lenient_logs_warnings(self):
        """Test that lenient loading logs each warning."""
        document = countdown()
        document["domains"]["main"].append(9)
        for name, value in (("dec", 9), ("z", 0), ("fin", 0)):
            document["interpretation"]["tables"][name]["9"] = value
        with tempfile.TemporaryDirectory() as temp_dir:
            path = os.path.join(temp_dir, "wide.json")
            with open(path, "w") as f:
                json.dump(document, f)
            with patch("protoalg.modelio.logger") as mock_logger:
                model = load_model(path, ValidationLevel.LENIENT)
        assert len(model.warnings) == 1
        mock_logger.warning.assert_called_once()

    def test_atomic_write_leaves_no_temp_files(self):
        """Test that a write leaves only the target file."""
        with tempfile.TemporaryDirectory() as temp_dir:
            path = os.path.join(temp_dir, "out.txt")
            write_text_atomic(path, "first\n")
            write_text_atomic(path, "second\n")
            assert os.listdir(temp_dir) == ["out.txt"]
            with open(path) as f:
                assert f.read() == "second\n"

    def test_atomic_write_failure_keeps_old_content(self):
        """Test that a failed replace leaves the previous file intact."""
        with tempfile.TemporaryDirectory() as temp_dir:
            path = os.path.join(temp_dir, "out.txt")
            write_text_atomic(path, "kept\n")
            with patch("os.replace", side_effect=OSError("disk full")):
                with pytest.raises(OSError):
                    write_text_atomic(path, "lost\n")
            assert os.listdir(temp_dir) == ["out.txt"]
            with open(path) as f:
                assert f.read() == "kept\n"

    def test_in_memory_document_matches_file(self):
        """Test that loading from a document and from a file agree."""
        with tempfile.TemporaryDirectory() as temp_dir:
            path = os.path.join(temp_dir, "countdown.json")
            with open(path, "w") as f:
                json.dump(countdown(), f)
            assert load_model(path) == load_document(countdown())
