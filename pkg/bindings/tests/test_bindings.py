from __future__ import annotations

import json
import subprocess
import sys
from fractions import Fraction

import pandas as pd
import pytest

from deprof_bindings import (
    ALGORITHM_KINDS,
    BindingError,
    ConversionError,
    StateError,
    create,
    execute,
    get_results,
    load_data,
)

CSV = (
    "city,zip\n"
    "barnaul,656000\n"
    "barnaul,656000\n"
    "barnaul,656001\n"
    "moscow,101000\n"
    "moscow,101000\n"
)


class TestCreate:
    def test_defaults(self):
        handle = create("fd_discovery")
        assert handle.state == "configured"
        assert handle.options["max_lhs"] == 3

    def test_unknown_kind_lists_valid_ones(self):
        with pytest.raises(BindingError) as exc:
            create("bogus")
        for kind in ALGORITHM_KINDS:
            assert kind in str(exc.value)

    def test_handles_are_independent(self):
        a = create("fd_discovery")
        b = create("fd_discovery")
        a.set_option("max_lhs", 1)
        assert b.options["max_lhs"] == 3


class TestLoadData:
    def test_in_memory_dataframe(self):
        frame = pd.DataFrame({"a": [1, 2], "b": ["x", "y"]})
        handle = load_data(create("fd_discovery"), frame)
        assert handle._relation.row_count == 2
        assert handle._relation.attributes[0].inferred_type == "integer"

    def test_path_delegates_to_csv_loader(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text(CSV, encoding="utf-8")
        handle = load_data(create("fd_discovery"), str(path))
        assert handle._relation.row_count == 5

    def test_mixed_type_column_becomes_string(self):
        frame = pd.DataFrame({"a": [1, "x"], "b": [1, 2]})
        handle = load_data(create("fd_discovery"), frame)
        assert handle._relation.attributes[0].inferred_type == "string"

    def test_nan_becomes_null(self):
        frame = pd.DataFrame({"a": [1.5, float("nan")], "b": ["x", "y"]})
        handle = load_data(create("fd_discovery"), frame)
        assert handle._relation.is_null(1, 0)

    def test_source_mutation_does_not_leak(self):
        frame = pd.DataFrame({"a": [1, 1, 2], "b": [5, 5, 7]})
        handle = load_data(create("fd_discovery"), frame)
        frame.loc[0, "b"] = 999  # mutate after load
        execute(handle)
        assert (("a",), "b") in get_results(handle)

    def test_unsupported_type_names_column(self):
        frame = pd.DataFrame({"weird": [object(), object()]})
        with pytest.raises(ConversionError, match="weird"):
            load_data(create("fd_discovery"), frame)

    def test_rows_with_columns(self):
        handle = load_data(create("fd_discovery"), [[1, "x"], [2, "y"]], columns=["a", "b"])
        assert handle._relation.attribute_names() == ("a", "b")


class TestLifecycle:
    def test_results_before_execute(self):
        handle = load_data(create("fd_discovery"), pd.DataFrame({"a": [1]}))
        with pytest.raises(StateError):
            get_results(handle)

    def test_execute_without_data(self):
        with pytest.raises(StateError):
            execute(create("fd_discovery"))

    def test_options_frozen_after_execute(self):
        handle = load_data(create("fd_discovery"), pd.DataFrame({"a": [1], "b": [2]}))
        execute(handle)
        with pytest.raises(StateError):
            handle.set_option("max_lhs", 2)
        with pytest.raises(StateError):
            execute(handle)

    def test_single_row_constant_columns(self):
        handle = load_data(create("fd_discovery"), pd.DataFrame({"a": [1], "b": [2]}))
        results = get_results(execute(handle))
        assert ((), "a") in results and ((), "b") in results


class TestResults:
    def test_fd_results_are_name_pairs(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text(CSV, encoding="utf-8")
        handle = execute(load_data(create("fd_discovery"), str(path)))
        results = get_results(handle)
        assert all(isinstance(lhs, tuple) and isinstance(rhs, str) for lhs, rhs in results)
        # plain values filter naturally with comprehensions
        zips = [lhs for lhs, rhs in results if rhs == "city"]
        assert ("zip",) in zips

    def test_afd_results_carry_exact_errors(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text(CSV, encoding="utf-8")
        handle = create("afd_discovery").set_option("threshold", "0.3").set_option("max_lhs", 1)
        results = get_results(execute(load_data(handle, str(path))))
        by_key = {(lhs, rhs): error for lhs, rhs, error in results}
        # violating pairs: (656000, 656001) twice inside barnaul -> 2 of C(5,2)
        assert by_key[(("city",), "zip")] == Fraction(1, 5)

    def test_grouped_single_attribute_afds(self):
        frame = pd.DataFrame({"id": [1, 2, 3], "v": ["a", "a", "b"], "w": [9, 9, 8]})
        handle = create("single_attribute_afds").set_option("threshold", 0)
        grouped = get_results(execute(load_data(handle, frame)))
        assert grouped["id"] == ["v", "w"]

    def test_mfd_validation_tuple(self):
        frame = pd.DataFrame({"g": [1, 1, 1], "v": [3, 5, 9]})
        handle = (
            create("mfd_validation")
            .set_option("lhs", ["g"])
            .set_option("rhs", ["v"])
            .set_option("p", 5)
        )
        holds, diameter, violations = get_results(execute(load_data(handle, frame)))
        assert not holds and diameter == 6
        assert violations[0][0] == (0, 1, 2)


class TestCrossInterfaceConsistency:
    """Binding results must be value-equal to the CLI's JSON output."""

    def _cli_json(self, args: list[str]) -> dict:
        proc = subprocess.run(
            [sys.executable, "-m", "deprof", *args, "--output", "json"],
            capture_output=True,
            timeout=120,
        )
        assert proc.returncode == 0, proc.stderr.decode()
        return json.loads(proc.stdout)

    def test_fd_discovery_matches_cli(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text(CSV, encoding="utf-8")
        handle = execute(load_data(create("fd_discovery").set_option("max_lhs", 2), str(path)))
        binding = get_results(handle)
        doc = self._cli_json(["discover", "fd", str(path), "--max-lhs", "2"])
        cli = [(tuple(fd["lhs"]), fd["rhs"]) for fd in doc["fds"]]
        assert binding == cli

    def test_afd_discovery_matches_cli(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text(CSV, encoding="utf-8")
        handle = create("afd_discovery").set_option("threshold", "0.3").set_option("max_lhs", 2)
        binding = get_results(execute(load_data(handle, str(path))))
        doc = self._cli_json(
            ["discover", "afd", str(path), "--threshold", "0.3", "--max-lhs", "2"]
        )
        cli = [
            (
                tuple(afd["lhs"]),
                afd["rhs"],
                Fraction(afd["error"]["numerator"], afd["error"]["denominator"]),
            )
            for afd in doc["afds"]
        ]
        assert binding == cli
