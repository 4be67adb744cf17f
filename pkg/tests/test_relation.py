from __future__ import annotations

import random

import numpy as np
import pytest

from deprof.relation import (
    CsvConfig,
    CsvFormatError,
    NULL_ID,
    StrippedPartition,
    build_pli,
    from_rows,
    intersect_pli,
    load_csv,
    partition_for,
    replace_values,
    to_csv,
)
from conftest import random_relation
from oracles import brute_clusters


def clusters_as_sets(p: StrippedPartition) -> set[frozenset[int]]:
    return {frozenset(c) for c in p.clusters}


class TestLoadCsv:
    def test_integer_inference(self):
        rel = load_csv("a,b\n1,2")
        assert rel.row_count == 1
        assert [a.inferred_type for a in rel.attributes] == ["integer", "integer"]
        assert rel.value(0, 0) == 1 and rel.value(0, 1) == 2

    def test_empty_field_is_null(self):
        rel = load_csv("a,b\n,2")
        assert rel.is_null(0, 0)
        assert int(rel.columns[0][0]) == NULL_ID

    def test_mixed_tokens_fall_back_to_string(self):
        rel = load_csv("a\nx\n3")
        assert rel.attributes[0].inferred_type == "string"
        assert rel.value(1, 0) == "3"

    def test_float_inference(self):
        rel = load_csv("a\n1\n2.5")
        assert rel.attributes[0].inferred_type == "float"
        assert rel.value(0, 0) == 1.0

    def test_numeric_tokens_encode_by_value(self):
        # "1.0" and "1" are the same float and must share a code
        rel = load_csv("a\n1.0\n1\n2")
        assert int(rel.columns[0][0]) == int(rel.columns[0][1])

    def test_ragged_row_names_line(self):
        with pytest.raises(CsvFormatError, match="line 3"):
            load_csv("a,b\n1,2\n3")

    def test_empty_input(self):
        with pytest.raises(CsvFormatError):
            load_csv("")

    def test_no_header(self):
        rel = load_csv("1,2\n3,4", CsvConfig(has_header=False))
        assert rel.attribute_names() == ("col_0", "col_1")
        assert rel.row_count == 2

    def test_custom_separator_and_null_token(self):
        rel = load_csv("a;b\nNA;2", CsvConfig(separator=";", null_token="NA"))
        assert rel.is_null(0, 0)
        assert rel.value(0, 1) == 2

    def test_nan_token_is_not_numeric(self):
        rel = load_csv("a\nnan\n1")
        assert rel.attributes[0].inferred_type == "string"

    def test_dictionary_first_occurrence_order(self):
        rel = load_csv("a\nz\ny\nz\nx")
        assert list(rel.dictionaries[0]) == [None, "z", "y", "x"]

    def test_roundtrip(self):
        text = "a,b\n1,x\n2,\n1,y\n"
        rel = load_csv(text)
        assert to_csv(rel) == text


class TestBuildPli:
    def test_singletons_stripped(self):
        rel = from_rows(["a"], [["a"], ["a"], ["b"], ["a"]])
        p = build_pli(rel, 0)
        assert clusters_as_sets(p) == {frozenset({0, 1, 3})}

    def test_all_distinct_gives_empty(self):
        rel = from_rows(["a"], [[1], [2], [3]])
        assert build_pli(rel, 0).clusters == ()

    def test_two_clusters(self):
        rel = from_rows(["a"], [["x"], ["x"], ["y"], ["y"]])
        assert clusters_as_sets(build_pli(rel, 0)) == {frozenset({0, 1}), frozenset({2, 3})}

    def test_nulls_group_together_by_default(self):
        rel = from_rows(["a"], [[None], [None], [1]])
        assert clusters_as_sets(build_pli(rel, 0)) == {frozenset({0, 1})}

    def test_nulls_distinct_strips_null_rows(self):
        rel = from_rows(["a"], [[None], [None], [1]], nulls_distinct=True)
        assert build_pli(rel, 0).clusters == ()

    def test_canonical_ordering(self):
        rel = from_rows(["a"], [["y"], ["x"], ["y"], ["x"]])
        p = build_pli(rel, 0)
        assert p.clusters == ((0, 2), (1, 3))


class TestIntersectPli:
    def test_idempotent(self):
        rel = from_rows(["a", "b"], [[1, 1], [1, 2], [2, 1], [1, 1]])
        p = build_pli(rel, 0)
        assert intersect_pli(p, p).clusters == p.clusters

    def test_spec_example(self):
        rel = from_rows(["a", "b"], [["a", "x"], ["a", "y"], ["b", "x"], ["b", "x"]])
        p = build_pli(rel, 0)
        q = build_pli(rel, 1)
        assert clusters_as_sets(p) == {frozenset({0, 1}), frozenset({2, 3})}
        assert clusters_as_sets(q) == {frozenset({0, 2, 3})}
        assert clusters_as_sets(intersect_pli(p, q)) == {frozenset({2, 3})}

    def test_empty_absorbs(self):
        rel = from_rows(["a", "b"], [[1, 1], [2, 1], [3, 1]])
        empty = build_pli(rel, 0)
        full = build_pli(rel, 1)
        assert empty.clusters == ()
        assert intersect_pli(empty, full).clusters == ()

    def test_mismatched_n(self):
        p = StrippedPartition(frozenset({0}), ((0, 1),), 3)
        q = StrippedPartition(frozenset({1}), ((0, 1),), 4)
        with pytest.raises(ValueError):
            intersect_pli(p, q)

    def test_commutative_and_matches_vector_path(self, rng):
        for _ in range(50):
            rel = random_relation(rng, max_attrs=4, max_rows=40, null_rate=0.1)
            i = rng.randrange(rel.attribute_count)
            j = rng.randrange(rel.attribute_count)
            p, q = build_pli(rel, i), build_pli(rel, j)
            forward = clusters_as_sets(intersect_pli(p, q))
            backward = clusters_as_sets(intersect_pli(q, p))
            assert forward == backward
            assert forward == clusters_as_sets(partition_for(rel, [i, j]))

    def test_associative(self, rng):
        for _ in range(30):
            rel = random_relation(rng, max_attrs=3, max_rows=40, null_rate=0.1)
            if rel.attribute_count < 3:
                continue
            p, q, r = (build_pli(rel, a) for a in range(3))
            left = clusters_as_sets(intersect_pli(intersect_pli(p, q), r))
            right = clusters_as_sets(intersect_pli(p, intersect_pli(q, r)))
            assert left == right


class TestPartitionInvariants:
    def test_brute_force_grouping(self, rng):
        for _ in range(60):
            nulls_distinct = rng.random() < 0.5
            rel = random_relation(
                rng, max_attrs=5, max_rows=60, null_rate=0.15, nulls_distinct=nulls_distinct
            )
            size = rng.randint(1, rel.attribute_count)
            attrs = rng.sample(range(rel.attribute_count), size)
            got = clusters_as_sets(partition_for(rel, attrs))
            assert got == brute_clusters(rel, attrs)

    def test_size_bounds(self, rng):
        for _ in range(30):
            rel = random_relation(rng, max_attrs=3, max_rows=50)
            p = build_pli(rel, rng.randrange(rel.attribute_count))
            assert sum(len(c) for c in p.clusters) <= rel.row_count
            assert len(p.clusters) <= rel.row_count // 2


class TestEdits:
    def test_replace_values(self):
        rel = from_rows(["a", "b"], [[1, "x"], [2, "y"]])
        out = replace_values(rel, [(0, 1, "z")])
        assert out.value(0, 1) == "z"
        assert out.value(1, 1) == "y"
        assert rel.value(0, 1) == "x"  # original untouched

    def test_fingerprint_changes_with_content(self):
        rel = from_rows(["a"], [[1], [2]])
        other = replace_values(rel, [(0, 0, 3)])
        assert rel.fingerprint() != other.fingerprint()
        again = from_rows(["a"], [[1], [2]])
        assert rel.fingerprint() == again.fingerprint()
