from __future__ import annotations

import pytest

from deprof.mfd import (
    IncomparableValueError,
    MetricTypeError,
    MFDStatement,
    cluster_diameter,
    distance,
    levenshtein,
    validate_mfd,
)
from deprof.relation import from_rows
from conftest import random_relation
from oracles import brute_clusters, oracle_diameter, oracle_levenshtein


class TestDistance:
    def test_identity(self):
        assert distance("abc", "abc", "levenshtein") == 0
        assert distance(4.2, 4.2, "euclidean") == 0

    def test_empty_string(self):
        assert distance("abc", "", "levenshtein") == 3

    def test_kitten_sitting(self):
        assert distance("kitten", "sitting", "levenshtein") == 3
        assert oracle_levenshtein("kitten", "sitting") == 3

    def test_levenshtein_matches_oracle(self, rng):
        alphabet = "abcde"
        for _ in range(300):
            a = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 8)))
            b = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 8)))
            assert levenshtein(a, b) == oracle_levenshtein(a, b)

    def test_metric_axioms_spot_checks(self, rng):
        alphabet = "abc"
        words = [
            "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 5)))
            for _ in range(30)
        ]
        for a in words[:10]:
            for b in words[:10]:
                assert levenshtein(a, b) == levenshtein(b, a)
                for c in words[:10]:
                    assert levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c)

    def test_single_numeric_absolute_difference(self):
        assert distance(3, 9, "euclidean") == 6

    def test_multi_attribute_l2(self):
        assert distance((0, 0), (3, 4), "euclidean") == pytest.approx(5.0)

    def test_null_operand(self):
        with pytest.raises(IncomparableValueError):
            distance(None, "x", "levenshtein")
        with pytest.raises(IncomparableValueError):
            distance(1, None, "euclidean")

    def test_type_mismatch(self):
        with pytest.raises(MetricTypeError):
            distance(1, 2, "levenshtein")
        with pytest.raises(MetricTypeError):
            distance("a", "b", "euclidean")


class TestClusterDiameter:
    def test_singleton(self):
        assert cluster_diameter([(3,)], "euclidean") == 0

    def test_three_values(self):
        assert cluster_diameter([(3,), (5,), (9,)], "euclidean") == 6

    def test_all_equal(self):
        assert cluster_diameter([("x",), ("x",), ("x",)], "levenshtein") == 0

    def test_matches_oracle(self, rng):
        for _ in range(50):
            values = [(rng.randint(0, 20),) for _ in range(rng.randint(1, 8))]
            expected = oracle_diameter(values, lambda a, b: abs(a[0] - b[0]))
            assert cluster_diameter(values, "euclidean") == expected


class TestValidateMfd:
    def test_key_lhs_holds_vacuously(self):
        rel = from_rows(["k", "v"], [[1, 10], [2, 99], [3, 5]])
        verdict = validate_mfd(rel, MFDStatement(lhs=(0,), rhs=(1,), metric="euclidean", p=0))
        assert verdict.holds and verdict.global_diameter == 0

    def test_boundary_inclusive(self):
        rel = from_rows(["g", "v"], [[1, 3], [1, 5], [1, 9]])
        fail = validate_mfd(rel, MFDStatement(lhs=(0,), rhs=(1,), metric="euclidean", p=5))
        assert not fail.holds
        assert fail.global_diameter == 6
        assert fail.violating_clusters[0].witness == (0, 2)  # rows of 3 and 9
        hold = validate_mfd(rel, MFDStatement(lhs=(0,), rhs=(1,), metric="euclidean", p=6))
        assert hold.holds and not hold.violating_clusters

    def test_incomparable_cluster(self):
        rel = from_rows(["g", "v"], [[1, 3], [1, None], [2, 4], [2, 5]])
        verdict = validate_mfd(rel, MFDStatement(lhs=(0,), rhs=(1,), metric="euclidean", p=10))
        assert not verdict.holds
        bad = verdict.violating_clusters[0]
        assert bad.incomparable and bad.rows == (0, 1) and bad.diameter is None

    def test_metric_compatibility_enforced(self):
        rel = from_rows(["g", "v"], [[1, "x"], [1, "y"]])
        with pytest.raises(MetricTypeError):
            validate_mfd(rel, MFDStatement(lhs=(0,), rhs=(1,), metric="euclidean", p=1))
        num = from_rows(["g", "v"], [[1, 2], [1, 3]])
        with pytest.raises(MetricTypeError):
            validate_mfd(num, MFDStatement(lhs=(0,), rhs=(1,), metric="levenshtein", p=1))

    def test_string_rhs_with_levenshtein(self):
        rel = from_rows(["g", "v"], [[1, "blue"], [1, "bluee"], [2, "red"]])
        verdict = validate_mfd(rel, MFDStatement(lhs=(0,), rhs=(1,), metric="levenshtein", p=1))
        assert verdict.holds and verdict.global_diameter == 1

    def test_diameters_match_bruteforce(self, rng):
        for _ in range(40):
            rel = random_relation(rng, max_attrs=4, max_rows=50, max_domain=6)
            numeric = [
                a.index for a in rel.attributes if a.inferred_type in ("integer", "float")
            ]
            if not numeric:
                continue
            rhs = rng.choice(numeric)
            lhs = tuple(a for a in range(rel.attribute_count) if a != rhs)[:2]
            stmt = MFDStatement(lhs=lhs, rhs=(rhs,), metric="euclidean", p=2)
            verdict = validate_mfd(rel, stmt)
            # oracle: group rows by lhs values, full pairwise scan per group
            expected_global = 0.0
            expected_violating = set()
            for cluster in brute_clusters(rel, lhs):
                values = [rel.value(r, rhs) for r in cluster]
                diam = oracle_diameter([(v,) for v in values], lambda a, b: abs(a[0] - b[0]))
                expected_global = max(expected_global, diam)
                if diam > stmt.p:
                    expected_violating.add(frozenset(cluster))
            assert verdict.global_diameter == expected_global
            assert {frozenset(v.rows) for v in verdict.violating_clusters} == expected_violating

    def test_monotone_in_p(self, rng):
        for _ in range(200):
            rel = random_relation(rng, max_attrs=3, max_rows=25, max_domain=5)
            numeric = [a.index for a in rel.attributes if a.is_numeric]
            if not numeric:
                continue
            rhs = rng.choice(numeric)
            lhs = tuple(a for a in range(rel.attribute_count) if a != rhs)[:1]
            p_low = rng.uniform(0, 4)
            p_high = p_low + rng.uniform(0, 4)
            low = validate_mfd(rel, MFDStatement(lhs=lhs, rhs=(rhs,), metric="euclidean", p=p_low))
            high = validate_mfd(rel, MFDStatement(lhs=lhs, rhs=(rhs,), metric="euclidean", p=p_high))
            if low.holds:
                assert high.holds

    def test_global_diameter_is_minimal_p(self, rng):
        for _ in range(40):
            rel = random_relation(rng, max_attrs=3, max_rows=30, max_domain=4)
            numeric = [a.index for a in rel.attributes if a.is_numeric]
            if not numeric:
                continue
            rhs = rng.choice(numeric)
            lhs = tuple(a for a in range(rel.attribute_count) if a != rhs)[:1]
            probe = validate_mfd(rel, MFDStatement(lhs=lhs, rhs=(rhs,), metric="euclidean", p=0))
            g = probe.global_diameter
            at = validate_mfd(rel, MFDStatement(lhs=lhs, rhs=(rhs,), metric="euclidean", p=g))
            assert at.holds
            if g > 0:
                eps = min(0.5, g / 2)
                below = validate_mfd(
                    rel, MFDStatement(lhs=lhs, rhs=(rhs,), metric="euclidean", p=g - eps)
                )
                assert not below.holds
