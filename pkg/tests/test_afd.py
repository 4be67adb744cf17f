from __future__ import annotations

from fractions import Fraction

import pytest

from deprof.afd import as_fraction, discover_afds, g1_error, single_attribute_afds
from deprof.fd import FD, discover_fds
from deprof.relation import from_rows
from conftest import random_relation
from oracles import brute_g1


class TestAsFraction:
    def test_decimal_strings_are_exact(self):
        assert as_fraction("0.1") == Fraction(1, 10)
        assert as_fraction("1/3") == Fraction(1, 3)

    def test_float_reads_as_decimal_literal(self):
        assert as_fraction(0.1) == Fraction(1, 10)

    def test_int(self):
        assert as_fraction(1) == Fraction(1)


class TestG1Error:
    def test_exact_fd_is_zero(self):
        rel = from_rows(["a", "b"], [[1, "x"], [1, "x"], [2, "y"]])
        assert g1_error(rel, FD(lhs=(0,), rhs=1)) == 0

    def test_spec_third(self):
        rel = from_rows(["a", "b"], [[1, "a"], [1, "b"], [2, "c"]])
        assert g1_error(rel, FD(lhs=(0,), rhs=1)) == Fraction(1, 3)

    def test_constant_lhs_distinct_rhs_is_one(self):
        rel = from_rows(["a", "b"], [[7, 1], [7, 2], [7, 3], [7, 4]])
        assert g1_error(rel, FD(lhs=(0,), rhs=1)) == 1

    def test_degenerate_small_n(self):
        rel = from_rows(["a", "b"], [[1, 2]])
        assert g1_error(rel, FD(lhs=(0,), rhs=1)) == 0

    def test_matches_pair_enumeration(self, rng):
        for _ in range(60):
            nulls_distinct = rng.random() < 0.4
            rel = random_relation(
                rng, max_attrs=5, max_rows=40, null_rate=0.15, nulls_distinct=nulls_distinct
            )
            rhs = rng.randrange(rel.attribute_count)
            size = rng.randint(0, rel.attribute_count - 1)
            lhs = tuple(a for a in rng.sample(range(rel.attribute_count), size) if a != rhs)
            fd = FD(lhs=lhs, rhs=rhs)
            assert g1_error(rel, fd) == brute_g1(rel, fd.lhs, fd.rhs)

    def test_monotone_in_lhs(self, rng):
        for _ in range(40):
            rel = random_relation(rng, max_attrs=5, max_rows=30)
            rhs = rng.randrange(rel.attribute_count)
            others = [a for a in range(rel.attribute_count) if a != rhs]
            base = tuple(rng.sample(others, rng.randint(0, len(others) - 1)))
            extra = rng.choice([a for a in others if a not in base])
            fd = FD(lhs=base, rhs=rhs)
            bigger = FD(lhs=base + (extra,), rhs=rhs)
            assert g1_error(rel, fd) >= g1_error(rel, bigger)


def brute_minimal_afds(relation, threshold, max_lhs):
    from itertools import combinations

    bound = as_fraction(threshold)
    m = relation.attribute_count
    holding: dict[int, list[frozenset]] = {rhs: [] for rhs in range(m)}
    errors = {}
    for rhs in range(m):
        others = [a for a in range(m) if a != rhs]
        for size in range(0, max_lhs + 1):
            for lhs in combinations(others, size):
                err = brute_g1(relation, lhs, rhs)
                if err <= bound:
                    holding[rhs].append(frozenset(lhs))
                    errors[(lhs, rhs)] = err
    minimal = set()
    for rhs, sets in holding.items():
        for lhs in sets:
            if not any(other < lhs for other in sets):
                key = (tuple(sorted(lhs)), rhs)
                minimal.add((key[0], key[1], errors[key]))
    return minimal


class TestDiscoverAfds:
    def test_threshold_zero_equals_exact_discovery(self, rng):
        for _ in range(20):
            rel = random_relation(rng, max_attrs=5, max_rows=25, null_rate=0.1)
            max_lhs = rel.attribute_count - 1
            afds = discover_afds(rel, 0, max_lhs)
            fds = discover_fds(rel, max_lhs)
            assert [a.fd for a in afds] == list(fds.fds)
            assert all(a.error == 0 for a in afds)

    def test_threshold_one_gives_empty_lhs_for_everything(self, rng):
        rel = random_relation(rng, max_attrs=4, max_rows=20)
        afds = discover_afds(rel, 1, max_lhs=2)
        assert {(a.fd.lhs, a.fd.rhs) for a in afds} == {
            ((), rhs) for rhs in range(rel.attribute_count)
        }

    def test_matches_bruteforce_oracle(self, rng):
        for _ in range(25):
            rel = random_relation(rng, max_attrs=4, max_rows=25, null_rate=0.1)
            threshold = rng.choice([Fraction(1, 10), Fraction(1, 4), Fraction(1, 2)])
            max_lhs = rng.randint(1, rel.attribute_count - 1)
            got = {(a.fd.lhs, a.fd.rhs, a.error) for a in discover_afds(rel, threshold, max_lhs)}
            assert got == brute_minimal_afds(rel, threshold, max_lhs)

    def test_negative_threshold_rejected(self, rng):
        rel = random_relation(rng)
        with pytest.raises(ValueError):
            discover_afds(rel, Fraction(-1, 2), 1)

    def test_errors_carried_exactly(self):
        rel = from_rows(["a", "b"], [[1, "a"], [1, "b"], [2, "c"]])
        afds = discover_afds(rel, Fraction(1, 2), 1)
        by_key = {(a.fd.lhs, a.fd.rhs): a.error for a in afds}
        assert by_key[((0,), 1)] == Fraction(1, 3)


class TestSingleAttributeAfds:
    def test_identity_copy_columns(self):
        rel = from_rows(["a", "b"], [[1, 1], [2, 2], [2, 2], [3, 3]])
        grouped = single_attribute_afds(rel, 0)
        assert 1 in grouped[0] and 0 in grouped[1]

    def test_unique_attribute_determines_all(self):
        rel = from_rows(["id", "x", "y"], [[1, "a", 5], [2, "a", 5], [3, "b", 6]])
        grouped = single_attribute_afds(rel, 0)
        assert grouped[0] == [1, 2]

    def test_threshold_excludes_large_error(self):
        rel = from_rows(["a", "b"], [[1, "a"], [1, "b"], [2, "c"]])
        grouped = single_attribute_afds(rel, Fraction(3, 10))
        assert 1 not in grouped[0]  # error 1/3 > 0.3
        grouped = single_attribute_afds(rel, Fraction(1, 3))
        assert 1 in grouped[0]  # inclusive threshold

    def test_agrees_with_g1(self, rng):
        for _ in range(15):
            rel = random_relation(rng, max_attrs=4, max_rows=30, null_rate=0.1)
            threshold = Fraction(rng.randint(0, 4), 10)
            grouped = single_attribute_afds(rel, threshold)
            for i in range(rel.attribute_count):
                for j in range(rel.attribute_count):
                    if i == j:
                        continue
                    expected = g1_error(rel, FD(lhs=(i,), rhs=j)) <= threshold
                    assert (j in grouped[i]) == expected
