"""Approximate functional dependencies under the g1 pair-error measure.

g1 of ``X -> A`` is the number of unordered row pairs that agree on X but
disagree on A, divided by the total C(n, 2) pairs. Both counts come straight
from partition group sizes, so the error is an exact rational; floats only
ever appear at presentation time.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Callable, Optional, Union

import numpy as np

from .fd import FD, _LatticeSearch
from .relation import Relation, combine_group_vectors

RationalLike = Union[Fraction, int, float, str]


@dataclass(frozen=True)
class AFD:
    """An FD carrying its exact g1 error (0 iff it holds exactly)."""

    fd: FD
    error: Fraction

    def sort_key(self) -> tuple:
        return self.fd.sort_key()


def as_fraction(value: RationalLike) -> Fraction:
    """Exact rational from user input.

    Strings and floats are read as decimal literals ("0.1" means 1/10, not
    the nearest binary float); "1/3" style is accepted too.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(Decimal(repr(value)))
    if isinstance(value, str):
        try:
            return Fraction(value)
        except ValueError:
            return Fraction(Decimal(value))
    raise TypeError(f"cannot interpret {value!r} as a rational")


def total_pairs(n: int) -> int:
    return n * (n - 1) // 2


def g1_error(relation: Relation, fd: FD) -> Fraction:
    """Exact g1 of one dependency; 0 for degenerate n < 2 (no pairs)."""
    for attr in fd.lhs + (fd.rhs,):
        if not 0 <= attr < relation.attribute_count:
            raise KeyError(f"attribute index out of range: {attr}")
    n = relation.row_count
    if n < 2:
        return Fraction(0)
    if fd.lhs:
        grouping = relation.group_vector(fd.lhs[0])
        for attr in fd.lhs[1:]:
            grouping = combine_group_vectors(grouping, relation.group_vector(attr))
        lhs_pairs = _pairs(grouping)
        refined = combine_group_vectors(grouping, relation.group_vector(fd.rhs))
    else:
        lhs_pairs = total_pairs(n)
        refined = relation.group_vector(fd.rhs)
    violating = lhs_pairs - _pairs(refined)
    return Fraction(violating, total_pairs(n))


def _pairs(grouping) -> int:
    vector, count = grouping
    sizes = np.bincount(vector, minlength=count).astype(np.int64)
    return int(np.sum(sizes * (sizes - 1) // 2))


def discover_afds(
    relation: Relation,
    threshold: RationalLike,
    max_lhs: int,
    *,
    threads: int = 1,
    cancel: Optional[Callable[[], bool]] = None,
) -> list[AFD]:
    """All AFDs with g1 <= threshold whose lhs is minimal at that threshold.

    Minimality is against the same threshold: no proper lhs subset with the
    same rhs may also fall under it. At threshold 0 the output coincides
    with exact discovery.
    """
    if relation.attribute_count == 0:
        raise ValueError("relation has no attributes")
    if max_lhs < 1:
        raise ValueError("max_lhs must be >= 1")
    bound = as_fraction(threshold)
    if bound < 0:
        raise ValueError("threshold must be >= 0")

    n = relation.row_count
    denominator = total_pairs(n)

    def qualifies(lhs_count: int, refined_count: int, lhs_pairs: int, refined_pairs: int):
        violating = lhs_pairs - refined_pairs
        if denominator == 0:
            return (True, Fraction(0))
        # violating / denominator <= bound, in integers
        if violating * bound.denominator <= bound.numerator * denominator:
            return (True, Fraction(violating, denominator))
        return (False, None)

    search = _LatticeSearch(
        relation, max_lhs, needs_pairs=True, threads=threads, cancel=cancel
    )
    found = search.run(qualifies=qualifies)
    return [AFD(fd=fd, error=payload) for fd, payload in found]


def single_attribute_afds(
    relation: Relation, threshold: RationalLike
) -> dict[int, list[int]]:
    """For each attribute i, the attributes j with g1({i} -> j) <= threshold.

    The grouping step of the dedup scenario: near-key attributes come out
    with the longest dependent lists.
    """
    bound = as_fraction(threshold)
    if bound < 0:
        raise ValueError("threshold must be >= 0")
    m = relation.attribute_count
    n = relation.row_count
    denominator = total_pairs(n)
    grouped: dict[int, list[int]] = {i: [] for i in range(m)}
    if denominator == 0:
        for i in range(m):
            grouped[i] = [j for j in range(m) if j != i]
        return grouped

    lhs_pairs = {}
    for i in range(m):
        lhs_pairs[i] = _pairs(relation.group_vector(i))
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            refined = combine_group_vectors(
                relation.group_vector(i), relation.group_vector(j)
            )
            violating = lhs_pairs[i] - _pairs(refined)
            if violating * bound.denominator <= bound.numerator * denominator:
                grouped[i].append(j)
    return grouped
