"""Metric functional dependency validation.

An MFD statement relaxes ``X -> Y``: rows that agree on X may still differ
on Y, as long as every X-cluster's Y-projection has diameter at most p
under the chosen metric (Levenshtein for string Y, L2 for numeric Y). The
comparison is inclusive: a cluster at exactly diameter p still satisfies
the statement.

Diameters are exhaustive pairwise maxima per cluster. Single-attribute
numeric Y uses the absolute difference (exact on integers); multi-attribute
numeric Y compares squared sums and takes one square root at the end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Optional, Sequence

from .relation import NULL_ID, Relation, clusters_from_vector, combine_group_vectors

METRIC_LEVENSHTEIN = "levenshtein"
METRIC_EUCLIDEAN = "euclidean"
METRICS = (METRIC_LEVENSHTEIN, METRIC_EUCLIDEAN)


class IncomparableValueError(ValueError):
    """A null took part in a distance computation."""


class MetricTypeError(TypeError):
    """Operand types do not fit the metric."""


def levenshtein(a: str, b: str) -> int:
    """Standard unit-cost edit distance, two-row dynamic program."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ch_a in enumerate(a, start=1):
        current = [i]
        for j, ch_b in enumerate(b, start=1):
            cost = 0 if ch_a == ch_b else 1
            current.append(
                min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost)
            )
        previous = current
    return previous[-1]


def distance(a: Any, b: Any, metric: str) -> float:
    """Distance between two values or two equal-length value tuples."""
    left = a if isinstance(a, tuple) else (a,)
    right = b if isinstance(b, tuple) else (b,)
    if len(left) != len(right):
        raise MetricTypeError("value tuples must have equal length")
    if metric == METRIC_LEVENSHTEIN:
        total = 0
        for x, y in zip(left, right):
            _require_str(x)
            _require_str(y)
            total += levenshtein(x, y)
        return total
    if metric == METRIC_EUCLIDEAN:
        if len(left) == 1:
            _require_number(left[0])
            _require_number(right[0])
            return abs(left[0] - right[0])
        acc = 0.0
        for x, y in zip(left, right):
            _require_number(x)
            _require_number(y)
            acc += (x - y) ** 2
        return math.sqrt(acc)
    raise MetricTypeError(f"unknown metric: {metric!r}")


def _require_str(value: Any) -> None:
    if value is None:
        raise IncomparableValueError("null operand in distance")
    if not isinstance(value, str):
        raise MetricTypeError(f"levenshtein needs strings, got {type(value).__name__}")


def _require_number(value: Any) -> None:
    if value is None:
        raise IncomparableValueError("null operand in distance")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MetricTypeError(f"euclidean needs numbers, got {type(value).__name__}")


def cluster_diameter(rhs_tuples: Sequence[tuple], metric: str) -> float:
    """Max pairwise distance over the list; 0 for a singleton."""
    if not rhs_tuples:
        raise ValueError("empty cluster has no diameter")
    best, _pair = _diameter_with_witness(list(rhs_tuples), metric)
    return best


def _diameter_with_witness(
    tuples: list[tuple], metric: str
) -> tuple[float, Optional[tuple[int, int]]]:
    # squared-distance comparisons for multi-attribute L2; one sqrt at the end
    multi_l2 = metric == METRIC_EUCLIDEAN and len(tuples[0]) > 1
    best = 0.0
    witness: Optional[tuple[int, int]] = None
    for i in range(len(tuples)):
        for j in range(i + 1, len(tuples)):
            if multi_l2:
                d = 0.0
                for x, y in zip(tuples[i], tuples[j]):
                    _require_number(x)
                    _require_number(y)
                    d += (x - y) ** 2
            else:
                d = distance(tuples[i], tuples[j], metric)
            if d > best:
                best = d
                witness = (i, j)
    if multi_l2:
        best = math.sqrt(best)
    return best, witness


@dataclass(frozen=True)
class MFDStatement:
    """lhs --(metric, p)--> rhs, with rhs a non-empty attribute list."""

    lhs: tuple[int, ...]
    rhs: tuple[int, ...]
    metric: str
    p: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "lhs", tuple(sorted(set(self.lhs))))
        object.__setattr__(self, "rhs", tuple(self.rhs))
        if not self.rhs:
            raise ValueError("rhs must name at least one attribute")
        if len(set(self.rhs)) != len(self.rhs):
            raise ValueError("rhs attributes must be distinct")
        if self.metric not in METRICS:
            raise MetricTypeError(f"unknown metric: {self.metric!r}")
        if self.p < 0:
            raise ValueError("p must be non-negative")

    def validate_against(self, relation: Relation) -> None:
        """Check index ranges and metric/type compatibility."""
        for attr in self.lhs + self.rhs:
            if not 0 <= attr < relation.attribute_count:
                raise KeyError(f"attribute index out of range: {attr}")
        rhs_types = {relation.attributes[a].inferred_type for a in self.rhs}
        if self.metric == METRIC_LEVENSHTEIN and rhs_types != {"string"}:
            raise MetricTypeError("levenshtein requires every rhs attribute to be string")
        if self.metric == METRIC_EUCLIDEAN and not rhs_types <= {"integer", "float"}:
            raise MetricTypeError("euclidean requires every rhs attribute to be numeric")


@dataclass(frozen=True)
class ClusterViolation:
    """One cluster that keeps the statement from holding.

    ``incomparable`` marks clusters with null rhs values, where no distance
    is defined; those have no diameter or witness.
    """

    rows: tuple[int, ...]
    diameter: Optional[float]
    witness: Optional[tuple[int, int]]
    incomparable: bool = False


@dataclass(frozen=True)
class MFDVerdict:
    holds: bool
    global_diameter: float
    violating_clusters: tuple[ClusterViolation, ...]


def validate_mfd(relation: Relation, stmt: MFDStatement) -> MFDVerdict:
    """Verdict over every cluster of the lhs partition.

    Singleton clusters hold vacuously (they are stripped). The global
    diameter is the max over comparable clusters and equals the smallest p
    at which the statement holds, provided no cluster is incomparable.
    """
    stmt.validate_against(relation)
    diameters = cluster_diameters(relation, stmt.lhs, stmt.rhs, stmt.metric)
    violations = []
    global_diameter = 0.0
    for entry in diameters:
        if entry.incomparable:
            violations.append(entry)
            continue
        global_diameter = max(global_diameter, entry.diameter)
        if entry.diameter > stmt.p:
            violations.append(entry)
    return MFDVerdict(
        holds=not violations,
        global_diameter=global_diameter,
        violating_clusters=tuple(violations),
    )


def cluster_diameters(
    relation: Relation,
    lhs: tuple[int, ...],
    rhs: tuple[int, ...],
    metric: str,
) -> list[ClusterViolation]:
    """Per-cluster diameters of the rhs projection over the lhs partition.

    Returns one entry per stripped cluster; the raw material both for
    verdicts at any p and for sweeps.
    """
    if lhs:
        grouping = relation.group_vector(lhs[0])
        for attr in lhs[1:]:
            grouping = combine_group_vectors(grouping, relation.group_vector(attr))
        clusters = clusters_from_vector(grouping)
    else:
        clusters = (
            (tuple(range(relation.row_count)),) if relation.row_count >= 2 else ()
        )
    out: list[ClusterViolation] = []
    for rows in clusters:
        has_null = any(
            int(relation.columns[a][r]) == NULL_ID for r in rows for a in rhs
        )
        if has_null:
            out.append(
                ClusterViolation(rows=rows, diameter=None, witness=None, incomparable=True)
            )
            continue
        projections = [tuple(relation.value(r, a) for a in rhs) for r in rows]
        diameter, pair = _diameter_with_witness(projections, metric)
        witness = (rows[pair[0]], rows[pair[1]]) if pair is not None else None
        out.append(ClusterViolation(rows=rows, diameter=diameter, witness=witness))
    return out
