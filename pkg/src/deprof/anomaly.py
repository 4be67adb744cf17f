"""Mine-explore-validate loop over arriving data partitions.

Each partition is mined for exact dependencies and compared against the
canonical set kept from earlier data. A dependency that disappears is
probed two ways: approximate mining at increasing error thresholds, and a
metric-relaxation sweep that searches the smallest grid distance p at which
the dependency holds again. Whether the finding is an anomaly or a new norm
is the user's call; accepting a partition advances the canonical state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .afd import RationalLike, as_fraction, g1_error
from .fd import FD, FDSet
from .mfd import (
    METRIC_EUCLIDEAN,
    METRICS,
    MFDStatement,
    MFDVerdict,
    MetricTypeError,
    cluster_diameters,
)
from .relation import NULL_ID, Relation


class SchemaMismatchError(ValueError):
    """FD sets being diffed come from different schemas."""


@dataclass(frozen=True)
class SweepConfig:
    d: float
    step: float
    metric: str = METRIC_EUCLIDEAN

    def __post_init__(self) -> None:
        if self.d <= 0 or self.step <= 0:
            raise ValueError("d and step must be positive")
        if self.step > self.d:
            raise ValueError("step must not exceed d")
        if self.metric not in METRICS:
            raise MetricTypeError(f"unknown metric: {self.metric!r}")


@dataclass(frozen=True)
class DiffRecord:
    lost: tuple[FD, ...]
    gained: tuple[FD, ...]


@dataclass(frozen=True)
class HistoryEntry:
    partition_id: str
    fds: FDSet
    diff: DiffRecord


@dataclass(frozen=True)
class AnomalyState:
    """Canonical knowledge plus the acceptance trail that produced it."""

    canonical_fds: Optional[FDSet] = None
    canonical_mfds: tuple[MFDStatement, ...] = ()
    history: tuple[HistoryEntry, ...] = ()


@dataclass(frozen=True)
class SweepResult:
    """Outcome of one relaxation sweep; ``p`` is None when nothing holds."""

    p: Optional[float]
    verdict: Optional[MFDVerdict]
    diagnostic: Optional[str] = None

    @property
    def found(self) -> bool:
        return self.p is not None


def fd_diff(old: FDSet, new: FDSet) -> tuple[list[FD], list[FD]]:
    """(lost, gained) between two FD sets over the same schema."""
    if old.schema != new.schema:
        raise SchemaMismatchError(
            f"schemas differ: {list(old.schema)} vs {list(new.schema)}"
        )
    lost = sorted(old.as_set() - new.as_set(), key=FD.sort_key)
    gained = sorted(new.as_set() - old.as_set(), key=FD.sort_key)
    return lost, gained


def afd_probe(
    relation: Relation, fd: FD, thresholds: Sequence[RationalLike]
) -> tuple[Fraction, Optional[Fraction]]:
    """Exact g1 plus the first listed threshold that would admit the fd."""
    bounds = [as_fraction(t) for t in thresholds]
    if any(a > b for a, b in zip(bounds, bounds[1:])):
        raise ValueError("thresholds must be ascending")
    error = g1_error(relation, fd)
    for bound in bounds:
        if error <= bound:
            return error, bound
    return error, None


def mfd_sweep(relation: Relation, fd: FD, cfg: SweepConfig) -> SweepResult:
    """Smallest grid point p in {step, 2*step, ... <= d} where the metric
    relaxation of ``fd`` holds, with its verdict.

    The per-cluster diameters determine the answer directly: the first grid
    point at or above the largest diameter. Grid-minimal, not globally
    minimal (the true optimum may fall between grid points).
    """
    stmt = MFDStatement(lhs=fd.lhs, rhs=(fd.rhs,), metric=cfg.metric, p=cfg.d)
    stmt.validate_against(relation)
    entries = cluster_diameters(relation, stmt.lhs, stmt.rhs, cfg.metric)
    incomparable = [e for e in entries if e.incomparable]
    if incomparable:
        rows = sorted(r for e in incomparable for r in e.rows)
        return SweepResult(
            p=None,
            verdict=None,
            diagnostic=f"clusters with null rhs values are incomparable (rows {rows[:10]})",
        )
    largest = max((e.diameter for e in entries), default=0.0)
    multiplier = max(1, math.ceil(largest / cfg.step - 1e-12))
    p = multiplier * cfg.step
    if p > cfg.d + 1e-12:
        return SweepResult(
            p=None,
            verdict=None,
            diagnostic=f"no grid point <= d={cfg.d} reaches the diameter {largest}",
        )
    verdict = MFDVerdict(holds=True, global_diameter=largest, violating_clusters=())
    return SweepResult(p=p, verdict=verdict)


def suggest_sweep_bound(relation: Relation, rhs: int) -> float:
    """Population standard deviation of the non-null rhs column.

    The stock heuristic for picking the sweep's upper bound; advisory only.
    """
    attr = relation.attributes[rhs]
    if not attr.is_numeric:
        raise MetricTypeError(f"attribute {attr.name!r} is not numeric")
    codes = relation.columns[rhs]
    values = [
        relation.dictionaries[rhs][int(c)] for c in codes if int(c) != NULL_ID
    ]
    if not values:
        raise ValueError("column has no non-null values")
    return float(np.std(np.asarray(values, dtype=np.float64)))


def advance_canonical(
    state: AnomalyState,
    partition_id: str,
    fds: FDSet,
    accepted_mfd: Optional[MFDStatement] = None,
) -> AnomalyState:
    """New state adopting the partition's FDs as canonical.

    The history entry records the diff against the previous canonical set,
    so replaying diffs from the start reconstructs the final set.
    """
    if state.canonical_fds is None:
        previous = FDSet(fds=(), schema=fds.schema, provenance="<initial>")
    else:
        previous = state.canonical_fds
    lost, gained = fd_diff(previous, fds)
    entry = HistoryEntry(
        partition_id=partition_id,
        fds=fds,
        diff=DiffRecord(lost=tuple(lost), gained=tuple(gained)),
    )
    mfds = state.canonical_mfds + ((accepted_mfd,) if accepted_mfd else ())
    return AnomalyState(
        canonical_fds=fds,
        canonical_mfds=mfds,
        history=state.history + (entry,),
    )


def replay_history(state: AnomalyState) -> Optional[FDSet]:
    """Reconstruct the canonical set purely from history diffs."""
    if not state.history:
        return None
    current: set[FD] = set()
    schema = state.history[0].fds.schema
    for entry in state.history:
        current -= set(entry.diff.lost)
        current |= set(entry.diff.gained)
    return FDSet(fds=tuple(current), schema=schema, provenance="<replay>")
