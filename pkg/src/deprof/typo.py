"""Typo detection: mine almost-holding dependencies, explain their violations.

The pipeline mines AFDs whose error is positive but under a cap, then for a
chosen dependency materializes violation clusters: row groups identical on
the lhs but not on the rhs. The most frequent rhs value in a cluster is the
presumed truth (typos are rare); every member carries its distance to that
central value, Levenshtein for string rhs and absolute difference for
numeric rhs. The radius/ratio filter then decides which clusters are worth
showing, and fixes are proposed for members within the radius.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Optional, Sequence

from .afd import AFD, as_fraction, discover_afds
from .fd import FD, fd_holds
from .mfd import METRIC_EUCLIDEAN, METRIC_LEVENSHTEIN, distance
from .relation import NULL_ID, Relation, clusters_from_vector, combine_group_vectors


@dataclass(frozen=True)
class TypoConfig:
    threshold: Fraction
    radius: float
    ratio: float
    max_lhs: int = 3

    def __post_init__(self) -> None:
        object.__setattr__(self, "threshold", as_fraction(self.threshold))
        if self.radius < 0:
            raise ValueError("radius must be non-negative")
        if not 0 <= self.ratio <= 1:
            raise ValueError("ratio must lie in [0, 1]")
        if self.max_lhs < 1:
            raise ValueError("max_lhs must be >= 1")


@dataclass(frozen=True)
class ClusterMember:
    row: int
    value: Any
    distance: Optional[float]  # None when the value is null (incomparable)


@dataclass(frozen=True)
class ViolationCluster:
    """Rows agreeing on the fd's lhs with at least two distinct rhs values."""

    fd: FD
    lhs_value: tuple[Any, ...]
    rows: tuple[int, ...]
    central_value: Any
    central_count: int
    members: tuple[ClusterMember, ...]


@dataclass(frozen=True)
class FixSuggestion:
    row: int
    current: Any
    suggested: Any


def mine_almost_fds(relation: Relation, cfg: TypoConfig, *, threads: int = 1) -> list[AFD]:
    """Minimal AFDs with 0 < g1 <= threshold; exact FDs carry no typo signal."""
    afds = discover_afds(relation, cfg.threshold, cfg.max_lhs, threads=threads)
    return [afd for afd in afds if afd.error > 0]


def violation_clusters(relation: Relation, fd: FD) -> list[ViolationCluster]:
    """One cluster per lhs group with >= 2 distinct rhs values.

    Central value: the modal non-null rhs value, ties broken by first
    occurrence inside the cluster. Null members get no distance.
    """
    if fd_holds(relation, fd):
        return []
    metric = _metric_for(relation, fd.rhs)
    if fd.lhs:
        grouping = relation.group_vector(fd.lhs[0])
        for attr in fd.lhs[1:]:
            grouping = combine_group_vectors(grouping, relation.group_vector(attr))
        clusters = clusters_from_vector(grouping)
    else:
        clusters = (
            (tuple(range(relation.row_count)),) if relation.row_count >= 2 else ()
        )

    out: list[ViolationCluster] = []
    rhs_codes = relation.columns[fd.rhs]
    for rows in clusters:
        codes = [int(rhs_codes[r]) for r in rows]
        distinct = set(codes)
        null_rows = sum(1 for c in codes if c == NULL_ID)
        distinct_count = len(distinct)
        if relation.nulls_distinct and null_rows:
            distinct_count += null_rows - 1
        if distinct_count < 2:
            continue

        central_value, central_count = _central(relation, fd.rhs, rows)
        members = []
        for r in rows:
            value = relation.value(r, fd.rhs)
            if value is None or central_value is None:
                member_distance: Optional[float] = None
            else:
                member_distance = distance(value, central_value, metric)
            members.append(ClusterMember(row=r, value=value, distance=member_distance))
        out.append(
            ViolationCluster(
                fd=fd,
                lhs_value=tuple(relation.value(rows[0], a) for a in fd.lhs),
                rows=rows,
                central_value=central_value,
                central_count=central_count,
                members=tuple(members),
            )
        )
    return out


def _central(relation: Relation, rhs: int, rows: Sequence[int]) -> tuple[Any, int]:
    counts: dict[int, int] = {}
    first_seen: dict[int, int] = {}
    for position, r in enumerate(rows):
        code = int(relation.columns[rhs][r])
        if code == NULL_ID:
            continue
        counts[code] = counts.get(code, 0) + 1
        first_seen.setdefault(code, position)
    if not counts:
        return None, 0
    best = min(counts, key=lambda code: (-counts[code], first_seen[code]))
    return relation.dictionaries[rhs][best], counts[best]


def _metric_for(relation: Relation, rhs: int) -> str:
    if relation.attributes[rhs].is_numeric:
        return METRIC_EUCLIDEAN
    return METRIC_LEVENSHTEIN


def filter_clusters(
    clusters: Sequence[ViolationCluster],
    cfg: TypoConfig,
    *,
    invert_display: bool = False,
) -> list[ViolationCluster]:
    """Keep clusters the radius/ratio rule says to display.

    Literal rule: show a cluster iff the share of members within ``radius``
    of the central value is less than ``ratio``. ``invert_display`` flips
    the predicate for users who want the high-agreement clusters instead.
    Members with no defined distance count as outside the radius.
    """
    kept = []
    for cluster in clusters:
        inside = sum(
            1
            for member in cluster.members
            if member.distance is not None and member.distance <= cfg.radius
        )
        share = inside / len(cluster.members)
        shown = share < cfg.ratio
        if invert_display:
            shown = not shown
        if shown:
            kept.append(cluster)
    return kept


def propose_fixes(cluster: ViolationCluster, radius: float) -> list[FixSuggestion]:
    """Replace members within (0, radius] of the central value by it."""
    fixes = []
    for member in cluster.members:
        if member.distance is None:
            continue
        if 0 < member.distance <= radius:
            fixes.append(
                FixSuggestion(
                    row=member.row, current=member.value, suggested=cluster.central_value
                )
            )
    return fixes


@dataclass(frozen=True)
class TypoReport:
    """Everything the CLI and UI need to walk one mined dependency."""

    afd: AFD
    clusters: tuple[ViolationCluster, ...]
    displayed: tuple[bool, ...]
    fixes: tuple[tuple[FixSuggestion, ...], ...]


def typo_report(
    relation: Relation,
    cfg: TypoConfig,
    afd: AFD,
    *,
    invert_display: bool = False,
) -> TypoReport:
    clusters = violation_clusters(relation, afd.fd)
    shown = set(
        id(c) for c in filter_clusters(clusters, cfg, invert_display=invert_display)
    )
    return TypoReport(
        afd=afd,
        clusters=tuple(clusters),
        displayed=tuple(id(c) in shown for c in clusters),
        fixes=tuple(tuple(propose_fixes(c, cfg.radius)) for c in clusters),
    )
