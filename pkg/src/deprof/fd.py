"""Exact minimal functional dependency discovery and validation.

Discovery is a levelwise (Apriori-style) ascent of the attribute-set
lattice: level L holds candidate left-hand sides of size L, each carried as
a group vector obtained by intersecting a parent vector with one attribute.
A dependency ``X -> A`` holds iff refining the X-partition by A creates no
new groups, i.e. the two partitions have equal group counts.

Pruning keeps the search sound and complete for *minimal* dependencies:

* constant attributes never enter a lhs (dropping them never changes the
  partition, so any dependency through them is non-minimal);
* once some recorded lhs for A is a subset of X, A stops being a candidate
  rhs above X;
* superkeys determine everything, so their supersets are never expanded;
* a lhs with no candidate rhs left cannot contribute above itself either.

Partition vectors are memoized per attribute set and evicted once the level
that needed them completes, keeping peak memory to roughly two lattice
levels.
"""

from __future__ import annotations

from dataclasses import dataclass
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional, Sequence

import numpy as np

from .relation import (
    Relation,
    StrippedPartition,
    combine_group_vectors,
)


class DiscoveryCancelled(RuntimeError):
    """Raised from a cancel hook at a lattice-level checkpoint."""


@dataclass(frozen=True)
class FD:
    """Functional dependency lhs -> rhs; lhs kept as a sorted index tuple."""

    lhs: tuple[int, ...]
    rhs: int

    def __post_init__(self) -> None:
        ordered = tuple(sorted(set(self.lhs)))
        if ordered != tuple(self.lhs):
            object.__setattr__(self, "lhs", ordered)
        if self.rhs in self.lhs:
            raise ValueError(f"rhs {self.rhs} may not appear in lhs {self.lhs}")

    @property
    def lhs_set(self) -> frozenset[int]:
        return frozenset(self.lhs)

    def sort_key(self) -> tuple:
        return (self.rhs, self.lhs)

    def __str__(self) -> str:  # pragma: no cover
        return f"[{', '.join(map(str, self.lhs))}] -> {self.rhs}"


@dataclass(frozen=True)
class FDSet:
    """A canonical set of minimal FDs over one relation's schema."""

    fds: tuple[FD, ...]
    schema: tuple[str, ...]
    provenance: str = "<memory>"

    def __post_init__(self) -> None:
        ordered = tuple(sorted(set(self.fds), key=FD.sort_key))
        object.__setattr__(self, "fds", ordered)

    def __contains__(self, fd: FD) -> bool:
        return fd in set(self.fds)

    def __len__(self) -> int:
        return len(self.fds)

    def as_set(self) -> frozenset[FD]:
        return frozenset(self.fds)

    def check_minimal(self) -> None:
        """Raise if any member's lhs is a proper subset of another's (same rhs)."""
        for a in self.fds:
            for b in self.fds:
                if a is not b and a.rhs == b.rhs and a.lhs_set < b.lhs_set:
                    raise ValueError(f"non-minimal member: {b} (covered by {a})")


def partition_error(p: StrippedPartition) -> int:
    """e(X): sum of cluster sizes minus cluster count (0 iff key modulo nulls)."""
    return p.error()


def fd_holds(relation: Relation, fd: FD) -> bool:
    """True iff no row pair agrees on lhs while disagreeing on rhs.

    Empty lhs means the rhs column must be constant (modulo null policy).
    """
    for attr in fd.lhs + (fd.rhs,):
        if not 0 <= attr < relation.attribute_count:
            raise KeyError(f"attribute index out of range: {attr}")
    if relation.row_count < 2:
        return True
    rhs_grouping = relation.group_vector(fd.rhs)
    if not fd.lhs:
        return rhs_grouping[1] <= 1
    grouping = relation.group_vector(fd.lhs[0])
    for attr in fd.lhs[1:]:
        grouping = combine_group_vectors(grouping, relation.group_vector(attr))
    _, refined_count = combine_group_vectors(grouping, rhs_grouping)
    return grouping[1] == refined_count


def discover_fds(
    relation: Relation,
    max_lhs: int,
    *,
    threads: int = 1,
    cancel: Optional[Callable[[], bool]] = None,
) -> FDSet:
    """All minimal FDs with ``|lhs| <= max_lhs``, constants included as
    empty-lhs dependencies. Output ordering is rhs-major, then lhs
    lexicographic.
    """
    if relation.attribute_count == 0:
        raise ValueError("relation has no attributes")
    if max_lhs < 1:
        raise ValueError("max_lhs must be >= 1")

    found = _LatticeSearch(relation, max_lhs, threads=threads, cancel=cancel).run(
        qualifies=_exact_qualifier(relation)
    )
    return FDSet(
        fds=tuple(fd for fd, _payload in found),
        schema=relation.attribute_names(),
        provenance=relation.source,
    )


def _exact_qualifier(relation: Relation):
    def qualifies(lhs_count: int, refined_count: int, lhs_pairs: int, refined_pairs: int):
        return (lhs_count == refined_count, None)

    return qualifies


# -- levelwise engine (shared with approximate discovery) --------------------


class _Part:
    """Cached partition info for one attribute set."""

    __slots__ = ("vector", "count", "_pairs")

    def __init__(self, vector: np.ndarray, count: int):
        self.vector = vector
        self.count = count
        self._pairs: Optional[int] = None

    def pairs(self) -> int:
        # number of unordered co-grouped row pairs
        if self._pairs is None:
            sizes = np.bincount(self.vector, minlength=self.count).astype(np.int64)
            self._pairs = int(np.sum(sizes * (sizes - 1) // 2))
        return self._pairs


Qualifier = Callable[[int, int, int, int], tuple]


class _LatticeSearch:
    """Shared levelwise search; the qualifier decides when lhs -> rhs counts.

    The qualifier sees (lhs group count, refined group count, lhs pair count,
    refined pair count) and returns (qualifies, payload). For exact FDs the
    pair counts are ignored; the g1 engine derives its error from them.
    A qualifier must be monotone (a qualifying lhs keeps qualifying when
    grown), which both exact and g1 semantics satisfy.
    """

    def __init__(
        self,
        relation: Relation,
        max_lhs: int,
        *,
        needs_pairs: bool = False,
        threads: int = 1,
        cancel: Optional[Callable[[], bool]] = None,
    ) -> None:
        self.relation = relation
        self.max_lhs = max_lhs
        self.needs_pairs = needs_pairs
        self.threads = max(1, threads)
        self.cancel = cancel
        self.cache: dict[frozenset[int], _Part] = {}
        self.n = relation.row_count

    def run(self, qualifies: Qualifier) -> list[tuple[FD, object]]:
        self._checkpoint()
        relation = self.relation
        m = relation.attribute_count
        results: list[tuple[FD, object]] = []
        # minimal lhs sets recorded so far, per rhs
        recorded: dict[int, list[frozenset[int]]] = {a: [] for a in range(m)}

        for attr in range(m):
            vector, count = relation.group_vector(attr)
            self.cache[frozenset((attr,))] = _Part(vector, count)

        empty = _Part(np.zeros(self.n, dtype=np.int32), 1 if self.n else 0)
        self.cache[frozenset()] = empty

        constants: set[int] = set()
        for attr in range(m):
            part = self.cache[frozenset((attr,))]
            ok, payload = qualifies(empty.count, part.count, empty.pairs(), part.pairs())
            if ok:
                results.append((FD(lhs=(), rhs=attr), payload))
                recorded[attr].append(frozenset())
            if part.count <= 1:
                constants.add(attr)

        # constants never appear in a minimal lhs
        base_attrs = [a for a in range(m) if a not in constants]
        survivors: list[tuple[int, ...]] = []
        for attr in base_attrs:
            survivors.append((attr,))

        level = 1
        current: list[tuple[int, ...]] = survivors
        while current and level <= self.max_lhs:
            self._checkpoint()
            next_survivors: list[tuple[int, ...]] = []
            outcomes = self._process_level(current, qualifies, recorded)
            for lhs_tuple, findings, survives in outcomes:
                for rhs, payload in findings:
                    results.append((FD(lhs=lhs_tuple, rhs=rhs), payload))
                    recorded[rhs].append(frozenset(lhs_tuple))
                if survives:
                    next_survivors.append(lhs_tuple)
            self._evict(level - 1)
            current = _join_level(next_survivors) if level < self.max_lhs else []
            level += 1

        results.sort(key=lambda item: item[0].sort_key())
        return results

    def _process_level(
        self,
        candidates: Sequence[tuple[int, ...]],
        qualifies: Qualifier,
        recorded: dict[int, list[frozenset[int]]],
    ) -> list[tuple[tuple[int, ...], list[tuple[int, object]], bool]]:
        if self.threads == 1 or len(candidates) < 4:
            return [self._process_node(lhs, qualifies, recorded) for lhs in candidates]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(
                pool.map(lambda lhs: self._process_node(lhs, qualifies, recorded), candidates)
            )

    def _process_node(
        self,
        lhs_tuple: tuple[int, ...],
        qualifies: Qualifier,
        recorded: dict[int, list[frozenset[int]]],
    ) -> tuple[tuple[int, ...], list[tuple[int, object]], bool]:
        relation = self.relation
        lhs_key = frozenset(lhs_tuple)
        lhs_part = self._part_for(lhs_key)

        rhs_candidates = [
            a
            for a in range(relation.attribute_count)
            if a not in lhs_key
            and not any(prior <= lhs_key for prior in recorded[a])
        ]

        findings: list[tuple[int, object]] = []
        if lhs_part.count == self.n and self.n > 0:
            # superkey: every remaining rhs follows, and supersets are all
            # non-minimal, so the node does not survive
            for rhs in rhs_candidates:
                ok, payload = qualifies(lhs_part.count, lhs_part.count, 0, 0)
                assert ok  # refinement of a key is itself
                findings.append((rhs, payload))
            return (lhs_tuple, findings, False)

        lhs_pairs = lhs_part.pairs() if self.needs_pairs else 0
        for rhs in rhs_candidates:
            refined = self._part_for(lhs_key | {rhs})
            refined_pairs = refined.pairs() if self.needs_pairs else 0
            ok, payload = qualifies(lhs_part.count, refined.count, lhs_pairs, refined_pairs)
            if ok:
                findings.append((rhs, payload))

        # a node with every rhs settled at or below it has nothing to offer
        # above it either
        found_rhs = {rhs for rhs, _ in findings}
        survives = any(
            a not in lhs_key
            and a not in found_rhs
            and not any(prior <= lhs_key for prior in recorded[a])
            for a in range(relation.attribute_count)
        )
        return (lhs_tuple, findings, survives)

    def _part_for(self, attr_set: frozenset[int]) -> _Part:
        part = self.cache.get(attr_set)
        if part is not None:
            return part
        ordered = sorted(attr_set)
        parent = self.cache.get(frozenset(ordered[:-1]))
        if parent is None:
            parent = self._part_for(frozenset(ordered[:-1]))
        last = self.cache[frozenset((ordered[-1],))]
        vector, count = combine_group_vectors(
            (parent.vector, parent.count), (last.vector, last.count)
        )
        part = _Part(vector, count)
        self.cache[attr_set] = part
        return part

    def _evict(self, completed_level: int) -> None:
        if completed_level < 2:
            return  # keep singletons; they seed every intersection
        stale = [key for key in self.cache if len(key) == completed_level]
        for key in stale:
            del self.cache[key]

    def _checkpoint(self) -> None:
        if self.cancel is not None and self.cancel():
            raise DiscoveryCancelled("discovery cancelled at level boundary")


def _join_level(survivors: Sequence[tuple[int, ...]]) -> list[tuple[int, ...]]:
    """Apriori join: unite survivors sharing a prefix, keep sets whose
    every subset of the previous size survived."""
    survivor_set = set(survivors)
    by_prefix: dict[tuple[int, ...], list[int]] = {}
    for lhs in survivors:
        by_prefix.setdefault(lhs[:-1], []).append(lhs[-1])
    joined: list[tuple[int, ...]] = []
    for prefix, lasts in by_prefix.items():
        lasts.sort()
        for i, a in enumerate(lasts):
            for b in lasts[i + 1 :]:
                candidate = prefix + (a, b)
                if all(
                    candidate[:j] + candidate[j + 1 :] in survivor_set
                    for j in range(len(candidate))
                ):
                    joined.append(candidate)
    joined.sort()
    return joined
