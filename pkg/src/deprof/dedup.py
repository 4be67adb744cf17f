"""Sorted-neighborhood deduplication steered by near-key dependencies.

Single-attribute AFD discovery ranks attributes by how many others they
almost determine; the user picks a non-surrogate near-key, the table is
sorted by that key family, and a sliding window emits candidate pairs.
Two rows are duplicates when they agree on at least k attributes (strings
compared after trim + case-fold; shared nulls never count as agreement).
Each confirmed pair is resolved interactively: keep one row, optionally
copying attribute values from the discarded one.

Row ids in pairs and resolutions refer to the relation they were scanned
from. :class:`DedupSession` tracks those original ids across successive
removals and raises :class:`StaleResolutionError` when a decision touches a
row an earlier resolution already consumed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Iterator, Optional, Sequence

from .afd import as_fraction, single_attribute_afds
from .relation import Relation, from_rows


class StaleResolutionError(RuntimeError):
    """A resolution references a row a prior resolution removed."""


@dataclass(frozen=True)
class DedupConfig:
    threshold: Fraction
    window: int
    k: int
    excluded_keys: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "threshold", as_fraction(self.threshold))
        object.__setattr__(self, "excluded_keys", frozenset(self.excluded_keys))
        if self.window < 2:
            raise ValueError("window must be >= 2")
        if self.k < 1:
            raise ValueError("k must be positive")


@dataclass(frozen=True)
class KeyCandidate:
    lhs: int
    rhs_list: tuple[int, ...]
    rhs_count: int
    is_unique: bool


@dataclass(frozen=True)
class DuplicatePair:
    row_a: int
    row_b: int
    matched_attrs: tuple[int, ...]
    match_count: int

    def __post_init__(self) -> None:
        if self.row_a >= self.row_b:
            raise ValueError("pairs must be ordered row_a < row_b")
        if self.match_count != len(self.matched_attrs):
            raise ValueError("match_count must equal len(matched_attrs)")


@dataclass(frozen=True)
class Resolution:
    pair: DuplicatePair
    keep: int
    copy_attrs: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        if self.keep not in (self.pair.row_a, self.pair.row_b):
            raise ValueError("keep must be one of the pair's rows")
        object.__setattr__(self, "copy_attrs", frozenset(self.copy_attrs))

    @property
    def discard(self) -> int:
        return self.pair.row_b if self.keep == self.pair.row_a else self.pair.row_a


def rank_dedup_keys(relation: Relation, cfg: DedupConfig) -> list[KeyCandidate]:
    """Key candidates ordered by dependent-list size, largest first.

    Unique columns are flagged so users can leave out surrogate primary
    keys; attributes in ``excluded_keys`` are dropped outright.
    """
    grouped = single_attribute_afds(relation, cfg.threshold)
    candidates = []
    for lhs, rhs_list in grouped.items():
        if lhs in cfg.excluded_keys or not rhs_list:
            continue
        codes = relation.columns[lhs]
        is_unique = len(set(int(c) for c in codes)) == relation.row_count
        candidates.append(
            KeyCandidate(
                lhs=lhs,
                rhs_list=tuple(rhs_list),
                rhs_count=len(rhs_list),
                is_unique=is_unique,
            )
        )
    candidates.sort(key=lambda c: (-c.rhs_count, c.lhs))
    return candidates


def sort_for_neighborhood(relation: Relation, chosen: KeyCandidate) -> list[int]:
    """Stable row permutation sorted by the key family's values.

    The chosen lhs leads, then its dependent attributes in list order.
    Nulls sort after every value of their column.
    """
    attrs = (chosen.lhs,) + chosen.rhs_list

    def sort_key(row: int):
        key = []
        for attr in attrs:
            value = relation.value(row, attr)
            key.append((1, "") if value is None else (0, value))
        return key

    return sorted(range(relation.row_count), key=sort_key)


def window_pairs(permutation: Sequence[int], window: int) -> Iterator[tuple[int, int]]:
    """Row-id pairs whose sorted positions are less than ``window`` apart.

    Every qualifying pair is emitted exactly once, scanning positions in
    ascending order; window >= n degenerates to all pairs.
    """
    if window < 2:
        raise ValueError("window must be >= 2")
    n = len(permutation)
    for i in range(n):
        for j in range(i + 1, min(i + window, n)):
            yield permutation[i], permutation[j]


def _normalize(value: Any) -> Any:
    if isinstance(value, str):
        return value.strip().casefold()
    return value


def match_pair(
    relation: Relation, row_a: int, row_b: int, k: int
) -> Optional[DuplicatePair]:
    """Pair up two rows if they agree on at least k attributes.

    Agreement needs both values non-null and equal after normalization;
    a shared null is weak evidence of nothing and never matches.
    """
    if row_a == row_b:
        raise ValueError("rows must be distinct")
    lo, hi = min(row_a, row_b), max(row_a, row_b)
    matched = []
    for attr in range(relation.attribute_count):
        left = relation.value(lo, attr)
        right = relation.value(hi, attr)
        if left is None or right is None:
            continue
        if _normalize(left) == _normalize(right):
            matched.append(attr)
    if len(matched) < k:
        return None
    return DuplicatePair(
        row_a=lo, row_b=hi, matched_attrs=tuple(matched), match_count=len(matched)
    )


def find_duplicates(
    relation: Relation,
    cfg: DedupConfig,
    chosen: Optional[KeyCandidate] = None,
) -> tuple[KeyCandidate, list[DuplicatePair]]:
    """Full candidate scan: rank keys, sort, slide the window, match."""
    if cfg.k > relation.attribute_count:
        raise ValueError(
            f"k={cfg.k} exceeds the attribute count {relation.attribute_count}"
        )
    if chosen is None:
        ranked = rank_dedup_keys(relation, cfg)
        if not ranked:
            raise ValueError("no key candidates at this threshold; raise it")
        chosen = ranked[0]
    permutation = sort_for_neighborhood(relation, chosen)
    pairs = []
    for row_a, row_b in window_pairs(permutation, cfg.window):
        pair = match_pair(relation, row_a, row_b, cfg.k)
        if pair is not None:
            pairs.append(pair)
    return chosen, pairs


def apply_resolution(relation: Relation, resolution: Resolution) -> Relation:
    """Keep one row of the pair, copy the chosen attributes from the other,
    drop the discarded row. Row ids refer to the given relation."""
    keep, discard = resolution.keep, resolution.discard
    if not (0 <= keep < relation.row_count and 0 <= discard < relation.row_count):
        raise StaleResolutionError(
            f"resolution references missing rows ({keep}, {discard})"
        )
    return _merge_rows(relation, keep, discard, resolution.copy_attrs)


def _merge_rows(
    relation: Relation, keep: int, discard: int, copy_attrs: frozenset[int]
) -> Relation:
    rows = []
    for r in range(relation.row_count):
        if r == discard:
            continue
        if r == keep and copy_attrs:
            rows.append(
                [
                    relation.value(discard, a) if a in copy_attrs else relation.value(r, a)
                    for a in range(relation.attribute_count)
                ]
            )
        else:
            rows.append([relation.value(r, a) for a in range(relation.attribute_count)])
    return from_rows(
        relation.attribute_names(),
        rows,
        nulls_distinct=relation.nulls_distinct,
        source=relation.source,
    )


@dataclass
class JournalEntry:
    pair: tuple[int, int]  # original row ids
    action: str  # "keep_a" | "keep_b" | "skip"
    copy_attrs: tuple[int, ...] = ()

    def to_json(self) -> dict:
        return {
            "pair": list(self.pair),
            "action": self.action,
            "copy_attrs": sorted(self.copy_attrs),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "JournalEntry":
        return cls(
            pair=(int(doc["pair"][0]), int(doc["pair"][1])),
            action=doc["action"],
            copy_attrs=tuple(int(a) for a in doc.get("copy_attrs", [])),
        )


class DedupSession:
    """Replayable interactive merge over a fixed candidate scan.

    Pairs are proposed in scan order; decisions append to the journal and
    mutate the working relation. The whole session is a pure function of
    (base relation, config, journal), which is what makes crash recovery a
    journal replay.
    """

    def __init__(
        self,
        relation: Relation,
        cfg: DedupConfig,
        chosen: Optional[KeyCandidate] = None,
    ) -> None:
        self.base = relation
        self.cfg = cfg
        self.chosen, self.pairs = find_duplicates(relation, cfg, chosen)
        self.journal: list[JournalEntry] = []
        self._rebuild()

    # -- state derived from the journal ---------------------------------

    def _rebuild(self) -> None:
        relation = self.base
        alive = list(range(relation.row_count))  # original ids, current order
        consumed: set[int] = set()
        for entry in self.journal:
            if entry.action == "skip":
                continue
            a, b = entry.pair
            if a in consumed or b in consumed:
                raise StaleResolutionError(
                    f"journal entry references consumed row: {entry.pair}"
                )
            keep_orig = a if entry.action == "keep_a" else b
            discard_orig = b if entry.action == "keep_a" else a
            keep_cur = alive.index(keep_orig)
            discard_cur = alive.index(discard_orig)
            relation = _merge_rows(
                relation, keep_cur, discard_cur, frozenset(entry.copy_attrs)
            )
            alive.pop(discard_cur)
            consumed.add(discard_orig)
        self.current = relation
        self._alive = alive
        self._consumed = consumed
        self._decided = {tuple(e.pair) for e in self.journal}

    # -- protocol ---------------------------------------------------------

    def propose(self) -> Optional[DuplicatePair]:
        """Next undecided pair whose rows are both still alive."""
        for pair in self.pairs:
            key = (pair.row_a, pair.row_b)
            if key in self._decided:
                continue
            if pair.row_a in self._consumed or pair.row_b in self._consumed:
                continue
            return pair
        return None

    def decide(self, pair: DuplicatePair, keep_side: str, copy_attrs: Iterable[int] = ()) -> None:
        """Resolve one proposed pair; ``keep_side`` is "a" or "b"."""
        if keep_side not in ("a", "b"):
            raise ValueError("keep_side must be 'a' or 'b'")
        key = (pair.row_a, pair.row_b)
        if key in self._decided:
            raise ValueError(f"pair already decided: {key}")
        if pair.row_a in self._consumed or pair.row_b in self._consumed:
            raise StaleResolutionError(f"pair references consumed row: {key}")
        self.journal.append(
            JournalEntry(
                pair=key,
                action="keep_a" if keep_side == "a" else "keep_b",
                copy_attrs=tuple(sorted(set(copy_attrs))),
            )
        )
        self._rebuild()

    def skip(self, pair: DuplicatePair) -> None:
        self.journal.append(JournalEntry(pair=(pair.row_a, pair.row_b), action="skip"))
        self._rebuild()

    def undo(self) -> Optional[JournalEntry]:
        """Remove the latest journal entry and roll the relation back."""
        if not self.journal:
            return None
        entry = self.journal.pop()
        self._rebuild()
        return entry

    def finish(self) -> Relation:
        return self.current

    # -- persistence -------------------------------------------------------

    def journal_json(self) -> dict:
        return {
            "config": {
                "threshold": str(self.cfg.threshold),
                "window": self.cfg.window,
                "k": self.cfg.k,
                "excluded_keys": sorted(self.cfg.excluded_keys),
            },
            "chosen_key": self.chosen.lhs,
            "decisions": [entry.to_json() for entry in self.journal],
        }

    def replay(self, entries: Sequence[JournalEntry]) -> None:
        """Reset to the base relation and apply a stored journal."""
        self.journal = list(entries)
        self._rebuild()

    def state_hash(self) -> str:
        return self.current.fingerprint()
