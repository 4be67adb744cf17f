"""Dictionary-encoded relations over CSV data, plus stripped partitions.

A :class:`Relation` stores one integer code column per attribute; code 0 is
reserved for null in every column and the remaining codes are assigned in
first-occurrence order, so loading the same bytes always produces the same
encoding. Column types are inferred table-wide (integer, float, string) and
cells are decoded to typed values through per-column dictionaries.

Stripped partitions (the equivalence classes of rows that agree on an
attribute set, singleton classes removed) are the index every dependency
engine in this package is built on. Two representations are provided:

* :class:`StrippedPartition` -- explicit row clusters, the canonical form.
* group vectors -- a dense ``numpy`` array assigning each row a group id,
  used as the hot-path representation for lattice search. Both encode the
  same partition and the tests hold them to that.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence, Union

import numpy as np

NULL_ID = 0

_TYPE_STRING = "string"
_TYPE_INTEGER = "integer"
_TYPE_FLOAT = "float"


class CsvFormatError(ValueError):
    """Structurally broken CSV input: ragged rows or no rows at all."""


@dataclass(frozen=True)
class CsvConfig:
    """Parse settings for :func:`load_csv`.

    ``nulls_distinct`` controls partition semantics downstream: by default
    nulls compare equal to each other (they form one cluster); flipping the
    flag makes every null row a singleton.
    """

    separator: str = ","
    has_header: bool = True
    null_token: str = ""
    nulls_distinct: bool = False

    def __post_init__(self) -> None:
        if len(self.separator) != 1:
            raise ValueError("separator must be a single character")


@dataclass(frozen=True)
class Attribute:
    index: int
    name: str
    inferred_type: str  # "string" | "integer" | "float"

    @property
    def is_numeric(self) -> bool:
        return self.inferred_type in (_TYPE_INTEGER, _TYPE_FLOAT)


class Relation:
    """Immutable dictionary-encoded table.

    ``columns[a]`` is an int32 array of length ``row_count`` holding value
    codes for attribute ``a``; ``dictionaries[a][code]`` recovers the typed
    value (``None`` for code 0, the null marker).
    """

    __slots__ = (
        "attributes",
        "row_count",
        "columns",
        "dictionaries",
        "null_id",
        "nulls_distinct",
        "source",
        "_group_cache",
    )

    def __init__(
        self,
        attributes: Sequence[Attribute],
        columns: Sequence[np.ndarray],
        dictionaries: Sequence[Sequence[Any]],
        *,
        nulls_distinct: bool = False,
        source: str = "<memory>",
    ) -> None:
        if len(columns) != len(attributes) or len(dictionaries) != len(attributes):
            raise ValueError("attributes, columns and dictionaries must align")
        n = int(columns[0].shape[0]) if columns else 0
        for col in columns:
            if col.shape != (n,):
                raise ValueError("all columns must have the same row count")
        self.attributes = tuple(attributes)
        self.row_count = n
        self.columns = tuple(np.asarray(c, dtype=np.int32) for c in columns)
        self.dictionaries = tuple(tuple(d) for d in dictionaries)
        self.null_id = NULL_ID
        self.nulls_distinct = nulls_distinct
        self.source = source
        self._group_cache: dict[int, tuple[np.ndarray, int]] = {}

    # -- accessors ---------------------------------------------------------

    @property
    def attribute_count(self) -> int:
        return len(self.attributes)

    def attribute_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)

    def value(self, row: int, attr: int) -> Any:
        """Typed value of one cell; ``None`` for null."""
        return self.dictionaries[attr][int(self.columns[attr][row])]

    def row_values(self, row: int) -> tuple[Any, ...]:
        return tuple(self.value(row, a) for a in range(self.attribute_count))

    def is_null(self, row: int, attr: int) -> bool:
        return int(self.columns[attr][row]) == NULL_ID

    def attribute_index(self, name_or_index: Union[str, int]) -> int:
        """Resolve an attribute given by name or 0-based index."""
        if isinstance(name_or_index, int):
            if not 0 <= name_or_index < self.attribute_count:
                raise KeyError(f"attribute index out of range: {name_or_index}")
            return name_or_index
        for attr in self.attributes:
            if attr.name == name_or_index:
                return attr.index
        raise KeyError(f"unknown attribute: {name_or_index!r}")

    # -- group vectors (hot-path partition representation) ------------------

    def group_vector(self, attr: int) -> tuple[np.ndarray, int]:
        """Dense per-row group ids for one attribute, honoring null policy.

        Returns ``(vector, group_count)``; rows share an id iff they agree
        on the attribute. Cached per relation.
        """
        cached = self._group_cache.get(attr)
        if cached is not None:
            return cached
        codes = self.columns[attr]
        if self.nulls_distinct:
            nulls = codes == NULL_ID
            if nulls.any():
                widened = codes.astype(np.int64)
                # each null row becomes its own group
                widened[nulls] = self.row_count + np.nonzero(nulls)[0]
                uniques, inverse = np.unique(widened, return_inverse=True)
                result = (inverse.astype(np.int32), int(len(uniques)))
                self._group_cache[attr] = result
                return result
        uniques, inverse = np.unique(codes, return_inverse=True)
        result = (inverse.astype(np.int32), int(len(uniques)))
        self._group_cache[attr] = result
        return result

    def fingerprint(self) -> str:
        """Content hash of the decoded table, stable across encodings."""
        digest = hashlib.sha256()
        digest.update("\x1f".join(a.name for a in self.attributes).encode())
        for row in range(self.row_count):
            line = "\x1f".join(render_value(v) for v in self.row_values(row))
            digest.update(b"\x1e")
            digest.update(line.encode())
        return digest.hexdigest()

    def __repr__(self) -> str:  # pragma: no cover
        return (
            f"Relation({self.attribute_count} attributes, {self.row_count} rows, "
            f"source={self.source!r})"
        )


def combine_group_vectors(
    a: tuple[np.ndarray, int], b: tuple[np.ndarray, int]
) -> tuple[np.ndarray, int]:
    """Group vector of the refinement of two group vectors.

    Rows share a group in the result iff they share one in both inputs;
    this is partition intersection in vector form.
    """
    vec_a, _ = a
    vec_b, count_b = b
    paired = vec_a.astype(np.int64) * np.int64(count_b) + vec_b
    uniques, inverse = np.unique(paired, return_inverse=True)
    return inverse.astype(np.int32), int(len(uniques))


def group_sizes(vector: np.ndarray, count: int) -> np.ndarray:
    return np.bincount(vector, minlength=count)


def agreeing_pairs(grouping: tuple[np.ndarray, int]) -> int:
    """Number of unordered row pairs co-grouped in the vector (exact int)."""
    sizes = group_sizes(*grouping).astype(np.int64)
    return int(np.sum(sizes * (sizes - 1) // 2))


# -- stripped partitions ---------------------------------------------------


@dataclass(frozen=True)
class StrippedPartition:
    """Equivalence classes (size >= 2) of rows agreeing on ``attr_set``.

    Clusters are canonical: each cluster lists row ids ascending, and the
    cluster list is ordered by smallest row id.
    """

    attr_set: frozenset[int]
    clusters: tuple[tuple[int, ...], ...]
    n: int

    def error(self) -> int:
        """Sum of cluster sizes minus cluster count; 0 iff attr_set is a key."""
        return sum(len(c) for c in self.clusters) - len(self.clusters)


def _canonical_clusters(groups: Iterable[Sequence[int]]) -> tuple[tuple[int, ...], ...]:
    kept = [tuple(sorted(g)) for g in groups if len(g) >= 2]
    kept.sort(key=lambda c: c[0])
    return tuple(kept)


def build_pli(relation: Relation, attr: int) -> StrippedPartition:
    """Stripped partition of one attribute.

    Null rows group together by default; with ``nulls_distinct`` they are
    singletons and get stripped.
    """
    if not 0 <= attr < relation.attribute_count:
        raise KeyError(f"attribute index out of range: {attr}")
    groups: dict[int, list[int]] = {}
    codes = relation.columns[attr]
    for row in range(relation.row_count):
        groups.setdefault(int(codes[row]), []).append(row)
    if relation.nulls_distinct:
        groups.pop(NULL_ID, None)
    return StrippedPartition(
        attr_set=frozenset((attr,)),
        clusters=_canonical_clusters(groups.values()),
        n=relation.row_count,
    )


def intersect_pli(p: StrippedPartition, q: StrippedPartition) -> StrippedPartition:
    """Partition over the union of both attribute sets.

    Rows stay co-clustered iff co-clustered in both inputs; singletons are
    stripped. Probe-table intersection, O(n).
    """
    if p.n != q.n:
        raise ValueError(f"partition row counts differ: {p.n} != {q.n}")
    probe = [-1] * p.n
    for idx, cluster in enumerate(q.clusters):
        for row in cluster:
            probe[row] = idx
    out: list[list[int]] = []
    for cluster in p.clusters:
        buckets: dict[int, list[int]] = {}
        for row in cluster:
            hit = probe[row]
            if hit >= 0:
                buckets.setdefault(hit, []).append(row)
        out.extend(b for b in buckets.values() if len(b) >= 2)
    return StrippedPartition(
        attr_set=p.attr_set | q.attr_set,
        clusters=_canonical_clusters(out),
        n=p.n,
    )


def partition_for(relation: Relation, attrs: Iterable[int]) -> StrippedPartition:
    """Stripped partition over an attribute set via the vector path.

    The empty set yields the single all-rows cluster (stripped when n < 2).
    """
    attr_list = sorted(set(attrs))
    if not attr_list:
        rows = tuple(range(relation.row_count))
        clusters = (rows,) if relation.row_count >= 2 else ()
        return StrippedPartition(frozenset(), clusters, relation.row_count)
    grouping = relation.group_vector(attr_list[0])
    for attr in attr_list[1:]:
        grouping = combine_group_vectors(grouping, relation.group_vector(attr))
    return StrippedPartition(
        attr_set=frozenset(attr_list),
        clusters=clusters_from_vector(grouping),
        n=relation.row_count,
    )


def clusters_from_vector(grouping: tuple[np.ndarray, int]) -> tuple[tuple[int, ...], ...]:
    """Materialize size->=2 clusters from a group vector, canonically ordered."""
    vector, count = grouping
    n = len(vector)
    if n == 0:
        return ()
    order = np.argsort(vector, kind="stable")
    sorted_ids = vector[order]
    boundaries = np.nonzero(np.diff(sorted_ids))[0] + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [n]))
    groups = [
        tuple(int(r) for r in order[s:e]) for s, e in zip(starts, ends) if e - s >= 2
    ]
    groups.sort(key=lambda c: c[0])
    return tuple(groups)


# -- CSV ingestion ---------------------------------------------------------


def _parse_int(token: str) -> int:
    if token.strip().lower() in ("nan", "inf", "-inf", "+inf", "infinity", "-infinity"):
        raise ValueError(token)
    return int(token)


def _parse_float(token: str) -> float:
    value = float(token)
    if not math.isfinite(value):
        raise ValueError(token)
    return value


def _infer_column_type(tokens: Iterable[str]) -> str:
    saw_value = False
    all_int = True
    all_float = True
    for token in tokens:
        saw_value = True
        if all_int:
            try:
                _parse_int(token)
            except ValueError:
                all_int = False
        if not all_int and all_float:
            try:
                _parse_float(token)
            except ValueError:
                all_float = False
                break
    if not saw_value:
        return _TYPE_STRING
    if all_int:
        return _TYPE_INTEGER
    if all_float:
        return _TYPE_FLOAT
    return _TYPE_STRING


_PARSERS = {
    _TYPE_INTEGER: _parse_int,
    _TYPE_FLOAT: _parse_float,
    _TYPE_STRING: lambda token: token,
}


def load_csv(
    source: Union[bytes, str, Path, io.IOBase],
    config: CsvConfig = CsvConfig(),
) -> Relation:
    """Parse delimited text into a typed, dictionary-encoded relation.

    A column is integer if every non-null cell parses as an integer, float if
    every non-null cell parses as a finite number, else string. Empty fields
    and cells equal to ``null_token`` become the null code.
    """
    text, origin = _read_text(source)
    rows = list(csv.reader(io.StringIO(text), delimiter=config.separator))
    if not rows:
        raise CsvFormatError("empty input: no rows to parse")

    if config.has_header:
        names = [name for name in rows[0]]
        data_rows = rows[1:]
        first_data_line = 2
    else:
        names = [f"col_{i}" for i in range(len(rows[0]))]
        data_rows = rows
        first_data_line = 1

    width = len(names)
    for offset, row in enumerate(data_rows):
        if len(row) != width:
            line_no = first_data_line + offset
            raise CsvFormatError(
                f"ragged row at line {line_no}: expected {width} fields, got {len(row)}"
            )

    n = len(data_rows)
    m = width
    cells: list[list[str | None]] = [
        [None if cell == config.null_token else cell for cell in row]
        for row in data_rows
    ]

    attributes = []
    columns = []
    dictionaries = []
    for a in range(m):
        non_null = (cells[r][a] for r in range(n) if cells[r][a] is not None)
        col_type = _infer_column_type(non_null)
        parse = _PARSERS[col_type]
        codes = np.empty(n, dtype=np.int32)
        dictionary: list[Any] = [None]
        code_of: dict[Any, int] = {}
        for r in range(n):
            token = cells[r][a]
            if token is None:
                codes[r] = NULL_ID
                continue
            value = parse(token)
            code = code_of.get(value)
            if code is None:
                code = len(dictionary)
                code_of[value] = code
                dictionary.append(value)
            codes[r] = code
        attributes.append(Attribute(index=a, name=names[a], inferred_type=col_type))
        columns.append(codes)
        dictionaries.append(dictionary)

    return Relation(
        attributes,
        columns,
        dictionaries,
        nulls_distinct=config.nulls_distinct,
        source=origin,
    )


def _read_text(source: Union[bytes, str, Path, io.IOBase]) -> tuple[str, str]:
    if isinstance(source, bytes):
        return source.decode("utf-8"), "<memory>"
    if isinstance(source, Path):
        return source.read_text(encoding="utf-8"), str(source)
    if isinstance(source, str):
        return source, "<memory>"
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data, getattr(source, "name", "<stream>")


def from_rows(
    names: Sequence[str],
    rows: Sequence[Sequence[Any]],
    *,
    nulls_distinct: bool = False,
    source: str = "<memory>",
) -> Relation:
    """Build a relation from in-memory python rows (None marks null).

    Type inference matches :func:`load_csv`: a column of ints is integer,
    ints/floats mixed is float, anything else is string (values are then
    kept as their ``str`` form).
    """
    n = len(rows)
    m = len(names)
    for i, row in enumerate(rows):
        if len(row) != m:
            raise CsvFormatError(f"ragged row at index {i}: expected {m} fields")
    attributes = []
    columns = []
    dictionaries = []
    for a in range(m):
        values = [row[a] for row in rows]
        non_null = [v for v in values if v is not None]
        if all(isinstance(v, int) and not isinstance(v, bool) for v in non_null):
            col_type = _TYPE_INTEGER
        elif all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in non_null):
            col_type = _TYPE_FLOAT
            non_null = [float(v) for v in non_null]
            values = [None if v is None else float(v) for v in values]
        else:
            col_type = _TYPE_STRING
            values = [None if v is None else str(v) for v in values]
        codes = np.empty(n, dtype=np.int32)
        dictionary: list[Any] = [None]
        code_of: dict[Any, int] = {}
        for r, value in enumerate(values):
            if value is None:
                codes[r] = NULL_ID
                continue
            code = code_of.get(value)
            if code is None:
                code = len(dictionary)
                code_of[value] = code
                dictionary.append(value)
            codes[r] = code
        attributes.append(Attribute(index=a, name=str(names[a]), inferred_type=col_type))
        columns.append(codes)
        dictionaries.append(dictionary)
    return Relation(
        attributes, columns, dictionaries, nulls_distinct=nulls_distinct, source=source
    )


def render_value(value: Any) -> str:
    """Canonical text form of a cell value; empty string for null."""
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def to_csv(relation: Relation, config: CsvConfig = CsvConfig()) -> str:
    """Serialize back to delimited text (header per config)."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, delimiter=config.separator, lineterminator="\n")
    if config.has_header:
        writer.writerow(relation.attribute_names())
    for row in range(relation.row_count):
        writer.writerow(
            [
                config.null_token if relation.is_null(row, a) else render_value(relation.value(row, a))
                for a in range(relation.attribute_count)
            ]
        )
    return buffer.getvalue()


def replace_values(relation: Relation, edits: Sequence[tuple[int, int, Any]]) -> Relation:
    """New relation with cells ``(row, attr)`` set to new typed values.

    Column types are kept; the edited columns are re-encoded so dictionary
    invariants still hold.
    """
    by_attr: dict[int, dict[int, Any]] = {}
    for row, attr, value in edits:
        if not 0 <= row < relation.row_count:
            raise IndexError(f"row out of range: {row}")
        if not 0 <= attr < relation.attribute_count:
            raise KeyError(f"attribute index out of range: {attr}")
        by_attr.setdefault(attr, {})[row] = value
    rows = [
        [
            by_attr.get(a, {}).get(r, relation.value(r, a))
            for a in range(relation.attribute_count)
        ]
        for r in range(relation.row_count)
    ]
    return from_rows(
        relation.attribute_names(),
        rows,
        nulls_distinct=relation.nulls_distinct,
        source=relation.source,
    )
