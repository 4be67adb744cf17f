from __future__ import annotations

from fractions import Fraction
from pathlib import Path
from typing import Any, Optional, Sequence, Union

from deprof.afd import as_fraction, discover_afds, single_attribute_afds
from deprof.fd import discover_fds
from deprof.mfd import MFDStatement, validate_mfd
from deprof.relation import CsvFormatError, Relation, from_rows, load_csv


class BindingError(Exception):
    """Base for binding-level problems."""


class StateError(BindingError):
    """Operation not allowed in the handle's current state."""


class ConversionError(BindingError):
    """Input table could not be converted into a relation."""


_DEFAULT_OPTIONS: dict[str, dict[str, Any]] = {
    "fd_discovery": {"max_lhs": 3},
    "afd_discovery": {"max_lhs": 3, "threshold": "0.05"},
    "single_attribute_afds": {"threshold": "0.05"},
    "mfd_validation": {"lhs": None, "rhs": None, "metric": "euclidean", "p": 1.0},
}

ALGORITHM_KINDS = tuple(sorted(_DEFAULT_OPTIONS))


class AlgorithmHandle:
    """One configured algorithm run.

    States: ``configured`` (options editable, data loadable) and
    ``executed`` (results readable, everything else frozen).
    """

    def __init__(self, kind: str):
        if kind not in _DEFAULT_OPTIONS:
            raise BindingError(
                f"unknown algorithm kind {kind!r}; valid kinds: {', '.join(ALGORITHM_KINDS)}"
            )
        self.kind = kind
        self.options: dict[str, Any] = dict(_DEFAULT_OPTIONS[kind])
        self.state = "configured"
        self._relation: Optional[Relation] = None
        self._results: Any = None

    # -- configuration ------------------------------------------------------

    def set_option(self, name: str, value: Any) -> "AlgorithmHandle":
        if self.state == "executed":
            raise StateError("options are frozen after execute; create a new handle")
        if name not in self.options:
            raise BindingError(
                f"{self.kind} has no option {name!r}; available: {sorted(self.options)}"
            )
        self.options[name] = value
        return self

    def load_data(self, table: Any, **csv_kwargs: Any) -> "AlgorithmHandle":
        if self.state == "executed":
            raise StateError("handle already executed; create a new handle")
        self._relation = _to_relation(table, **csv_kwargs)
        return self

    # -- execution -----------------------------------------------------------

    def execute(self) -> "AlgorithmHandle":
        if self.state == "executed":
            raise StateError("handle already executed; create a new handle")
        if self._relation is None:
            raise StateError("no data loaded; call load_data first")
        self._results = _RUNNERS[self.kind](self._relation, self.options)
        self.state = "executed"
        return self

    def get_results(self) -> Any:
        if self.state != "executed":
            raise StateError("no results yet; call execute first")
        return self._results


# -- module-level workflow functions (mirror the handle methods) --------------


def create(kind: str) -> AlgorithmHandle:
    return AlgorithmHandle(kind)


def load_data(handle: AlgorithmHandle, table: Any, **csv_kwargs: Any) -> AlgorithmHandle:
    return handle.load_data(table, **csv_kwargs)


def execute(handle: AlgorithmHandle) -> AlgorithmHandle:
    return handle.execute()


def get_results(handle: AlgorithmHandle) -> Any:
    return handle.get_results()


# -- table conversion -----------------------------------------------------------


def _to_relation(table: Any, **csv_kwargs: Any) -> Relation:
    """Convert once, eagerly: later mutation of the source never leaks in."""
    if isinstance(table, Relation):
        return table
    if isinstance(table, (str, Path)):
        path = Path(table)
        if not path.exists():
            raise ConversionError(f"no such file: {path}")
        from deprof.relation import CsvConfig

        return load_csv(path, CsvConfig(**csv_kwargs) if csv_kwargs else CsvConfig())

    try:
        import pandas as pd
    except ImportError:  # pragma: no cover
        pd = None
    if pd is not None and isinstance(table, pd.DataFrame):
        return _from_dataframe(table)

    if isinstance(table, Sequence):
        columns = csv_kwargs.pop("columns", None)
        rows = [list(row) for row in table]
        if columns is None:
            width = len(rows[0]) if rows else 0
            columns = [f"col_{i}" for i in range(width)]
        return _from_python_rows(list(columns), rows)

    raise ConversionError(
        f"unsupported table type {type(table).__name__}; "
        "pass a pandas DataFrame, a CSV path, or a sequence of rows"
    )


def _from_dataframe(frame) -> Relation:
    import pandas as pd

    names = [str(c) for c in frame.columns]
    converted: list[list[Any]] = [[] for _ in names]
    for idx, name in enumerate(frame.columns):
        series = frame[name]
        for value in series:
            if value is None or (isinstance(value, float) and value != value) or value is pd.NA:
                converted[idx].append(None)
                continue
            converted[idx].append(_plain_value(value, names[idx]))
    rows = [list(cells) for cells in zip(*converted)] if names else []
    return from_rows(names, rows, source="<dataframe>")


def _plain_value(value: Any, column: str) -> Any:
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, (int, float, str)):
        return value
    # numpy scalars carry .item(); anything else is unsupported
    item = getattr(value, "item", None)
    if callable(item):
        plain = item()
        if isinstance(plain, (int, float, str)):
            return plain
    if hasattr(value, "__str__") and type(value).__module__ in ("builtins", "numpy"):
        raise ConversionError(f"unsupported cell type {type(value).__name__} in column {column!r}")
    return str(value)


def _from_python_rows(columns: list[str], rows: list[list[Any]]) -> Relation:
    try:
        return from_rows(columns, rows, source="<rows>")
    except CsvFormatError as exc:
        raise ConversionError(str(exc)) from exc


# -- per-kind execution, results as native values --------------------------------


def _run_fd_discovery(relation: Relation, options: dict) -> list[tuple[tuple[str, ...], str]]:
    fdset = discover_fds(relation, max_lhs=int(options["max_lhs"]))
    schema = relation.attribute_names()
    return [
        (tuple(schema[a] for a in fd.lhs), schema[fd.rhs]) for fd in fdset.fds
    ]


def _run_afd_discovery(
    relation: Relation, options: dict
) -> list[tuple[tuple[str, ...], str, Fraction]]:
    afds = discover_afds(
        relation, as_fraction(options["threshold"]), int(options["max_lhs"])
    )
    schema = relation.attribute_names()
    return [
        (tuple(schema[a] for a in afd.fd.lhs), schema[afd.fd.rhs], afd.error)
        for afd in afds
    ]


def _run_single_attribute_afds(relation: Relation, options: dict) -> dict[str, list[str]]:
    grouped = single_attribute_afds(relation, as_fraction(options["threshold"]))
    schema = relation.attribute_names()
    return {schema[i]: [schema[j] for j in deps] for i, deps in grouped.items()}


def _run_mfd_validation(relation: Relation, options: dict) -> tuple:
    if not options.get("lhs") or not options.get("rhs"):
        raise BindingError("mfd_validation needs lhs and rhs options")
    lhs = tuple(relation.attribute_index(a) for a in options["lhs"])
    rhs = tuple(relation.attribute_index(a) for a in options["rhs"])
    stmt = MFDStatement(lhs=lhs, rhs=rhs, metric=options["metric"], p=float(options["p"]))
    verdict = validate_mfd(relation, stmt)
    violations = [
        (tuple(v.rows), v.diameter, tuple(v.witness) if v.witness else None)
        for v in verdict.violating_clusters
    ]
    return (verdict.holds, verdict.global_diameter, violations)


_RUNNERS = {
    "fd_discovery": _run_fd_discovery,
    "afd_discovery": _run_afd_discovery,
    "single_attribute_afds": _run_single_attribute_afds,
    "mfd_validation": _run_mfd_validation,
}
