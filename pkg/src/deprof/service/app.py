"""HTTP task service: upload datasets, run jobs, browse results, merge dupes.

JSON over HTTP under ``/api/v1``. Task records are persisted before the
submit call returns; results are immutable files; dedup decisions hit the
journal before they are acknowledged, so a crash at any point replays to
the same state.
"""

from __future__ import annotations

import re
from contextlib import asynccontextmanager
from pathlib import Path
from typing import Any, Optional

from fastapi import Body, FastAPI, HTTPException, Query, Request, Response

from ..afd import as_fraction
from ..dedup import DedupConfig, DedupSession, JournalEntry, StaleResolutionError
from ..relation import CsvConfig, CsvFormatError, to_csv, replace_values
from .. import report
from .runner import TaskRunner
from .storage import TASK_KINDS, Storage

RESULTS_LIMIT_CAP = 500


def _error(status_code: int, code: str, message: str, **extra: Any) -> HTTPException:
    return HTTPException(
        status_code=status_code, detail={"code": code, "message": message, **extra}
    )


def create_app(storage_root: Path, workers: int = 2) -> FastAPI:
    storage = Storage(storage_root)
    runner = TaskRunner(storage, width=workers)
    sessions: dict[str, DedupSession] = {}

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        for task_id in storage.recover():
            runner.submit(task_id)
        yield
        runner.shutdown()

    app = FastAPI(title="deprof task service", version="1", lifespan=lifespan)

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    # -- datasets -------------------------------------------------------------

    @app.post("/api/v1/datasets")
    async def upload_dataset(
        request: Request,
        separator: str = Query(","),
        has_header: bool = Query(True),
        null_token: str = Query(""),
        nulls_distinct: bool = Query(False),
    ) -> dict:
        data = await request.body()
        if not data:
            raise _error(422, "empty_upload", "request body is empty")
        try:
            config = CsvConfig(
                separator=separator,
                has_header=has_header,
                null_token=null_token,
                nulls_distinct=nulls_distinct,
            )
            dataset_id = storage.store_dataset(data, config)
        except (CsvFormatError, ValueError) as exc:
            raise _error(422, "bad_csv", str(exc))
        return {"dataset_id": dataset_id}

    @app.get("/api/v1/datasets/{dataset_id}")
    def dataset_meta(dataset_id: str) -> dict:
        meta = storage.dataset_meta(dataset_id)
        if meta is None:
            raise _error(404, "unknown_dataset", f"no dataset {dataset_id}")
        return meta

    @app.get("/api/v1/datasets/{dataset_id}/csv")
    def dataset_csv(dataset_id: str) -> Response:
        if storage.dataset_meta(dataset_id) is None:
            raise _error(404, "unknown_dataset", f"no dataset {dataset_id}")
        return Response(content=storage.dataset_bytes(dataset_id), media_type="text/csv")

    @app.post("/api/v1/datasets/{dataset_id}/edits")
    def apply_edits(dataset_id: str, payload: dict = Body(...)) -> dict:
        meta = storage.dataset_meta(dataset_id)
        if meta is None:
            raise _error(404, "unknown_dataset", f"no dataset {dataset_id}")
        edits = payload.get("edits")
        if not isinstance(edits, list) or not edits:
            raise _error(422, "bad_params", "edits must be a non-empty list", fields=["edits"])
        relation = storage.load_relation(dataset_id)
        fixed = []
        try:
            for edit in edits:
                attr = relation.attribute_index(edit["attr"])
                fixed.append((int(edit["row"]), attr, edit["value"]))
            edited = replace_values(relation, fixed)
        except (KeyError, IndexError, TypeError) as exc:
            raise _error(422, "bad_edit", str(exc))
        config = meta["config"]
        new_id = storage.store_dataset(
            to_csv(
                edited,
                CsvConfig(
                    separator=config["separator"],
                    has_header=config["has_header"],
                    null_token=config["null_token"],
                    nulls_distinct=config["nulls_distinct"],
                ),
            ).encode("utf-8"),
            CsvConfig(
                separator=config["separator"],
                has_header=config["has_header"],
                null_token=config["null_token"],
                nulls_distinct=config["nulls_distinct"],
            ),
        )
        return {"dataset_id": new_id}

    # -- tasks ------------------------------------------------------------------

    @app.post("/api/v1/tasks")
    def submit_task(payload: dict = Body(...)) -> dict:
        kind = payload.get("kind")
        dataset_id = payload.get("dataset_id")
        params = payload.get("params") or {}
        if kind not in TASK_KINDS:
            raise _error(422, "unknown_kind", f"kind must be one of {list(TASK_KINDS)}", fields=["kind"])
        meta = storage.dataset_meta(dataset_id) if dataset_id else None
        if meta is None:
            raise _error(404, "unknown_dataset", f"no dataset {dataset_id}")
        bad_fields = _validate_params(kind, params, meta, storage)
        if bad_fields:
            raise _error(422, "bad_params", "invalid task parameters", fields=sorted(bad_fields))
        record = storage.create_task(kind, params, dataset_id)  # persisted as queued
        runner.submit(record["id"])
        return record

    @app.get("/api/v1/tasks")
    def list_tasks() -> dict:
        return {"tasks": storage.list_tasks()}

    @app.get("/api/v1/tasks/{task_id}")
    def get_task(task_id: str) -> dict:
        record = storage.get_task(task_id)
        if record is None:
            raise _error(404, "unknown_task", f"no task {task_id}")
        return record

    @app.post("/api/v1/tasks/{task_id}/cancel")
    def cancel_task(task_id: str) -> dict:
        record = storage.get_task(task_id)
        if record is None:
            raise _error(404, "unknown_task", f"no task {task_id}")
        return {"cancelled": runner.cancel(task_id), "status": record["status"]}

    @app.get("/api/v1/tasks/{task_id}/report")
    def get_report(task_id: str) -> dict:
        """Full result document (scenario screens need more than instances)."""
        record = storage.get_task(task_id)
        if record is None:
            raise _error(404, "unknown_task", f"no task {task_id}")
        if record["status"] != "completed":
            raise _error(
                409, "not_completed", f"task is {record['status']}", status=record["status"]
            )
        return storage.read_result(task_id)

    @app.get("/api/v1/tasks/{task_id}/results")
    def get_results(
        task_id: str,
        offset: int = Query(0, ge=0),
        limit: int = Query(100, ge=1),
        filter: Optional[str] = Query(None),
        sort_by: Optional[str] = Query(None),
        sort_dir: str = Query("asc"),
    ) -> dict:
        record = storage.get_task(task_id)
        if record is None:
            raise _error(404, "unknown_task", f"no task {task_id}")
        if record["status"] != "completed":
            raise _error(
                409, "not_completed", f"task is {record['status']}", status=record["status"]
            )
        doc = storage.read_result(task_id)
        instances = doc.get("instances", [])
        if filter:
            try:
                pattern = re.compile(filter)
            except re.error as exc:
                raise _error(422, "bad_regex", f"invalid filter regex: {exc}", fields=["filter"])
            instances = [i for i in instances if pattern.search(i.get("text", ""))]
        if sort_by:
            missing = [i for i in instances if _sort_value(i, sort_by) is None]
            present = [i for i in instances if _sort_value(i, sort_by) is not None]
            present.sort(key=lambda i: _sort_value(i, sort_by), reverse=(sort_dir == "desc"))
            instances = present + missing
        limit = min(limit, RESULTS_LIMIT_CAP)
        page = instances[offset : offset + limit]
        return {
            "summary": doc.get("summary", {}),
            "kind": doc.get("kind"),
            "total": len(doc.get("instances", [])),
            "total_matched": len(instances),
            "offset": offset,
            "limit": limit,
            "items": page,
        }

    # -- dedup sessions ------------------------------------------------------------

    def _session(session_id: str) -> tuple[dict, DedupSession]:
        doc = storage.get_session(session_id)
        if doc is None:
            raise _error(404, "unknown_session", f"no session {session_id}")
        live = sessions.get(session_id)
        if live is None or len(live.journal) != len(doc["decisions"]):
            record = storage.get_task(doc["task_id"])
            result = storage.read_result(doc["task_id"])
            if record is None or result is None:
                raise _error(409, "task_incomplete", "dedup task has no results")
            relation = storage.load_relation(record["dataset_id"])
            params = record["params"]
            cfg = DedupConfig(
                threshold=as_fraction(str(params.get("threshold", "0.05"))),
                window=int(params["window"]),
                k=int(params["k"]),
                excluded_keys=frozenset(
                    relation.attribute_index(a) for a in params.get("excluded_keys", [])
                ),
            )
            live = DedupSession(relation, cfg)
            live.replay([JournalEntry.from_json(e) for e in doc["decisions"]])
            sessions[session_id] = live
        return doc, live

    @app.post("/api/v1/dedup")
    def open_session(payload: dict = Body(...)) -> dict:
        task_id = payload.get("task_id")
        record = storage.get_task(task_id) if task_id else None
        if record is None:
            raise _error(404, "unknown_task", f"no task {task_id}")
        if record["kind"] != "scenario_dedup":
            raise _error(422, "wrong_kind", "sessions attach to scenario_dedup tasks")
        if record["status"] != "completed":
            raise _error(409, "not_completed", f"task is {record['status']}")
        doc = storage.create_session(task_id)
        return {"session_id": doc["id"]}

    @app.get("/api/v1/dedup/{session_id}")
    def session_state(session_id: str) -> dict:
        doc, live = _session(session_id)
        journal = live.journal_json()
        journal["result_fingerprint"] = live.state_hash()
        return {
            "id": doc["id"],
            "task_id": doc["task_id"],
            "finished": doc.get("finished"),
            "journal": journal,
            "rows_after": live.current.row_count,
            "pending": live.propose() is not None,
        }

    @app.post("/api/v1/dedup/{session_id}/propose")
    def propose(session_id: str) -> dict:
        doc, live = _session(session_id)
        pair = live.propose()
        if pair is None:
            return {"done": True, "pair": None}
        return {"done": False, "pair": report.pair_to_json(pair, live.base)}

    @app.post("/api/v1/dedup/{session_id}/decide")
    def decide(session_id: str, payload: dict = Body(...)) -> dict:
        doc, live = _session(session_id)
        pair_ids = payload.get("pair")
        action = payload.get("action")
        copy_attrs = payload.get("copy_attrs", [])
        if (
            not isinstance(pair_ids, list)
            or len(pair_ids) != 2
            or action not in ("keep_a", "keep_b", "skip")
        ):
            raise _error(422, "bad_params", "need pair [a, b] and action keep_a|keep_b|skip")
        key = (int(pair_ids[0]), int(pair_ids[1]))
        known = {(p.row_a, p.row_b): p for p in live.pairs}
        pair = known.get(key)
        if pair is None or any(key == tuple(e.pair) for e in live.journal):
            raise _error(409, "pair_not_proposed", f"pair {key} is not open for decision")
        if pair.row_a in live._consumed or pair.row_b in live._consumed:
            raise _error(410, "stale_pair", f"pair {key} references an already-merged row")
        try:
            if action == "skip":
                live.skip(pair)
            else:
                live.decide(pair, "a" if action == "keep_a" else "b", copy_attrs=copy_attrs)
        except StaleResolutionError as exc:
            raise _error(410, "stale_pair", str(exc))
        doc["decisions"] = [e.to_json() for e in live.journal]
        storage.save_session(doc)  # journal on disk before the ack below
        return {"journal_length": len(live.journal), "rows_after": live.current.row_count}

    @app.post("/api/v1/dedup/{session_id}/undo")
    def undo(session_id: str) -> dict:
        doc, live = _session(session_id)
        entry = live.undo()
        if entry is None:
            raise _error(409, "nothing_to_undo", "journal is empty")
        doc["decisions"] = [e.to_json() for e in live.journal]
        storage.save_session(doc)
        return {"journal_length": len(live.journal), "rows_after": live.current.row_count}

    @app.post("/api/v1/dedup/{session_id}/finish")
    def finish(session_id: str) -> dict:
        doc, live = _session(session_id)
        record = storage.get_task(doc["task_id"])
        meta = storage.dataset_meta(record["dataset_id"])
        config = meta["config"]
        csv_config = CsvConfig(
            separator=config["separator"],
            has_header=config["has_header"],
            null_token=config["null_token"],
            nulls_distinct=config["nulls_distinct"],
        )
        new_id = storage.store_dataset(
            to_csv(live.current, csv_config).encode("utf-8"), csv_config
        )
        doc["finished"] = new_id
        storage.save_session(doc)
        return {"dataset_id": new_id, "rows": live.current.row_count}

    return app


def _sort_value(instance: dict, field: str) -> Optional[Any]:
    value = instance.get(field)
    if isinstance(value, dict) and "decimal" in value:
        return value["decimal"]
    if isinstance(value, (int, float, str)):
        return value
    return None


def _validate_params(kind: str, params: dict, meta: dict, storage: Storage) -> set[str]:
    bad: set[str] = set()

    def check_rational(field: str, required: bool = True, minimum=0) -> None:
        if field not in params:
            if required:
                bad.add(field)
            return
        try:
            if as_fraction(str(params[field])) < minimum:
                bad.add(field)
        except (ValueError, TypeError, ArithmeticError):
            bad.add(field)

    def check_int(field: str, minimum: int, required: bool = True) -> None:
        if field not in params:
            if required:
                bad.add(field)
            return
        try:
            if int(params[field]) < minimum:
                bad.add(field)
        except (TypeError, ValueError):
            bad.add(field)

    types = {a["name"]: a["inferred_type"] for a in meta["attributes"]}
    indexes = {a["index"]: a["inferred_type"] for a in meta["attributes"]}

    def attr_type(ref) -> Optional[str]:
        if isinstance(ref, int) and ref in indexes:
            return indexes[ref]
        return types.get(ref)

    if kind == "fd_discovery":
        check_int("max_lhs", 1)
    elif kind == "afd_discovery":
        check_int("max_lhs", 1)
        check_rational("threshold")
    elif kind == "mfd_validation":
        lhs = params.get("lhs")
        rhs = params.get("rhs")
        if not isinstance(lhs, list) or not lhs or any(attr_type(a) is None for a in lhs):
            bad.add("lhs")
        if not isinstance(rhs, list) or not rhs or any(attr_type(a) is None for a in rhs):
            bad.add("rhs")
        metric = params.get("metric")
        if metric not in ("levenshtein", "euclidean"):
            bad.add("metric")
        elif isinstance(rhs, list) and rhs and all(attr_type(a) for a in rhs):
            rhs_types = {attr_type(a) for a in rhs}
            if metric == "levenshtein" and rhs_types != {"string"}:
                bad.add("metric")
            if metric == "euclidean" and not rhs_types <= {"integer", "float"}:
                bad.add("metric")
        try:
            if float(params.get("p")) < 0:
                bad.add("p")
        except (TypeError, ValueError):
            bad.add("p")
    elif kind == "scenario_typo":
        check_rational("threshold")
        check_rational("radius")
        try:
            ratio = float(params.get("ratio"))
            if not 0 <= ratio <= 1:
                bad.add("ratio")
        except (TypeError, ValueError):
            bad.add("ratio")
        check_int("max_lhs", 1, required=False)
    elif kind == "scenario_dedup":
        check_int("window", 2)
        check_int("k", 1)
        try:
            if int(params.get("k", 0)) > len(meta["attributes"]):
                bad.add("k")
        except (TypeError, ValueError):
            pass  # already flagged by check_int
        check_rational("threshold", required=False)
    elif kind == "scenario_anomaly":
        partitions = params.get("partition_ids")
        if not isinstance(partitions, list) or not partitions:
            bad.add("partition_ids")
        elif any(storage.dataset_meta(p) is None for p in partitions):
            bad.add("partition_ids")
        check_int("max_lhs", 1, required=False)
    return bad
