"""File-backed storage for the task service.

Everything lives under one root: datasets by content hash, task records and
result documents as JSON files, dedup session journals as JSON files. All
writes go through atomic replace, so a crash never leaves a torn file, and
completed results are write-once.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
import uuid
from pathlib import Path
from typing import Any, Optional

from ..relation import CsvConfig, Relation, load_csv

TASK_KINDS = (
    "fd_discovery",
    "afd_discovery",
    "mfd_validation",
    "scenario_typo",
    "scenario_dedup",
    "scenario_anomaly",
)


class ResultImmutableError(RuntimeError):
    """A completed task's result file would have been overwritten."""


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(f".{path.name}.{uuid.uuid4().hex}.tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _write_json(path: Path, doc: Any) -> None:
    _atomic_write(path, json.dumps(doc, sort_keys=True, indent=2).encode("utf-8"))


class Storage:
    def __init__(self, root: Path) -> None:
        self.root = Path(root)
        self.datasets_dir = self.root / "datasets"
        self.tasks_dir = self.root / "tasks"
        self.results_dir = self.root / "results"
        self.sessions_dir = self.root / "sessions"
        for directory in (
            self.datasets_dir,
            self.tasks_dir,
            self.results_dir,
            self.sessions_dir,
        ):
            directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    # -- datasets -----------------------------------------------------------

    def store_dataset(self, data: bytes, config: CsvConfig) -> str:
        """Content-addressed dataset: identical bytes yield identical ids.

        The CSV is parsed up front so broken uploads are rejected here, and
        the inferred schema lands in the meta document.
        """
        relation = load_csv(data, config)  # raises CsvFormatError with the line
        dataset_id = hashlib.sha256(data).hexdigest()
        csv_path = self.datasets_dir / f"{dataset_id}.csv"
        if not csv_path.exists():
            _atomic_write(csv_path, data)
        _write_json(
            self.datasets_dir / f"{dataset_id}.meta.json",
            {
                "id": dataset_id,
                "config": {
                    "separator": config.separator,
                    "has_header": config.has_header,
                    "null_token": config.null_token,
                    "nulls_distinct": config.nulls_distinct,
                },
                "row_count": relation.row_count,
                "attributes": [
                    {"index": a.index, "name": a.name, "inferred_type": a.inferred_type}
                    for a in relation.attributes
                ],
            },
        )
        return dataset_id

    def dataset_meta(self, dataset_id: str) -> Optional[dict]:
        path = self.datasets_dir / f"{dataset_id}.meta.json"
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def dataset_bytes(self, dataset_id: str) -> bytes:
        return (self.datasets_dir / f"{dataset_id}.csv").read_bytes()

    def load_relation(self, dataset_id: str) -> Relation:
        meta = self.dataset_meta(dataset_id)
        if meta is None:
            raise KeyError(f"unknown dataset: {dataset_id}")
        cfg = meta["config"]
        relation = load_csv(
            self.dataset_bytes(dataset_id),
            CsvConfig(
                separator=cfg["separator"],
                has_header=cfg["has_header"],
                null_token=cfg["null_token"],
                nulls_distinct=cfg["nulls_distinct"],
            ),
        )
        relation.source = dataset_id
        return relation

    # -- task records --------------------------------------------------------

    def create_task(self, kind: str, params: dict, dataset_id: str) -> dict:
        task_id = uuid.uuid4().hex
        record = {
            "id": task_id,
            "kind": kind,
            "params": params,
            "dataset_id": dataset_id,
            "status": "queued",
            "created_at": time.time(),
            "started_at": None,
            "finished_at": None,
            "result_ref": f"results/{task_id}.json",
            "error": None,
        }
        self.save_task(record)
        return record

    def save_task(self, record: dict) -> None:
        with self._lock:
            _write_json(self.tasks_dir / f"{record['id']}.json", record)

    def get_task(self, task_id: str) -> Optional[dict]:
        path = self.tasks_dir / f"{task_id}.json"
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def list_tasks(self) -> list[dict]:
        records = []
        for path in sorted(self.tasks_dir.glob("*.json")):
            records.append(json.loads(path.read_text(encoding="utf-8")))
        records.sort(key=lambda r: r["created_at"])
        return records

    # -- results -------------------------------------------------------------

    def result_path(self, task_id: str) -> Path:
        return self.results_dir / f"{task_id}.json"

    def write_result(self, task_id: str, doc: dict) -> None:
        path = self.result_path(task_id)
        if path.exists():
            raise ResultImmutableError(f"result for task {task_id} already written")
        _write_json(path, doc)

    def read_result(self, task_id: str) -> Optional[dict]:
        path = self.result_path(task_id)
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    # -- dedup session journals ----------------------------------------------

    def create_session(self, task_id: str) -> dict:
        doc = {"id": uuid.uuid4().hex, "task_id": task_id, "decisions": [], "finished": None}
        self.save_session(doc)
        return doc

    def save_session(self, doc: dict) -> None:
        _write_json(self.sessions_dir / f"{doc['id']}.json", doc)

    def get_session(self, session_id: str) -> Optional[dict]:
        path = self.sessions_dir / f"{session_id}.json"
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    # -- crash recovery --------------------------------------------------------

    def recover(self) -> list[str]:
        """Settle task statuses after a restart.

        Tasks caught mid-run are marked failed (their work is gone); queued
        tasks are returned for re-submission. Completed results on disk are
        untouched.
        """
        requeue = []
        for record in self.list_tasks():
            if record["status"] == "running":
                record["status"] = "failed"
                record["error"] = "interrupted by service restart"
                record["finished_at"] = time.time()
                self.save_task(record)
            elif record["status"] == "queued":
                requeue.append(record["id"])
        return requeue
