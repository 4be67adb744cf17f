"""Task execution: a worker pool mapping task kinds onto engine calls.

Each task record moves queued -> running -> completed | failed; the result
document carries an ``instances`` list (one text-rendered entry per
primitive instance) that the results endpoint pages, filters, and sorts.
Cancellation is cooperative: discovery checks an event between lattice
levels.
"""

from __future__ import annotations

import threading
import time
import traceback
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

from .. import report
from ..afd import as_fraction, discover_afds
from ..anomaly import SweepConfig, advance_canonical, afd_probe, fd_diff, mfd_sweep
from ..anomaly import AnomalyState
from ..fd import DiscoveryCancelled, discover_fds
from ..mfd import MFDStatement, validate_mfd
from ..relation import Relation
from ..typo import TypoConfig, mine_almost_fds, typo_report
from ..dedup import DedupConfig, find_duplicates
from .storage import Storage


class TaskRunner:
    def __init__(self, storage: Storage, width: int = 2) -> None:
        self.storage = storage
        self.pool = ThreadPoolExecutor(max_workers=max(1, width))
        self.cancel_events: dict[str, threading.Event] = {}

    def submit(self, task_id: str) -> None:
        self.cancel_events[task_id] = threading.Event()
        self.pool.submit(self._run, task_id)

    def cancel(self, task_id: str) -> bool:
        event = self.cancel_events.get(task_id)
        if event is None:
            return False
        event.set()
        return True

    def shutdown(self) -> None:
        self.pool.shutdown(wait=False, cancel_futures=True)

    # -- execution -----------------------------------------------------------

    def _run(self, task_id: str) -> None:
        storage = self.storage
        record = storage.get_task(task_id)
        if record is None or record["status"] != "queued":
            return
        record["status"] = "running"
        record["started_at"] = time.time()
        storage.save_task(record)
        cancel = self.cancel_events[task_id].is_set
        try:
            relation = storage.load_relation(record["dataset_id"])
            result = _execute(record["kind"], record["params"], relation, storage, cancel)
            storage.write_result(task_id, result)
            record["status"] = "completed"
        except DiscoveryCancelled:
            record["status"] = "failed"
            record["error"] = "cancelled"
        except Exception as exc:  # failure lands in the record, not the log
            record["status"] = "failed"
            record["error"] = f"{type(exc).__name__}: {exc}"
            record["traceback"] = traceback.format_exc()
        record["finished_at"] = time.time()
        storage.save_task(record)
        self.cancel_events.pop(task_id, None)


def _execute(
    kind: str,
    params: dict,
    relation: Relation,
    storage: Storage,
    cancel: Callable[[], bool],
) -> dict:
    handler = _HANDLERS[kind]
    return handler(params, relation, storage, cancel)


def _fd_discovery(params, relation, storage, cancel) -> dict:
    fdset = discover_fds(relation, max_lhs=int(params["max_lhs"]), cancel=cancel)
    schema = relation.attribute_names()
    return {
        "kind": "fd_discovery",
        "summary": {"count": len(fdset), "schema": list(schema)},
        "instances": [report.fd_to_json(fd, schema) for fd in fdset.fds],
    }


def _afd_discovery(params, relation, storage, cancel) -> dict:
    threshold = as_fraction(str(params["threshold"]))
    afds = discover_afds(relation, threshold, int(params["max_lhs"]), cancel=cancel)
    schema = relation.attribute_names()
    return {
        "kind": "afd_discovery",
        "summary": {
            "count": len(afds),
            "threshold": str(threshold),
            "schema": list(schema),
        },
        "instances": [report.afd_to_json(a, schema) for a in afds],
    }


def _mfd_validation(params, relation, storage, cancel) -> dict:
    schema = relation.attribute_names()
    stmt = MFDStatement(
        lhs=tuple(relation.attribute_index(a) for a in params["lhs"]),
        rhs=tuple(relation.attribute_index(a) for a in params["rhs"]),
        metric=params["metric"],
        p=float(params["p"]),
    )
    verdict = validate_mfd(relation, stmt)
    doc = report.verdict_to_json(verdict, stmt, schema)
    return {
        "kind": "mfd_validation",
        "summary": {
            "holds": verdict.holds,
            "global_diameter": verdict.global_diameter,
            "statement": doc["statement"],
        },
        "instances": doc["violating_clusters"],
    }


def _scenario_typo(params, relation, storage, cancel) -> dict:
    cfg = TypoConfig(
        threshold=as_fraction(str(params["threshold"])),
        radius=float(params["radius"]),
        ratio=float(params["ratio"]),
        max_lhs=int(params.get("max_lhs", 3)),
    )
    invert = bool(params.get("invert_display", False))
    mined = mine_almost_fds(relation, cfg)
    schema = relation.attribute_names()
    reports = [
        report.typo_report_to_json(
            typo_report(relation, cfg, afd, invert_display=invert), schema
        )
        for afd in mined
    ]
    instances = []
    for sub in reports:
        for cluster in sub["clusters"]:
            instances.append({**cluster, "afd": sub["afd"]["text"]})
    return {
        "kind": "scenario_typo",
        "summary": {
            "mined": [report.afd_to_json(a, schema) for a in mined],
            "params": {
                "threshold": str(cfg.threshold),
                "radius": cfg.radius,
                "ratio": cfg.ratio,
                "max_lhs": cfg.max_lhs,
                "invert_display": invert,
            },
        },
        "reports": reports,
        "instances": instances,
    }


def _scenario_dedup(params, relation, storage, cancel) -> dict:
    cfg = DedupConfig(
        threshold=as_fraction(str(params.get("threshold", "0.05"))),
        window=int(params["window"]),
        k=int(params["k"]),
        excluded_keys=frozenset(
            relation.attribute_index(a) for a in params.get("excluded_keys", [])
        ),
    )
    chosen, pairs = find_duplicates(relation, cfg)
    schema = relation.attribute_names()
    return {
        "kind": "scenario_dedup",
        "summary": {
            "chosen_key": report.key_candidate_to_json(chosen, schema),
            "config": {
                "threshold": str(cfg.threshold),
                "window": cfg.window,
                "k": cfg.k,
                "excluded_keys": sorted(cfg.excluded_keys),
            },
            "pair_count": len(pairs),
        },
        "instances": [report.pair_to_json(p, relation) for p in pairs],
    }


def _scenario_anomaly(params, relation, storage, cancel) -> dict:
    partition_ids = list(params["partition_ids"])
    thresholds = [str(t) for t in params.get("thresholds", ["0.001", "0.01", "0.05"])]
    metric = params.get("metric", "euclidean")
    step = float(params.get("step", 1.0))
    d = params.get("d")
    max_lhs = int(params.get("max_lhs", 3))

    state = AnomalyState()
    steps = []
    for dataset_id in partition_ids:
        part = storage.load_relation(dataset_id)
        fds = discover_fds(part, max_lhs=max_lhs, cancel=cancel)
        schema = part.attribute_names()
        if state.canonical_fds is None:
            diff_doc = {
                "lost": [],
                "gained": [report.fd_to_json(fd, schema) for fd in fds.fds],
            }
            probes = []
        else:
            lost, gained = fd_diff(state.canonical_fds, fds)
            diff_doc = {
                "lost": [report.fd_to_json(fd, schema) for fd in lost],
                "gained": [report.fd_to_json(fd, schema) for fd in gained],
            }
            probes = []
            for fd in lost:
                g1, first = afd_probe(part, fd, thresholds)
                probe = {
                    "fd": report.fd_to_json(fd, schema),
                    "g1": {
                        "numerator": g1.numerator,
                        "denominator": g1.denominator,
                        "decimal": float(g1),
                    },
                    "first_holding": str(first) if first is not None else None,
                }
                if part.attributes[fd.rhs].is_numeric and metric == "euclidean":
                    bound = float(d) if d is not None else step * 10
                    sweep = mfd_sweep(part, fd, SweepConfig(d=bound, step=step, metric=metric))
                    probe["sweep"] = report.sweep_to_json(sweep)
                probes.append(probe)
        state = advance_canonical(state, dataset_id, fds)
        steps.append(
            {
                "partition_id": dataset_id,
                "fd_count": len(fds),
                "diff": diff_doc,
                "probes": probes,
                "accepted": True,
                "text": f"{dataset_id}: {len(fds)} FDs, "
                f"{len(diff_doc['lost'])} lost, {len(diff_doc['gained'])} gained",
            }
        )
    return {
        "kind": "scenario_anomaly",
        "summary": {"final_state": report.anomaly_state_to_json(state)},
        "instances": steps,
    }


_HANDLERS: dict[str, Callable] = {
    "fd_discovery": _fd_discovery,
    "afd_discovery": _afd_discovery,
    "mfd_validation": _mfd_validation,
    "scenario_typo": _scenario_typo,
    "scenario_dedup": _scenario_dedup,
    "scenario_anomaly": _scenario_anomaly,
}
