from __future__ import annotations

import json
import os
import re
import signal
import socket
import subprocess
import sys
import time
from pathlib import Path

import httpx
import pytest
from fastapi.testclient import TestClient

from deprof.service.app import create_app

CSV = (
    "city,zip\n"
    "barnaul,656000\n"
    "barnaul,656000\n"
    "barnaul,656001\n"
    "moscow,101000\n"
    "moscow,101000\n"
)

DEDUP_CSV = (
    "name,street,phone\n"
    "ann,oak st,111\n"
    "ann,oak st.,111\n"
    "bob,elm rd,222\n"
    "bob,elm rd,222\n"
    "cid,main,333\n"
)


@pytest.fixture
def client(tmp_path):
    app = create_app(tmp_path / "storage", workers=2)
    with TestClient(app) as c:
        yield c


def upload(client, data=CSV, **params):
    response = client.post("/api/v1/datasets", content=data.encode(), params=params)
    assert response.status_code == 200, response.text
    return response.json()["dataset_id"]


def wait_done(client, task_id, timeout=30.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        record = client.get(f"/api/v1/tasks/{task_id}").json()
        if record["status"] in ("completed", "failed"):
            return record
        time.sleep(0.02)
    raise TimeoutError(f"task {task_id} did not finish")


def submit_and_wait(client, kind, params, dataset_id):
    response = client.post(
        "/api/v1/tasks", json={"kind": kind, "params": params, "dataset_id": dataset_id}
    )
    assert response.status_code == 200, response.text
    record = response.json()
    assert record["status"] == "queued"  # persisted as queued before returning
    finished = wait_done(client, record["id"])
    assert finished["status"] == "completed", finished.get("error")
    return finished


class TestDatasets:
    def test_idempotent_upload(self, client):
        first = upload(client)
        second = upload(client)
        assert first == second

    def test_ragged_rejected_with_line(self, client):
        response = client.post("/api/v1/datasets", content=b"a,b\n1,2\n3\n")
        assert response.status_code == 422
        assert "line 3" in response.json()["detail"]["message"]

    def test_empty_body_rejected(self, client):
        response = client.post("/api/v1/datasets", content=b"")
        assert response.status_code == 422

    def test_meta_exposes_schema(self, client):
        dataset_id = upload(client)
        meta = client.get(f"/api/v1/datasets/{dataset_id}").json()
        assert [a["name"] for a in meta["attributes"]] == ["city", "zip"]
        assert meta["row_count"] == 5

    def test_edits_create_new_dataset(self, client):
        dataset_id = upload(client)
        response = client.post(
            f"/api/v1/datasets/{dataset_id}/edits",
            json={"edits": [{"row": 2, "attr": "zip", "value": 656000}]},
        )
        assert response.status_code == 200
        new_id = response.json()["dataset_id"]
        assert new_id != dataset_id


class TestTasks:
    def test_fd_discovery_lifecycle(self, client):
        dataset_id = upload(client)
        record = submit_and_wait(client, "fd_discovery", {"max_lhs": 2}, dataset_id)
        results = client.get(f"/api/v1/tasks/{record['id']}/results").json()
        texts = [i["text"] for i in results["items"]]
        assert "[zip] -> city" in texts

    def test_unknown_dataset_404(self, client):
        response = client.post(
            "/api/v1/tasks",
            json={"kind": "fd_discovery", "params": {"max_lhs": 2}, "dataset_id": "nope"},
        )
        assert response.status_code == 404

    def test_negative_threshold_422_names_field(self, client):
        dataset_id = upload(client)
        response = client.post(
            "/api/v1/tasks",
            json={
                "kind": "afd_discovery",
                "params": {"max_lhs": 2, "threshold": -1},
                "dataset_id": dataset_id,
            },
        )
        assert response.status_code == 422
        assert "threshold" in response.json()["detail"]["fields"]

    def test_dedup_k_beyond_schema_422(self, client):
        dataset_id = upload(client)  # two attributes
        response = client.post(
            "/api/v1/tasks",
            json={
                "kind": "scenario_dedup",
                "params": {"window": 3, "k": 5},
                "dataset_id": dataset_id,
            },
        )
        assert response.status_code == 422
        assert "k" in response.json()["detail"]["fields"]

    def test_task_record_carries_result_ref(self, client):
        dataset_id = upload(client)
        record = submit_and_wait(client, "fd_discovery", {"max_lhs": 2}, dataset_id)
        assert record["result_ref"] == f"results/{record['id']}.json"

    def test_levenshtein_on_numeric_rhs_422(self, client):
        dataset_id = upload(client)
        response = client.post(
            "/api/v1/tasks",
            json={
                "kind": "mfd_validation",
                "params": {"lhs": ["city"], "rhs": ["zip"], "metric": "levenshtein", "p": 1},
                "dataset_id": dataset_id,
            },
        )
        assert response.status_code == 422
        assert "metric" in response.json()["detail"]["fields"]

    def test_results_before_completion_409(self, client, tmp_path):
        app = create_app(tmp_path / "idle_storage", workers=1)
        # no lifespan: the worker pool exists but we only exercise storage paths
        with TestClient(app) as c:
            dataset_id = upload(c)
            # ask for results of a record we place by hand in queued state
            from deprof.service.storage import Storage

            storage = Storage(tmp_path / "idle_storage")
            record = storage.create_task("fd_discovery", {"max_lhs": 2}, dataset_id)
            response = c.get(f"/api/v1/tasks/{record['id']}/results")
            assert response.status_code == 409
            assert response.json()["detail"]["status"] == "queued"


class TestResultsQuery:
    def _afd_task(self, client):
        dataset_id = upload(client)
        record = submit_and_wait(
            client, "afd_discovery", {"max_lhs": 2, "threshold": "0.4"}, dataset_id
        )
        return record["id"]

    def test_regex_filter_matches_client_side(self, client):
        task_id = self._afd_task(client)
        everything = client.get(
            f"/api/v1/tasks/{task_id}/results", params={"limit": 500}
        ).json()
        pattern = r"^\[city"
        filtered = client.get(
            f"/api/v1/tasks/{task_id}/results", params={"filter": pattern, "limit": 500}
        ).json()
        expected = [i for i in everything["items"] if re.search(pattern, i["text"])]
        assert filtered["items"] == expected
        assert filtered["total_matched"] == len(expected)
        assert filtered["total"] == everything["total"]

    def test_offset_beyond_total(self, client):
        task_id = self._afd_task(client)
        page = client.get(
            f"/api/v1/tasks/{task_id}/results", params={"offset": 9999}
        ).json()
        assert page["items"] == []
        assert page["total"] > 0

    def test_sort_by_error_ascending(self, client):
        task_id = self._afd_task(client)
        page = client.get(
            f"/api/v1/tasks/{task_id}/results",
            params={"sort_by": "error", "sort_dir": "asc", "limit": 500},
        ).json()
        errors = [i["error"]["decimal"] for i in page["items"]]
        assert errors == sorted(errors)

    def test_bad_regex_422(self, client):
        task_id = self._afd_task(client)
        response = client.get(
            f"/api/v1/tasks/{task_id}/results", params={"filter": "(unclosed"}
        )
        assert response.status_code == 422

    def test_pages_are_stable(self, client):
        task_id = self._afd_task(client)
        first = client.get(f"/api/v1/tasks/{task_id}/results", params={"limit": 2}).json()
        again = client.get(f"/api/v1/tasks/{task_id}/results", params={"limit": 2}).json()
        assert first == again

    def test_result_file_is_write_once(self, client, tmp_path):
        from deprof.service.storage import ResultImmutableError, Storage

        storage = Storage(tmp_path / "wo_storage")
        storage.write_result("t1", {"instances": []})
        with pytest.raises(ResultImmutableError):
            storage.write_result("t1", {"instances": [{"text": "other"}]})

    def test_full_report_document(self, client):
        dataset_id = upload(client)
        record = submit_and_wait(
            client,
            "scenario_typo",
            {"threshold": "0.3", "radius": 2, "ratio": 0.9, "max_lhs": 1},
            dataset_id,
        )
        doc = client.get(f"/api/v1/tasks/{record['id']}/results").json()
        full = client.get(f"/api/v1/tasks/{record['id']}/report").json()
        assert full["kind"] == "scenario_typo"
        assert "reports" in full  # scenario screens need the complete document
        assert full["instances"][: len(doc["items"])] == doc["items"]
        pending = client.get("/api/v1/tasks/missing/report")
        assert pending.status_code == 404


class TestDedupSession:
    def _open_session(self, client):
        dataset_id = upload(client, DEDUP_CSV)
        record = submit_and_wait(
            client,
            "scenario_dedup",
            {"window": 3, "k": 2, "threshold": "0.4"},
            dataset_id,
        )
        response = client.post("/api/v1/dedup", json={"task_id": record["id"]})
        assert response.status_code == 200
        return response.json()["session_id"]

    def test_propose_decide_journal_grows(self, client):
        session_id = self._open_session(client)
        proposal = client.post(f"/api/v1/dedup/{session_id}/propose").json()
        assert not proposal["done"]
        pair = proposal["pair"]
        response = client.post(
            f"/api/v1/dedup/{session_id}/decide",
            json={"pair": [pair["row_a"], pair["row_b"]], "action": "keep_a"},
        )
        assert response.status_code == 200
        assert response.json()["journal_length"] == 1

    def test_decide_unproposed_pair_409(self, client):
        session_id = self._open_session(client)
        response = client.post(
            f"/api/v1/dedup/{session_id}/decide",
            json={"pair": [0, 4], "action": "keep_a"},
        )
        assert response.status_code == 409

    def test_stale_pair_410(self, client):
        session_id = self._open_session(client)
        state = client.get(f"/api/v1/dedup/{session_id}").json()
        # find two pairs sharing a row
        proposal = client.post(f"/api/v1/dedup/{session_id}/propose").json()
        pair = proposal["pair"]
        client.post(
            f"/api/v1/dedup/{session_id}/decide",
            json={"pair": [pair["row_a"], pair["row_b"]], "action": "keep_b"},
        )
        # deciding the same pair again is a conflict; a pair touching the
        # merged row is gone
        again = client.post(
            f"/api/v1/dedup/{session_id}/decide",
            json={"pair": [pair["row_a"], pair["row_b"]], "action": "keep_a"},
        )
        assert again.status_code in (409, 410)

    def test_undo_truncates_and_rolls_back(self, client):
        session_id = self._open_session(client)
        before = client.get(f"/api/v1/dedup/{session_id}").json()
        proposal = client.post(f"/api/v1/dedup/{session_id}/propose").json()
        pair = proposal["pair"]
        client.post(
            f"/api/v1/dedup/{session_id}/decide",
            json={"pair": [pair["row_a"], pair["row_b"]], "action": "keep_a"},
        )
        client.post(f"/api/v1/dedup/{session_id}/undo")
        after = client.get(f"/api/v1/dedup/{session_id}").json()
        assert after["journal"]["decisions"] == []
        assert (
            after["journal"]["result_fingerprint"]
            == before["journal"]["result_fingerprint"]
        )

    def test_finish_registers_new_dataset(self, client):
        session_id = self._open_session(client)
        proposal = client.post(f"/api/v1/dedup/{session_id}/propose").json()
        pair = proposal["pair"]
        client.post(
            f"/api/v1/dedup/{session_id}/decide",
            json={"pair": [pair["row_a"], pair["row_b"]], "action": "keep_a"},
        )
        done = client.post(f"/api/v1/dedup/{session_id}/finish").json()
        assert done["rows"] == 4
        meta = client.get(f"/api/v1/datasets/{done['dataset_id']}").json()
        assert meta["row_count"] == 4


class TestCancel:
    def test_cancel_long_discovery(self, client, tmp_path):
        # wide random table makes the lattice big enough to catch mid-flight
        import random

        gen = random.Random(5)
        header = ",".join(f"c{i}" for i in range(12))
        rows = "\n".join(
            ",".join(str(gen.randint(0, 3)) for _ in range(12)) for _ in range(2000)
        )
        dataset_id = upload(client, header + "\n" + rows + "\n")
        record = client.post(
            "/api/v1/tasks",
            json={
                "kind": "fd_discovery",
                "params": {"max_lhs": 6},
                "dataset_id": dataset_id,
            },
        ).json()
        client.post(f"/api/v1/tasks/{record['id']}/cancel")
        finished = wait_done(client, record["id"], timeout=60)
        # either the cancel landed between levels, or the task beat it
        if finished["status"] == "failed":
            assert finished["error"] == "cancelled"


def _free_port() -> int:
    s = socket.socket()
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
    s.close()
    return port


class TestCrashRestart:
    def _spawn(self, storage: Path, port: int) -> subprocess.Popen:
        return subprocess.Popen(
            [
                sys.executable,
                "-m",
                "deprof",
                "serve",
                "--port",
                str(port),
                "--storage",
                str(storage),
                "--workers",
                "1",
            ],
            stdout=subprocess.DEVNULL,
            stderr=subprocess.DEVNULL,
        )

    def _wait_up(self, port: int, timeout=30.0) -> None:
        deadline = time.time() + timeout
        while time.time() < deadline:
            try:
                if httpx.get(f"http://127.0.0.1:{port}/health", timeout=1).status_code == 200:
                    return
            except httpx.HTTPError:
                time.sleep(0.1)
        raise TimeoutError("service did not come up")

    def test_journal_survives_sigkill(self, tmp_path):
        storage = tmp_path / "storage"
        port = _free_port()
        proc = self._spawn(storage, port)
        try:
            self._wait_up(port)
            base = f"http://127.0.0.1:{port}"
            dataset_id = httpx.post(
                f"{base}/api/v1/datasets", content=DEDUP_CSV.encode()
            ).json()["dataset_id"]
            record = httpx.post(
                f"{base}/api/v1/tasks",
                json={
                    "kind": "scenario_dedup",
                    "params": {"window": 3, "k": 2, "threshold": "0.4"},
                    "dataset_id": dataset_id,
                },
            ).json()
            deadline = time.time() + 30
            while time.time() < deadline:
                status = httpx.get(f"{base}/api/v1/tasks/{record['id']}").json()["status"]
                if status == "completed":
                    break
                time.sleep(0.05)
            assert status == "completed"
            session_id = httpx.post(
                f"{base}/api/v1/dedup", json={"task_id": record["id"]}
            ).json()["session_id"]
            pair = httpx.post(f"{base}/api/v1/dedup/{session_id}/propose").json()["pair"]
            ack = httpx.post(
                f"{base}/api/v1/dedup/{session_id}/decide",
                json={"pair": [pair["row_a"], pair["row_b"]], "action": "keep_a"},
            )
            assert ack.status_code == 200
            state_before = httpx.get(f"{base}/api/v1/dedup/{session_id}").json()
            hash_before = state_before["journal"]["result_fingerprint"]

            proc.send_signal(signal.SIGKILL)
            proc.wait(timeout=10)

            port = _free_port()
            proc = self._spawn(storage, port)
            self._wait_up(port)
            base = f"http://127.0.0.1:{port}"
            state_after = httpx.get(f"{base}/api/v1/dedup/{session_id}").json()
            assert state_after["journal"]["result_fingerprint"] == hash_before
            assert len(state_after["journal"]["decisions"]) == 1
            # completed results are still readable after the crash
            results = httpx.get(f"{base}/api/v1/tasks/{record['id']}/results")
            assert results.status_code == 200
        finally:
            proc.kill()
            proc.wait(timeout=10)
