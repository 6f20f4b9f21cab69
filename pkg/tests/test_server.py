from __future__ import annotations

import json
import threading
import urllib.error
import urllib.parse
import urllib.request
from pathlib import Path

import pytest

from codemend.demo import DEMO_RUN_ID, build_demo_store
from codemend.review import ReviewStore
from codemend.server import make_server


@pytest.fixture()
def live_server(tmp_path):
    store_root, run_id = build_demo_store(tmp_path / "demo")
    ui_dir = tmp_path / "ui"
    ui_dir.mkdir()
    (ui_dir / "index.html").write_text("<html><body>review ui</body></html>")
    server = make_server(ReviewStore(store_root), port=0, ui_dir=ui_dir)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address[:2]
    yield f"http://{host}:{port}", run_id
    server.shutdown()
    server.server_close()
    thread.join(timeout=5)


def get(base: str, path: str):
    with urllib.request.urlopen(base + path) as response:
        return response.status, json.loads(response.read().decode("utf-8"))


def get_raw(base: str, path: str):
    with urllib.request.urlopen(base + path) as response:
        return response.status, response.read().decode("utf-8")


def post(base: str, path: str, payload: dict):
    request = urllib.request.Request(
        base + path,
        data=json.dumps(payload).encode("utf-8"),
        headers={"Content-Type": "application/json"},
        method="POST",
    )
    with urllib.request.urlopen(request) as response:
        return response.status, json.loads(response.read().decode("utf-8"))


def quoted(path: str) -> str:
    return urllib.parse.quote(path, safe="")


class TestEndpoints:
    def test_list_runs(self, live_server):
        base, run_id = live_server
        status, payload = get(base, "/runs")
        assert status == 200
        (summary,) = payload["runs"]
        assert summary["run_id"] == run_id
        assert summary["files_total"] == 5
        assert summary["flagged_total"] == 2

    def test_list_files(self, live_server):
        base, run_id = live_server
        status, payload = get(base, f"/runs/{run_id}/files")
        assert status == 200
        assert payload["applied"] is False
        flagged = [f["path"] for f in payload["files"] if f["flag_count"] > 0]
        assert flagged == ["src/flagged1.js", "src/flagged2.js"]

    def test_get_comparison_with_encoded_path(self, live_server):
        base, run_id = live_server
        status, payload = get(base, f"/runs/{run_id}/files/{quoted('src/flagged1.js')}/comparison")
        assert status == 200
        assert payload["file_location"] == "src/flagged1.js"
        assert len(payload["flags"]) == 1
        assert payload["decision"] == "PENDING"

    def test_get_comparison_with_plain_path(self, live_server):
        base, run_id = live_server
        status, payload = get(base, f"/runs/{run_id}/files/src/clean1.js/comparison")
        assert status == 200
        assert payload["file_location"] == "src/clean1.js"

    def test_decision_roundtrip_changes_state(self, live_server):
        base, run_id = live_server
        status, state = post(
            base,
            f"/runs/{run_id}/files/{quoted('src/flagged1.js')}/decision",
            {"verdict": "ACCEPT", "note": "looks right"},
        )
        assert status == 200
        assert state["file_status"]["src/flagged1.js"] == "ACCEPT"
        _, payload = get(base, f"/runs/{run_id}/files/{quoted('src/flagged1.js')}/comparison")
        assert payload["decision"] == "ACCEPTED"

    def test_edit_decision_carries_content(self, live_server):
        base, run_id = live_server
        status, state = post(
            base,
            f"/runs/{run_id}/files/{quoted('src/flagged2.js')}/decision",
            {"verdict": "EDIT", "edited_content": "my\nversion\n"},
        )
        assert status == 200
        assert state["file_status"]["src/flagged2.js"] == "EDIT"

    def test_apply_gate_then_success(self, live_server):
        base, run_id = live_server
        with pytest.raises(urllib.error.HTTPError) as excinfo:
            post(base, f"/runs/{run_id}/apply", {})
        assert excinfo.value.code == 409
        body = json.loads(excinfo.value.read().decode("utf-8"))
        assert body["undecided"] == ["src/flagged1.js", "src/flagged2.js"]

        post(base, f"/runs/{run_id}/files/{quoted('src/flagged1.js')}/decision", {"verdict": "ACCEPT"})
        post(base, f"/runs/{run_id}/files/{quoted('src/flagged2.js')}/decision", {"verdict": "REJECT"})
        status, payload = post(base, f"/runs/{run_id}/apply", {})
        assert status == 200
        final_tree = Path(payload["final_tree"])
        assert (final_tree / "src/flagged2.js").read_text().count("eval(userInput);") == 1

        status, runs = get(base, "/runs")
        assert runs["runs"][0]["applied"] is True

    def test_decision_after_apply_conflicts(self, live_server):
        base, run_id = live_server
        post(base, f"/runs/{run_id}/files/{quoted('src/flagged1.js')}/decision", {"verdict": "ACCEPT"})
        post(base, f"/runs/{run_id}/files/{quoted('src/flagged2.js')}/decision", {"verdict": "ACCEPT"})
        post(base, f"/runs/{run_id}/apply", {})
        with pytest.raises(urllib.error.HTTPError) as excinfo:
            post(base, f"/runs/{run_id}/files/{quoted('src/clean1.js')}/decision", {"verdict": "ACCEPT"})
        assert excinfo.value.code == 409

    def test_unknown_run_is_404(self, live_server):
        base, _ = live_server
        with pytest.raises(urllib.error.HTTPError) as excinfo:
            get(base, "/runs/ghost/files")
        assert excinfo.value.code == 404

    def test_bad_verdict_is_400(self, live_server):
        base, run_id = live_server
        with pytest.raises(urllib.error.HTTPError) as excinfo:
            post(base, f"/runs/{run_id}/files/{quoted('src/clean1.js')}/decision", {"verdict": "MAYBE"})
        assert excinfo.value.code == 400

    def test_edit_without_content_is_400(self, live_server):
        base, run_id = live_server
        with pytest.raises(urllib.error.HTTPError) as excinfo:
            post(base, f"/runs/{run_id}/files/{quoted('src/clean1.js')}/decision", {"verdict": "EDIT"})
        assert excinfo.value.code == 400

    def test_static_ui_served(self, live_server):
        base, _ = live_server
        status, body = get_raw(base, "/")
        assert status == 200
        assert "review ui" in body

    def test_unknown_path_is_404(self, live_server):
        base, _ = live_server
        with pytest.raises(urllib.error.HTTPError) as excinfo:
            get(base, "/nothing/here")
        assert excinfo.value.code == 404


def test_demo_store_shape(tmp_path):
    store_root, run_id = build_demo_store(tmp_path)
    assert run_id == DEMO_RUN_ID
    store = ReviewStore(store_root)
    files = store.list_files(run_id)
    assert len(files) == 5
    assert sum(1 for f in files if f["flag_count"] > 0) == 2
