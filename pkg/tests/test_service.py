from __future__ import annotations

import io
import json
import threading
import zipfile

import pytest
import requests

from fusionrl.data import load_manifest
from fusionrl.service import AnnotationStore, serve_annotations

SCORES = {
    "Thermal Retention": 4,
    "Texture Preservation": 3,
    "Artifacts": 2,
    "Sharpness": 3,
    "Overall Score": 3,
}


def valid_doc(**extra) -> dict:
    doc = {
        "scores": dict(SCORES),
        "shapes": [{"label": "Artifacts", "points": [[10, 12], [14, 12]], "shape_type": "circle"}],
        "annotator": "tester",
    }
    doc.update(extra)
    return doc


@pytest.fixture()
def service(toy_dataset, tmp_path):
    manifest = load_manifest(toy_dataset.manifest_path)
    server = serve_annotations(manifest, str(tmp_path / "store"), port=0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server
    server.shutdown()
    thread.join(timeout=5)


def task_ids(server) -> list[str]:
    return [t.triplet_id for t in server.store.list_tasks()]


def test_list_tasks_and_status_filter(service):
    base = service.address
    listing = requests.get(f"{base}/tasks").json()["tasks"]
    assert len(listing) == 8
    assert all(t["status"] == "pending" for t in listing)
    pending = requests.get(f"{base}/tasks?status=pending").json()["tasks"]
    assert len(pending) == 8
    accepted = requests.get(f"{base}/tasks?status=accepted").json()["tasks"]
    assert accepted == []
    bad = requests.get(f"{base}/tasks?status=bogus")
    assert bad.status_code == 400


def test_get_task_includes_images_and_dims(service):
    tid = task_ids(service)[0]
    payload = requests.get(f"{service.address}/tasks/{tid}").json()
    assert payload["triplet_id"] == tid
    assert payload["width"] == 32 and payload["height"] == 32
    for kind, url in payload["images"].items():
        img = requests.get(f"{service.address}{url}")
        assert img.status_code == 200
        assert img.headers["Content-Type"] == "image/png"
        assert img.content[:8] == b"\x89PNG\r\n\x1a\n"


def test_unknown_task_404(service):
    assert requests.get(f"{service.address}/tasks/nope").status_code == 404
    r = requests.post(f"{service.address}/tasks/nope/annotation", json=valid_doc())
    assert r.status_code == 404


def test_post_annotation_transitions(service):
    tid_a, tid_b = task_ids(service)[:2]
    r = requests.post(f"{service.address}/tasks/{tid_a}/annotation", json=valid_doc())
    assert r.status_code == 200
    assert r.json()["task"]["status"] == "in_review"
    r = requests.post(f"{service.address}/tasks/{tid_b}/annotation", json=valid_doc(auto=True))
    assert r.status_code == 200
    assert r.json()["task"]["status"] == "auto_annotated"


def test_schema_violation_400_names_field(service):
    tid = task_ids(service)[0]
    doc = valid_doc()
    doc["scores"]["Sharpness"] = 7
    r = requests.post(f"{service.address}/tasks/{tid}/annotation", json=doc)
    assert r.status_code == 400
    assert "Sharpness" in r.json()["error"]


def test_double_post_conflict(service):
    tid = task_ids(service)[0]
    assert requests.post(f"{service.address}/tasks/{tid}/annotation", json=valid_doc()).status_code == 200
    second = requests.post(f"{service.address}/tasks/{tid}/annotation", json=valid_doc())
    assert second.status_code == 409


def test_concurrent_race_exactly_one_winner(service):
    tid = task_ids(service)[3]
    url = f"{service.address}/tasks/{tid}/annotation"
    barrier = threading.Barrier(2)
    results = []

    def post():
        barrier.wait()
        results.append(requests.post(url, json=valid_doc()).status_code)

    threads = [threading.Thread(target=post) for _ in range(2)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert sorted(results) == [200, 409]


def test_review_accept_and_reject_flow(service):
    base = service.address
    tid = task_ids(service)[0]
    requests.post(f"{base}/tasks/{tid}/annotation", json=valid_doc())
    # reject returns the task to pending
    r = requests.post(f"{base}/tasks/{tid}/review", json={"action": "reject"})
    assert r.status_code == 200 and r.json()["task"]["status"] == "pending"
    # annotate again, then accept with a corrected record
    requests.post(f"{base}/tasks/{tid}/annotation", json=valid_doc())
    corrected = valid_doc()
    corrected["scores"]["Sharpness"] = 5
    r = requests.post(f"{base}/tasks/{tid}/review", json={"action": "accept", "record": corrected})
    assert r.status_code == 200
    task = r.json()["task"]
    assert task["status"] == "accepted"
    assert task["record"]["reviewed"] is True
    assert task["record"]["scores"]["Sharpness"] == 5
    # accepting twice is an illegal transition
    r = requests.post(f"{base}/tasks/{tid}/review", json={"action": "accept"})
    assert r.status_code == 409


def test_reject_requires_in_review(service):
    base = service.address
    tid = task_ids(service)[0]
    r = requests.post(f"{base}/tasks/{tid}/review", json={"action": "reject"})
    assert r.status_code == 409


def test_export_zip_contains_accepted(service):
    base = service.address
    tid = task_ids(service)[0]
    requests.post(f"{base}/tasks/{tid}/annotation", json=valid_doc())
    requests.post(f"{base}/tasks/{tid}/review", json={"action": "accept"})
    r = requests.get(f"{base}/export")
    assert r.status_code == 200
    archive = zipfile.ZipFile(io.BytesIO(r.content))
    assert archive.namelist() == [f"{tid}.json"]
    record = json.loads(archive.read(f"{tid}.json"))
    assert record["scores"]["Overall Score"] == 3


def test_event_log_replay_reproduces_state(service):
    base = service.address
    ids = task_ids(service)
    requests.post(f"{base}/tasks/{ids[0]}/annotation", json=valid_doc())
    requests.post(f"{base}/tasks/{ids[1]}/annotation", json=valid_doc(auto=True))
    requests.post(f"{base}/tasks/{ids[0]}/review", json={"action": "accept"})
    requests.post(f"{base}/tasks/{ids[2]}/annotation", json=valid_doc())
    requests.post(f"{base}/tasks/{ids[2]}/review", json={"action": "reject"})
    store = service.store
    assert store.replay(store.read_events()) == store.snapshot()


def test_store_reload_revalidates(toy_dataset, tmp_path):
    manifest = load_manifest(toy_dataset.manifest_path)
    store_dir = tmp_path / "store"
    store = AnnotationStore(manifest, store_dir)
    tid = manifest.triplets[0].triplet_id
    store.submit_annotation(tid, json.dumps(valid_doc()))
    # a fresh store over the same directory reparses every persisted record
    reloaded = AnnotationStore(manifest, store_dir)
    assert reloaded.snapshot() == store.snapshot()
    assert reloaded.get(tid).record is not None
    assert reloaded.get(tid).record.scores.overall == 3
