"""Annotation HTTP service backing the labeling UI and review workflow.

State is one JSON file per task, written atomically (temp file + rename),
plus an append-only event log of accepted writes; replaying the log from the
initial manifest state reproduces the store exactly. Status moves only
forward (pending -> auto_annotated -> in_review -> accepted) except for
review rejection, which returns an in_review task to pending. Per-task locks
serialize concurrent writers: the loser of a race gets 409.

Built on the stdlib threading HTTP server so request handling is genuinely
concurrent without extra dependencies.
"""

from __future__ import annotations

import io
import json
import os
import re
import threading
import zipfile
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from PIL import Image

from .annotations import AnnotationRecord, AnnotationSchemaError, parse_annotation, serialize_annotation
from .data.manifest import Manifest

STATUS_PENDING = "pending"
STATUS_AUTO = "auto_annotated"
STATUS_REVIEW = "in_review"
STATUS_ACCEPTED = "accepted"
STATUSES = (STATUS_PENDING, STATUS_AUTO, STATUS_REVIEW, STATUS_ACCEPTED)


class TaskNotFound(KeyError):
    pass


class IllegalTransition(RuntimeError):
    pass


@dataclass
class AnnotationTask:
    triplet_id: str
    status: str = STATUS_PENDING
    assigned_to: str | None = None
    record: AnnotationRecord | None = None

    def to_json(self) -> dict:
        return {
            "triplet_id": self.triplet_id,
            "status": self.status,
            "assigned_to": self.assigned_to,
            "record": json.loads(serialize_annotation(self.record)) if self.record else None,
        }


def _image_dims(path: str) -> tuple[int, int]:
    with Image.open(path) as img:
        w, h = img.size
    return h, w


class AnnotationStore:
    """Task state machine with atomic persistence and an event log."""

    def __init__(self, manifest: Manifest, store_dir: str | os.PathLike):
        self.manifest = manifest
        self.store_dir = os.fspath(store_dir)
        os.makedirs(self.store_dir, exist_ok=True)
        self.events_path = os.path.join(self.store_dir, "events.jsonl")
        self._tasks: dict[str, AnnotationTask] = {
            t.triplet_id: AnnotationTask(triplet_id=t.triplet_id) for t in manifest.triplets
        }
        self._dims: dict[str, tuple[int, int]] = {}
        self._locks: dict[str, threading.Lock] = {tid: threading.Lock() for tid in self._tasks}
        self._events_lock = threading.Lock()
        self._load_existing()

    # -- state ------------------------------------------------------------

    def _load_existing(self) -> None:
        for tid, task in self._tasks.items():
            path = self._task_path(tid)
            if not os.path.exists(path):
                continue
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
            task.status = data["status"]
            task.assigned_to = data.get("assigned_to")
            if data.get("record"):
                task.record = parse_annotation(json.dumps(data["record"]), self.dims(tid), triplet_id=tid)

    def dims(self, triplet_id: str) -> tuple[int, int]:
        if triplet_id not in self._dims:
            self._dims[triplet_id] = _image_dims(self.manifest.get(triplet_id).fused_path)
        return self._dims[triplet_id]

    def _task_path(self, triplet_id: str) -> str:
        return os.path.join(self.store_dir, f"{triplet_id}.json")

    def _persist(self, task: AnnotationTask) -> None:
        path = self._task_path(task.triplet_id)
        tmp = f"{path}.tmp.{threading.get_ident()}"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(task.to_json(), fh, indent=2, sort_keys=True)
        os.replace(tmp, path)

    def _append_event(self, kind: str, task_id: str, body: dict) -> None:
        with self._events_lock:
            with open(self.events_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps({"kind": kind, "task": task_id, "body": body}, sort_keys=True) + "\n")

    # -- queries ----------------------------------------------------------

    def get(self, triplet_id: str) -> AnnotationTask:
        if triplet_id not in self._tasks:
            raise TaskNotFound(triplet_id)
        return self._tasks[triplet_id]

    def list_tasks(self, status: str | None = None) -> list[AnnotationTask]:
        tasks = sorted(self._tasks.values(), key=lambda t: t.triplet_id)
        if status is None:
            return tasks
        return [t for t in tasks if t.status == status]

    def snapshot(self) -> dict[str, dict]:
        return {tid: task.to_json() for tid, task in sorted(self._tasks.items())}

    # -- transitions --------------------------------------------------------

    @staticmethod
    def _apply_annotation(task: AnnotationTask, record: AnnotationRecord, auto: bool) -> None:
        if task.status != STATUS_PENDING:
            raise IllegalTransition(f"task {task.triplet_id!r} is {task.status}, not {STATUS_PENDING}")
        task.record = record
        task.status = STATUS_AUTO if auto else STATUS_REVIEW
        task.assigned_to = record.annotator or task.assigned_to

    @staticmethod
    def _apply_review(task: AnnotationTask, action: str, record: AnnotationRecord | None) -> None:
        if action == "accept":
            if task.status not in (STATUS_AUTO, STATUS_REVIEW):
                raise IllegalTransition(f"cannot accept task in status {task.status!r}")
            if record is not None:
                task.record = record
            if task.record is None:
                raise IllegalTransition("cannot accept a task without a record")
            task.record.reviewed = True
            task.status = STATUS_ACCEPTED
        elif action == "reject":
            if task.status != STATUS_REVIEW:
                raise IllegalTransition(f"cannot reject task in status {task.status!r}")
            task.status = STATUS_PENDING
        else:
            raise AnnotationSchemaError(f"unknown review action {action!r}")

    def submit_annotation(self, triplet_id: str, document: str) -> AnnotationTask:
        task = self.get(triplet_id)
        with self._locks[triplet_id]:
            data = json.loads(document)  # schema errors re-raised by parse_annotation below
            record = parse_annotation(document, self.dims(triplet_id), triplet_id=triplet_id)
            self._apply_annotation(task, record, auto=bool(data.get("auto", False)))
            self._persist(task)
            self._append_event("annotation", triplet_id, json.loads(document))
        return task

    def submit_review(self, triplet_id: str, body: dict) -> AnnotationTask:
        task = self.get(triplet_id)
        with self._locks[triplet_id]:
            action = body.get("action")
            record = None
            if body.get("record") is not None:
                record = parse_annotation(json.dumps(body["record"]), self.dims(triplet_id), triplet_id=triplet_id)
            self._apply_review(task, action, record)
            self._persist(task)
            self._append_event("review", triplet_id, body)
        return task

    def export_zip(self) -> bytes:
        buffer = io.BytesIO()
        with zipfile.ZipFile(buffer, "w", zipfile.ZIP_DEFLATED) as archive:
            for task in self.list_tasks(STATUS_ACCEPTED):
                archive.writestr(f"{task.triplet_id}.json", serialize_annotation(task.record))
        return buffer.getvalue()

    # -- event sourcing ----------------------------------------------------

    def read_events(self) -> list[dict]:
        if not os.path.exists(self.events_path):
            return []
        with open(self.events_path, "r", encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]

    def replay(self, events: list[dict]) -> dict[str, dict]:
        """Fold the event log over the initial manifest state."""
        tasks = {t.triplet_id: AnnotationTask(triplet_id=t.triplet_id) for t in self.manifest.triplets}
        for event in events:
            tid = event["task"]
            body = event["body"]
            task = tasks[tid]
            if event["kind"] == "annotation":
                record = parse_annotation(json.dumps(body), self.dims(tid), triplet_id=tid)
                self._apply_annotation(task, record, auto=bool(body.get("auto", False)))
            elif event["kind"] == "review":
                record = None
                if body.get("record") is not None:
                    record = parse_annotation(json.dumps(body["record"]), self.dims(tid), triplet_id=tid)
                self._apply_review(task, body.get("action"), record)
        return {tid: task.to_json() for tid, task in sorted(tasks.items())}


_TASK_ROUTE = re.compile(r"^/tasks/([^/]+)$")
_ANNOTATION_ROUTE = re.compile(r"^/tasks/([^/]+)/annotation$")
_REVIEW_ROUTE = re.compile(r"^/tasks/([^/]+)/review$")
_IMAGE_ROUTE = re.compile(r"^/images/([^/]+)/(visible|infrared|fused)$")


class AnnotationServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, store: AnnotationStore, host: str = "127.0.0.1", port: int = 0):
        self.store = store
        super().__init__((host, port), _Handler)

    @property
    def address(self) -> str:
        return f"http://{self.server_address[0]}:{self.server_address[1]}"


class _Handler(BaseHTTPRequestHandler):
    server: AnnotationServer

    def log_message(self, fmt, *args) -> None:  # keep test output quiet
        pass

    def _send_json(self, code: int, payload: dict) -> None:
        body = json.dumps(payload, sort_keys=True).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _send_bytes(self, payload: bytes, content_type: str) -> None:
        self.send_response(200)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(payload)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(payload)

    def _task_payload(self, task: AnnotationTask) -> dict:
        h, w = self.server.store.dims(task.triplet_id)
        payload = task.to_json()
        payload["height"] = h
        payload["width"] = w
        payload["images"] = {
            kind: f"/images/{task.triplet_id}/{kind}" for kind in ("visible", "infrared", "fused")
        }
        return payload

    def do_OPTIONS(self) -> None:  # CORS preflight for the browser UI
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()

    def do_GET(self) -> None:
        store = self.server.store
        path, _, query = self.path.partition("?")
        if path == "/tasks":
            status = None
            for part in query.split("&"):
                if part.startswith("status="):
                    status = part.split("=", 1)[1]
            if status is not None and status not in STATUSES:
                self._send_json(400, {"error": f"unknown status {status!r}"})
                return
            self._send_json(200, {"tasks": [t.to_json() for t in store.list_tasks(status)]})
            return
        match = _TASK_ROUTE.match(path)
        if match:
            try:
                task = store.get(match.group(1))
            except TaskNotFound:
                self._send_json(404, {"error": f"unknown task {match.group(1)!r}"})
                return
            self._send_json(200, self._task_payload(task))
            return
        match = _IMAGE_ROUTE.match(path)
        if match:
            tid, kind = match.groups()
            try:
                triplet = store.manifest.get(tid)
            except KeyError:
                self._send_json(404, {"error": f"unknown task {tid!r}"})
                return
            image_path = {
                "visible": triplet.visible_path,
                "infrared": triplet.infrared_path,
                "fused": triplet.fused_path,
            }[kind]
            with open(image_path, "rb") as fh:
                self._send_bytes(fh.read(), "image/png")
            return
        if path == "/export":
            self._send_bytes(store.export_zip(), "application/zip")
            return
        self._send_json(404, {"error": f"no route for {path!r}"})

    def do_POST(self) -> None:
        store = self.server.store
        length = int(self.headers.get("Content-Length", 0))
        body = self.rfile.read(length).decode("utf-8")
        match = _ANNOTATION_ROUTE.match(self.path)
        if match:
            self._mutate(lambda: store.submit_annotation(match.group(1), body))
            return
        match = _REVIEW_ROUTE.match(self.path)
        if match:
            def run():
                try:
                    data = json.loads(body)
                except json.JSONDecodeError as exc:
                    raise AnnotationSchemaError(f"invalid JSON: {exc}") from exc
                return store.submit_review(match.group(1), data)

            self._mutate(run)
            return
        self._send_json(404, {"error": f"no route for {self.path!r}"})

    def _mutate(self, action) -> None:
        try:
            task = action()
        except TaskNotFound as exc:
            self._send_json(404, {"error": f"unknown task {exc.args[0]!r}"})
        except (AnnotationSchemaError, json.JSONDecodeError, ValueError) as exc:
            self._send_json(400, {"error": str(exc)})
        except IllegalTransition as exc:
            self._send_json(409, {"error": str(exc)})
        else:
            self._send_json(200, {"task": self._task_payload(task)})


def serve_annotations(manifest: Manifest, store_dir: str, host: str = "127.0.0.1", port: int = 0) -> AnnotationServer:
    """Build the store and return a ready (not yet serving) HTTP server."""
    return AnnotationServer(AnnotationStore(manifest, store_dir), host=host, port=port)
