"""Local persistent store for mined records, datasets and model bundles.

Layout per repository under the store root::

    <owner>__<name>/
        issues.jsonl        # mined closed issues
        pulls.jsonl         # merged pull requests
        files.jsonl         # source-file artifact metadata
        manifest.json       # mining manifest (resume cursor, counts)
        dataset.jsonl       # labeled training rows (parse output)
        dataset.meta.json
        blobs/<sha256>      # content-addressed file bodies, deduplicated
        models/<model-id>/  # trained model bundles

Every file write goes through write-temp-then-rename so a killed job never
leaves a half-written store.
"""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
from pathlib import Path
from typing import Iterable, Optional


class StoreError(Exception):
    pass


def atomic_write_bytes(path: Path, payload: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: Path, payload: str) -> None:
    atomic_write_bytes(path, payload.encode("utf-8"))


class Store:
    """Per-repository persistence with serialized writes."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    @staticmethod
    def repo_key(owner: str, name: str) -> str:
        return f"{owner}__{name}"

    def repo_dir(self, owner: str, name: str) -> Path:
        return self.root / self.repo_key(owner, name)

    def list_repos(self) -> list[str]:
        return sorted(p.name for p in self.root.iterdir() if p.is_dir())

    # -- jsonl record files --------------------------------------------

    def write_records(self, owner: str, name: str, filename: str, rows: Iterable[dict]) -> None:
        payload = "".join(json.dumps(row, sort_keys=True) + "\n" for row in rows)
        with self._lock:
            atomic_write_text(self.repo_dir(owner, name) / filename, payload)

    def read_records(self, owner: str, name: str, filename: str) -> list[dict]:
        path = self.repo_dir(owner, name) / filename
        if not path.exists():
            return []
        return [json.loads(line) for line in path.read_text("utf-8").splitlines() if line.strip()]

    # -- manifest ---------------------------------------------------------

    def write_manifest(self, owner: str, name: str, manifest: dict) -> None:
        with self._lock:
            atomic_write_text(
                self.repo_dir(owner, name) / "manifest.json",
                json.dumps(manifest, indent=1, sort_keys=True) + "\n",
            )

    def read_manifest(self, owner: str, name: str) -> Optional[dict]:
        path = self.repo_dir(owner, name) / "manifest.json"
        if not path.exists():
            return None
        return json.loads(path.read_text("utf-8"))

    # -- content-addressed blobs ------------------------------------------

    def put_blob(self, owner: str, name: str, content: bytes) -> str:
        blob_id = hashlib.sha256(content).hexdigest()
        path = self.repo_dir(owner, name) / "blobs" / blob_id
        if not path.exists():
            atomic_write_bytes(path, content)
        return blob_id

    def get_blob(self, owner: str, name: str, blob_id: str) -> bytes:
        path = self.repo_dir(owner, name) / "blobs" / blob_id
        if not path.exists():
            raise StoreError(f"missing blob {blob_id[:12]} for {owner}/{name}")
        return path.read_bytes()

    def blob_count(self, owner: str, name: str) -> int:
        blobs = self.repo_dir(owner, name) / "blobs"
        return len(list(blobs.iterdir())) if blobs.exists() else 0

    # -- datasets ----------------------------------------------------------

    def write_dataset(self, owner: str, name: str, jsonl: str, meta: dict) -> None:
        with self._lock:
            atomic_write_text(self.repo_dir(owner, name) / "dataset.jsonl", jsonl)
            atomic_write_text(
                self.repo_dir(owner, name) / "dataset.meta.json",
                json.dumps(meta, indent=1, sort_keys=True) + "\n",
            )

    def read_dataset(self, owner: str, name: str) -> Optional[tuple[str, dict]]:
        data = self.repo_dir(owner, name) / "dataset.jsonl"
        meta = self.repo_dir(owner, name) / "dataset.meta.json"
        if not data.exists() or not meta.exists():
            return None
        return data.read_text("utf-8"), json.loads(meta.read_text("utf-8"))

    # -- model bundles -------------------------------------------------------

    def model_dir(self, owner: str, name: str, model_id: str) -> Path:
        return self.repo_dir(owner, name) / "models" / model_id

    def list_models(self, owner: str, name: str) -> list[str]:
        models = self.repo_dir(owner, name) / "models"
        if not models.exists():
            return []
        return sorted(p.name for p in models.iterdir() if (p / "model.meta.json").exists())

    def write_model_file(self, owner: str, name: str, model_id: str, filename: str, payload: str) -> None:
        with self._lock:
            atomic_write_text(self.model_dir(owner, name, model_id) / filename, payload)

    def read_model_file(self, owner: str, name: str, model_id: str, filename: str) -> str:
        path = self.model_dir(owner, name, model_id) / filename
        if not path.exists():
            raise StoreError(f"missing model file {filename} in {model_id}")
        return path.read_text("utf-8")
