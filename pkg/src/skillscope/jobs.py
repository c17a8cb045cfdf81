"""Single-process job queue backing the HTTP API.

One worker thread executes jobs in submission order; at most one job may be
in flight per repository. Status only moves forward (queued -> running ->
done | failed) and progress counters are monotone.
"""
from __future__ import annotations

import queue
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Optional


class JobError(Exception):
    pass


_TRANSITIONS = {
    "queued": {"running"},
    "running": {"done", "failed"},
    "done": set(),
    "failed": set(),
}


@dataclass
class JobState:
    id: str
    kind: str  # mine | parse | train | predict
    repo: str
    status: str = "queued"
    progress: dict = field(default_factory=dict)
    error: Optional[dict] = None
    created_at: float = 0.0
    started_at: Optional[float] = None
    finished_at: Optional[float] = None

    def as_dict(self) -> dict:
        return {
            "job_id": self.id,
            "kind": self.kind,
            "repo": self.repo,
            "status": self.status,
            "progress": dict(self.progress),
            "error": self.error,
            "created_at": self.created_at,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
        }


class JobRegistry:
    def __init__(self, clock: Callable[[], float] = time.time):
        self.clock = clock
        self._jobs: dict[str, JobState] = {}
        self._lock = threading.Lock()
        self._queue: "queue.Queue[Optional[str]]" = queue.Queue()
        self._fns: dict[str, Callable] = {}
        self._counter = 0
        self._worker = threading.Thread(target=self._run, daemon=True)
        self._worker.start()

    def submit(self, kind: str, repo: str, fn: Callable[[Callable[[str, int], None]], None]) -> JobState:
        """Enqueue ``fn(progress_cb)``; rejects a second in-flight job for
        the same repo by raising JobError carrying the existing job id."""
        with self._lock:
            active = self._active_for_repo(repo)
            if active is not None:
                raise JobError(active.id)
            self._counter += 1
            job = JobState(
                id=f"job-{self._counter:04d}", kind=kind, repo=repo, created_at=self.clock()
            )
            self._jobs[job.id] = job
            self._fns[job.id] = fn
        self._queue.put(job.id)
        return job

    def get(self, job_id: str) -> Optional[JobState]:
        with self._lock:
            return self._jobs.get(job_id)

    def active_for_repo(self, repo: str) -> Optional[JobState]:
        with self._lock:
            return self._active_for_repo(repo)

    def _active_for_repo(self, repo: str) -> Optional[JobState]:
        for job in self._jobs.values():
            if job.repo == repo and job.status in ("queued", "running"):
                return job
        return None

    def _transition(self, job: JobState, status: str) -> None:
        if status not in _TRANSITIONS[job.status]:
            raise JobError(f"illegal transition {job.status} -> {status}")
        job.status = status

    def _run(self) -> None:
        while True:
            job_id = self._queue.get()
            if job_id is None:
                return
            with self._lock:
                job = self._jobs[job_id]
                fn = self._fns.pop(job_id)
                self._transition(job, "running")
                job.started_at = self.clock()

            def progress(stage: str, count: int, job=job) -> None:
                with self._lock:
                    job.progress[stage] = max(job.progress.get(stage, 0), count)

            try:
                fn(progress)
            except Exception as exc:  # job failures are data, not crashes
                with self._lock:
                    self._transition(job, "failed")
                    job.error = {"code": type(exc).__name__, "message": str(exc)}
                    job.finished_at = self.clock()
            else:
                with self._lock:
                    self._transition(job, "done")
                    job.finished_at = self.clock()

    def wait(self, job_id: str, timeout: float = 30.0, poll: float = 0.01) -> JobState:
        """Test helper: block until the job leaves the queue."""
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            job = self.get(job_id)
            if job is not None and job.status in ("done", "failed"):
                return job
            time.sleep(poll)
        raise JobError(f"timeout waiting for {job_id}")

    def shutdown(self) -> None:
        self._queue.put(None)
