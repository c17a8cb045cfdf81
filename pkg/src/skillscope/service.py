"""HTTP API over the pipeline: submit a repository, watch the job, train,
and fetch skill predictions for open issues.

Errors use one envelope everywhere: ``{"error": {"code", "message"}}``
(plus ``job_id`` on duplicate-job conflicts). All handlers are thin wrappers
over :mod:`skillscope.pipeline`; job execution happens on the registry's
worker thread so submission returns immediately.
"""
from __future__ import annotations

import dataclasses
import time
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .config import AppConfig
from .jobs import JobError, JobRegistry
from .miner import InvalidRepoError, RepoRef
from .pipeline import (
    DatasetMissing,
    ModelMissing,
    PipelineError,
    run_mine,
    run_parse,
    run_predict,
    run_train,
)
from .store import Store


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, **extra):
        super().__init__(message)
        self.status = status
        self.code = code
        self.extra = extra


class RepoSubmission(BaseModel):
    url: str = Field(..., description="Repository URL or owner/name")


class JobCreated(BaseModel):
    job_id: str


class JobStateModel(BaseModel):
    job_id: str
    kind: str
    repo: str
    status: str
    progress: dict[str, int]
    error: Optional[dict] = None
    created_at: float
    started_at: Optional[float] = None
    finished_at: Optional[float] = None


class SkillChip(BaseModel):
    label: str
    display_path: str
    score: float


class IssuePrediction(BaseModel):
    issue: int
    title: str
    url: str
    algorithm: str
    skills: list[SkillChip]


class TrainRequest(BaseModel):
    repo: str
    options: dict = Field(default_factory=dict)


class TrainResponse(BaseModel):
    model_id: str
    report: dict


def _parse_repo_id(repo_id: str) -> RepoRef:
    owner, sep, name = repo_id.partition("__")
    if not sep:
        raise ApiError(400, "invalid_repo", f"malformed repo id {repo_id!r}")
    try:
        return RepoRef(owner=owner, name=name)
    except InvalidRepoError as exc:
        raise ApiError(400, "invalid_repo", str(exc)) from exc


# config fields a train request may override per call
_TRAIN_OPTION_FIELDS = {
    "seed", "theta", "n_trees", "max_depth", "min_samples_leaf",
    "features_per_split", "bootstrap", "mlsmote_k", "use_mlsmote", "split_ratio",
}


def create_app(
    store_dir: str | Path,
    config: Optional[AppConfig] = None,
    clock=time.time,
    static_dir: Optional[str | Path] = None,
) -> FastAPI:
    config = config or AppConfig()
    store = Store(store_dir)
    registry = JobRegistry(clock=clock)
    app = FastAPI(title="skillscope", version="0.1.0")
    app.state.store = store
    app.state.registry = registry
    app.state.config = config

    @app.exception_handler(ApiError)
    async def api_error_handler(request: Request, exc: ApiError):
        body = {"error": {"code": exc.code, "message": str(exc)}}
        body.update(exc.extra)
        return JSONResponse(status_code=exc.status, content=body)

    @app.get("/")
    def index():
        return {
            "service": "skillscope",
            "endpoints": ["POST /repos", "GET /jobs/{id}", "GET /repos/{id}/issues", "POST /train"],
        }

    @app.post("/repos", response_model=JobCreated, status_code=202)
    def submit_repo(submission: RepoSubmission):
        try:
            repo = RepoRef.parse(submission.url)
        except InvalidRepoError as exc:
            raise ApiError(400, "invalid_repo", str(exc)) from exc

        def work(progress):
            run_mine(store, repo, config, progress=progress)
            run_parse(store, repo, config, progress=progress)

        try:
            job = registry.submit("mine", repo.key, work)
        except JobError as exc:
            raise ApiError(
                409, "job_in_flight", f"a job is already running for {repo.key}", job_id=str(exc)
            ) from exc
        return JobCreated(job_id=job.id)

    @app.get("/jobs/{job_id}", response_model=JobStateModel)
    def job_state(job_id: str):
        job = registry.get(job_id)
        if job is None:
            raise ApiError(404, "unknown_job", f"no job {job_id!r}")
        return JobStateModel(**job.as_dict())

    @app.get("/repos/{repo_id}/issues", response_model=list[IssuePrediction])
    def predict_issues(
        repo_id: str,
        limit: int = 10,
        skills: int = 3,
        algorithm: str = "rf",
        model: Optional[str] = None,
    ):
        repo = _parse_repo_id(repo_id)
        if limit < 1:
            raise ApiError(400, "bad_limit", "limit must be positive")
        if skills < 1:
            raise ApiError(400, "bad_skills", "skills must be positive")
        if algorithm not in ("rf", "llm"):
            raise ApiError(400, "bad_algorithm", f"unknown algorithm {algorithm!r}")
        if not store.repo_dir(repo.owner, repo.name).exists():
            raise ApiError(404, "unknown_repo", f"{repo.key} has not been mined")
        if algorithm == "llm" and config.make_provider() is None:
            raise ApiError(503, "provider_unavailable", "no llm provider configured")
        try:
            rows = run_predict(store, repo, config, limit, skills, algorithm, model_id=model)
        except ModelMissing as exc:
            raise ApiError(409, "train_first", str(exc)) from exc
        except PipelineError as exc:
            raise ApiError(503, "provider_unavailable", str(exc)) from exc
        return [IssuePrediction(**row) for row in rows]

    @app.post("/train", response_model=TrainResponse)
    def train(request: TrainRequest):
        try:
            repo = (
                _parse_repo_id(request.repo) if "__" in request.repo else RepoRef.parse(request.repo)
            )
        except InvalidRepoError as exc:
            raise ApiError(400, "invalid_repo", str(exc)) from exc
        unknown = set(request.options) - _TRAIN_OPTION_FIELDS
        if unknown:
            raise ApiError(400, "bad_options", f"unknown train options: {sorted(unknown)}")
        train_config = dataclasses.replace(config, **request.options)
        try:
            model_id, report = run_train(store, repo, train_config)
        except DatasetMissing as exc:
            raise ApiError(409, "dataset_missing", str(exc)) from exc
        except PipelineError as exc:
            raise ApiError(422, "untrainable_dataset", str(exc)) from exc
        return TrainResponse(model_id=model_id, report=report)

    if static_dir is not None and Path(static_dir).exists():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
