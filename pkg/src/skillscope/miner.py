"""Mining merged pull requests, linked issues and changed Java files.

Only merged PRs are persisted (declined work must not contaminate training
data); their changed ``.java`` files are downloaded at the PR head revision
and stored content-addressed. Issue linkage follows the hosting platform's
closing-keyword grammar over PR title and body. Mining over the same
fixture is idempotent and resumable: already-persisted pull requests are not
re-fetched, and the manifest records the last completed listing page.
"""
from __future__ import annotations

import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

from .store import Store
from .transport import HttpResponse, TransportError

GITHUB_API = "https://api.github.com"

CLOSING_KEYWORD_RE = re.compile(
    r"\b(?:fixes|fixed|closes|closed|resolves|resolved)\s+#(\d+)", re.IGNORECASE
)

_NAME_RE = re.compile(r"^[A-Za-z0-9._-]+$")


class MiningError(Exception):
    pass


class InvalidRepoError(MiningError):
    pass


class RepoNotFoundError(MiningError):
    pass


class AuthError(MiningError):
    pass


class TransientHttpError(MiningError):
    """Retries exhausted on a retryable failure."""


@dataclass(frozen=True)
class RepoRef:
    owner: str
    name: str
    host: str = GITHUB_API

    def __post_init__(self):
        if not _NAME_RE.match(self.owner or "") or not _NAME_RE.match(self.name or ""):
            raise InvalidRepoError(f"invalid repo reference: {self.owner!r}/{self.name!r}")

    @classmethod
    def parse(cls, url: str) -> "RepoRef":
        """Accepts ``owner/name`` or an https repository URL."""
        text = url.strip()
        if text.startswith("http://") or text.startswith("https://"):
            parts = [p for p in text.split("/") if p]
            # ['https:', 'github.com', owner, name, ...]
            if len(parts) < 4:
                raise InvalidRepoError(f"invalid repo reference: {url!r}")
            owner, name = parts[2], parts[3]
        else:
            bits = text.split("/")
            if len(bits) != 2:
                raise InvalidRepoError(f"invalid repo reference: {url!r}")
            owner, name = bits
        if name.endswith(".git"):
            name = name[: -len(".git")]
        return cls(owner=owner, name=name)

    @property
    def key(self) -> str:
        return Store.repo_key(self.owner, self.name)


@dataclass
class IssueRecord:
    repo: str  # "owner/name"
    number: int
    title: str
    body: str
    state: str  # open | closed
    closed_at: Optional[str] = None
    updated_at: Optional[str] = None
    url: str = ""
    linked_pr_numbers: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "repo": self.repo,
            "number": self.number,
            "title": self.title,
            "body": self.body,
            "state": self.state,
            "closed_at": self.closed_at,
            "updated_at": self.updated_at,
            "url": self.url,
            "linked_pr_numbers": sorted(self.linked_pr_numbers),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IssueRecord":
        return cls(**data)


@dataclass
class PullRequestRecord:
    repo: str
    number: int
    merged: bool
    merged_at: Optional[str]
    title: str
    body: str
    head_sha: str
    changed_paths: list[str] = field(default_factory=list)
    linked_issue_numbers: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "repo": self.repo,
            "number": self.number,
            "merged": self.merged,
            "merged_at": self.merged_at,
            "title": self.title,
            "body": self.body,
            "head_sha": self.head_sha,
            "changed_paths": list(self.changed_paths),
            "linked_issue_numbers": sorted(self.linked_issue_numbers),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PullRequestRecord":
        return cls(**data)


@dataclass
class SourceFileArtifact:
    repo: str
    pr_number: int
    path: str
    blob_id: str

    def to_dict(self) -> dict:
        return {
            "repo": self.repo,
            "pr_number": self.pr_number,
            "path": self.path,
            "blob_id": self.blob_id,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SourceFileArtifact":
        return cls(**data)


@dataclass
class MiningManifest:
    repo: str
    prs_seen: int = 0
    prs_merged_kept: int = 0
    issues_linked: int = 0
    files_downloaded: int = 0
    files_skipped: int = 0
    resume_cursor: str = ""
    started_at: Optional[str] = None
    finished_at: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "repo": self.repo,
            "prs_seen": self.prs_seen,
            "prs_merged_kept": self.prs_merged_kept,
            "issues_linked": self.issues_linked,
            "files_downloaded": self.files_downloaded,
            "files_skipped": self.files_skipped,
            "resume_cursor": self.resume_cursor,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
        }


@dataclass
class MinerConfig:
    concurrency: int = 4
    max_retries: int = 5
    backoff_base: float = 0.1
    per_page: int = 100
    sleeper: Callable[[float], None] = time.sleep
    clock: Callable[[], float] = time.time


def _timestamp(clock: Callable[[], float]) -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(clock()))


class _Api:
    """The few v3 endpoints the miner needs, with rate-limit waits and
    exponential-backoff retries shared by every call."""

    def __init__(self, transport, repo: RepoRef, config: MinerConfig):
        self.transport = transport
        self.repo = repo
        self.config = config

    def get(self, url: str, params: Optional[dict] = None) -> HttpResponse:
        attempts = 0
        while True:
            try:
                response = self.transport.request("GET", url, params)
            except TransportError as exc:
                attempts += 1
                if attempts >= self.config.max_retries:
                    raise TransientHttpError(f"retries exhausted for {url}: {exc}") from exc
                self.config.sleeper(self.config.backoff_base * (2 ** (attempts - 1)))
                continue
            if response.status in (403, 429) and response.header("X-RateLimit-Remaining") == "0":
                reset = float(response.header("X-RateLimit-Reset", "0") or 0)
                delay = max(0.0, reset - self.config.clock())
                self.config.sleeper(delay)
                continue
            if response.status == 429 and response.header("Retry-After"):
                self.config.sleeper(float(response.header("Retry-After")))
                continue
            if response.status == 401:
                raise AuthError(f"authentication failed for {url}")
            if response.status == 404:
                raise RepoNotFoundError(f"not found: {url}")
            if response.status >= 500:
                attempts += 1
                if attempts >= self.config.max_retries:
                    raise TransientHttpError(f"retries exhausted for {url}: HTTP {response.status}")
                self.config.sleeper(self.config.backoff_base * (2 ** (attempts - 1)))
                continue
            if response.status != 200:
                raise MiningError(f"unexpected HTTP {response.status} for {url}")
            return response

    def paged(self, path: str, params: dict, start_page: int = 1):
        page = start_page
        while True:
            merged_params = dict(params, per_page=self.config.per_page, page=page)
            items = self.get(f"{self.repo.host}{path}", merged_params).json()
            if not items:
                return
            yield page, items
            page += 1

    def list_closed_pulls(self, start_page: int = 1):
        return self.paged(f"/repos/{self.repo.owner}/{self.repo.name}/pulls", {"state": "closed"}, start_page)

    def list_issues(self, state: str, start_page: int = 1):
        return self.paged(
            f"/repos/{self.repo.owner}/{self.repo.name}/issues",
            {"state": state, "sort": "updated", "direction": "desc"},
            start_page,
        )

    def pull_files(self, number: int) -> list[dict]:
        out: list[dict] = []
        for _, items in self.paged(
            f"/repos/{self.repo.owner}/{self.repo.name}/pulls/{number}/files", {}
        ):
            out.extend(items)
        return out

    def file_content(self, path: str, ref: str) -> bytes:
        import base64

        payload = self.get(
            f"{self.repo.host}/repos/{self.repo.owner}/{self.repo.name}/contents/{path}",
            {"ref": ref},
        ).json()
        if payload.get("encoding") == "base64":
            return base64.b64decode(payload["content"])
        return str(payload.get("content", "")).encode("utf-8")


def link_pr_to_issues(pr: PullRequestRecord, issue_numbers: set[int]) -> set[int]:
    """Issue numbers named by closing keywords in the PR title or body,
    intersected with the known issue corpus."""
    found = {
        int(m.group(1))
        for m in CLOSING_KEYWORD_RE.finditer(f"{pr.title or ''}\n{pr.body or ''}")
    }
    return found & issue_numbers


def fetch_open_issues(repo: RepoRef, limit: int, transport, config: Optional[MinerConfig] = None) -> list[IssueRecord]:
    """Up to ``limit`` open issues, most recently updated first; pull
    requests masquerading as issues are excluded."""
    if limit < 1:
        raise MiningError("limit must be positive")
    api = _Api(transport, repo, config or MinerConfig())
    out: list[IssueRecord] = []
    for _, items in api.list_issues("open"):
        for item in items:
            if "pull_request" in item:
                continue
            out.append(
                IssueRecord(
                    repo=f"{repo.owner}/{repo.name}",
                    number=item["number"],
                    title=item.get("title") or "",
                    body=item.get("body") or "",
                    state="open",
                    updated_at=item.get("updated_at"),
                    url=item.get("html_url") or "",
                )
            )
            if len(out) >= limit:
                return out
    return out


def mine_repository(
    repo: RepoRef,
    store: Store,
    transport,
    config: Optional[MinerConfig] = None,
    progress: Optional[Callable[[str, int], None]] = None,
) -> MiningManifest:
    """Mine closed+merged PRs, their linked issues and changed Java files.

    Persists issues.jsonl, pulls.jsonl, files.jsonl, blobs/ and
    manifest.json under the repo's store directory. Re-running over the same
    fixture is a no-op apart from manifest timestamps.
    """
    config = config or MinerConfig()
    api = _Api(transport, repo, config)
    repo_slug = f"{repo.owner}/{repo.name}"
    manifest = MiningManifest(repo=repo_slug, started_at=_timestamp(config.clock))

    def report(stage: str, count: int) -> None:
        if progress is not None:
            progress(stage, count)

    # closed issues form the linkage corpus
    issues: dict[int, IssueRecord] = {
        rec["number"]: IssueRecord.from_dict(rec)
        for rec in store.read_records(repo.owner, repo.name, "issues.jsonl")
    }
    for _, items in api.list_issues("closed"):
        for item in items:
            if "pull_request" in item:
                continue
            issues[item["number"]] = IssueRecord(
                repo=repo_slug,
                number=item["number"],
                title=item.get("title") or "",
                body=item.get("body") or "",
                state="closed",
                closed_at=item.get("closed_at"),
                updated_at=item.get("updated_at"),
                url=item.get("html_url") or "",
            )
        report("issues", len(issues))
    issue_numbers = set(issues)

    pulls: dict[int, PullRequestRecord] = {
        rec["number"]: PullRequestRecord.from_dict(rec)
        for rec in store.read_records(repo.owner, repo.name, "pulls.jsonl")
    }
    artifacts: dict[tuple[int, str], SourceFileArtifact] = {
        (rec["pr_number"], rec["path"]): SourceFileArtifact.from_dict(rec)
        for rec in store.read_records(repo.owner, repo.name, "files.jsonl")
    }

    def download(pr_number: int, head_sha: str, path: str) -> Optional[SourceFileArtifact]:
        try:
            content = api.file_content(path, head_sha)
        except TransientHttpError:
            return None
        blob_id = store.put_blob(repo.owner, repo.name, content)
        return SourceFileArtifact(repo=repo_slug, pr_number=pr_number, path=path, blob_id=blob_id)

    for page, items in api.list_closed_pulls():
        for item in items:
            manifest.prs_seen += 1
            number = item["number"]
            if not item.get("merged_at"):
                continue  # declined or closed-unmerged PRs are never persisted
            if number in pulls:
                manifest.prs_merged_kept += 1
                continue  # resume: already fully processed
            record = PullRequestRecord(
                repo=repo_slug,
                number=number,
                merged=True,
                merged_at=item["merged_at"],
                title=item.get("title") or "",
                body=item.get("body") or "",
                head_sha=(item.get("head") or {}).get("sha") or "",
            )
            files = api.pull_files(number)
            record.changed_paths = sorted(f["filename"] for f in files)
            record.linked_issue_numbers = sorted(link_pr_to_issues(record, issue_numbers))
            java_paths = [p for p in record.changed_paths if p.endswith(".java")]
            if config.concurrency > 1 and len(java_paths) > 1:
                with ThreadPoolExecutor(max_workers=config.concurrency) as pool:
                    results = list(
                        pool.map(lambda p: download(number, record.head_sha, p), java_paths)
                    )
            else:
                results = [download(number, record.head_sha, p) for p in java_paths]
            for path, artifact in zip(java_paths, results):
                if artifact is None:
                    manifest.files_skipped += 1
                else:
                    artifacts[(number, path)] = artifact
            pulls[number] = record
            manifest.prs_merged_kept += 1
            report("pulls", manifest.prs_merged_kept)
        manifest.resume_cursor = str(page)

    for pr in pulls.values():
        for issue_number in pr.linked_issue_numbers:
            if issue_number in issues and pr.number not in issues[issue_number].linked_pr_numbers:
                issues[issue_number].linked_pr_numbers.append(pr.number)
    # counts mirror the persisted records, so resumed runs stay idempotent
    manifest.issues_linked = sum(1 for i in issues.values() if i.linked_pr_numbers)
    manifest.files_downloaded = len(artifacts)

    store.write_records(
        repo.owner, repo.name, "issues.jsonl",
        [issues[k].to_dict() for k in sorted(issues)],
    )
    store.write_records(
        repo.owner, repo.name, "pulls.jsonl",
        [pulls[k].to_dict() for k in sorted(pulls)],
    )
    store.write_records(
        repo.owner, repo.name, "files.jsonl",
        [artifacts[k].to_dict() for k in sorted(artifacts)],
    )
    manifest.finished_at = _timestamp(config.clock)
    store.write_manifest(repo.owner, repo.name, manifest.to_dict())
    return manifest
