"""HTTP transports for the miner: live, recorded-replay and recording.

Every test runs against replay cassettes; live mode sits behind a config
flag. A cassette maps a canonical request key (method, URL, sorted query
params) to a list of responses consumed in order; the last response repeats
once the list is exhausted, so re-mining the same fixture replays cleanly
while scripted sequences (rate-limit then success) still work.
"""
from __future__ import annotations

import base64
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

DEFAULT_TOKEN_ENV = "SKILLSCOPE_TOKEN"


class TransportError(Exception):
    """Transient transport-level failure (network error, malformed reply)."""


@dataclass
class HttpResponse:
    status: int
    headers: dict[str, str] = field(default_factory=dict)
    body: bytes = b""

    def json(self):
        return json.loads(self.body.decode("utf-8"))

    def header(self, name: str, default: Optional[str] = None) -> Optional[str]:
        for key, value in self.headers.items():
            if key.lower() == name.lower():
                return value
        return default


def request_key(method: str, url: str, params: Optional[dict] = None) -> str:
    if params:
        query = "&".join(f"{k}={params[k]}" for k in sorted(params))
        return f"{method.upper()} {url}?{query}"
    return f"{method.upper()} {url}"


class LiveTransport:
    """Real HTTPS requests with optional bearer auth from the environment."""

    def __init__(self, token_env: str = DEFAULT_TOKEN_ENV, timeout: float = 30.0):
        import requests

        self._session = requests.Session()
        self.token_env = token_env
        self.timeout = timeout

    def request(self, method: str, url: str, params: Optional[dict] = None) -> HttpResponse:
        import requests

        headers = {"Accept": "application/vnd.github+json"}
        token = os.environ.get(self.token_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        try:
            response = self._session.request(
                method, url, params=params, headers=headers, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise TransportError(f"network failure for {url}: {exc}") from exc
        return HttpResponse(
            status=response.status_code,
            headers=dict(response.headers),
            body=response.content,
        )


class ReplayTransport:
    """Serves recorded responses; any unrecorded request is an error, so no
    replay run can ever touch the network."""

    def __init__(self, cassette_path: str | Path):
        self.path = Path(cassette_path)
        data = json.loads(self.path.read_text("utf-8"))
        self.entries: dict[str, list[dict]] = data["entries"]
        self._cursor: dict[str, int] = {}

    def request(self, method: str, url: str, params: Optional[dict] = None) -> HttpResponse:
        key = request_key(method, url, params)
        if key not in self.entries:
            raise TransportError(f"no cassette entry for: {key}")
        responses = self.entries[key]
        index = min(self._cursor.get(key, 0), len(responses) - 1)
        self._cursor[key] = index + 1
        return decode_response(responses[index])


class RecordingTransport:
    """Wraps a live transport and appends every exchange to a cassette."""

    def __init__(self, inner, cassette_path: str | Path):
        self.inner = inner
        self.path = Path(cassette_path)
        self.entries: dict[str, list[dict]] = {}
        if self.path.exists():
            self.entries = json.loads(self.path.read_text("utf-8"))["entries"]

    def request(self, method: str, url: str, params: Optional[dict] = None) -> HttpResponse:
        response = self.inner.request(method, url, params)
        self.entries.setdefault(request_key(method, url, params), []).append(
            encode_response(response)
        )
        self.path.write_text(
            json.dumps({"entries": self.entries}, indent=1, sort_keys=True) + "\n"
        )
        return response


def encode_response(response: HttpResponse) -> dict:
    entry: dict = {"status": response.status, "headers": response.headers}
    try:
        entry["json"] = json.loads(response.body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        entry["body_b64"] = base64.b64encode(response.body).decode("ascii")
    return entry


def decode_response(entry: dict) -> HttpResponse:
    if "json" in entry:
        body = json.dumps(entry["json"]).encode("utf-8")
    else:
        body = base64.b64decode(entry.get("body_b64", ""))
    return HttpResponse(status=entry["status"], headers=dict(entry.get("headers", {})), body=body)
