"""HTTP clients for remote classifier, embedder and LLM services."""

from __future__ import annotations

import copy
import json
import logging
import os
import threading
import time
from contextlib import nullcontext
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Sequence

import httpx

from ..errors import BackendError, ConfigError
from .base import check_embedding_batch, check_probability_batch

log = logging.getLogger(__name__)

BASE_DELAY_S = 0.5
BACKOFF_FACTOR = 2.0
MAX_ATTEMPTS = 3
LLM_TIMEOUT_S = 120.0
DEFAULT_TIMEOUT_S = 30.0


class RequestLimiter:
    """Caps in-flight requests across every backend that shares it."""

    def __init__(self, limit: int):
        if limit < 1:
            raise ValueError("limit must be >= 1")
        self.limit = limit
        self._sem = threading.BoundedSemaphore(limit)

    def __enter__(self):
        self._sem.acquire()
        return self

    def __exit__(self, *exc):
        self._sem.release()


def _transient(status: int) -> bool:
    return status >= 500 or status == 429


def post_json(client: httpx.Client, url: str, payload: Any, *, headers: dict | None = None,
              attempts: int = MAX_ATTEMPTS, sleep: Callable[[float], None] = time.sleep,
              limiter: RequestLimiter | None = None) -> Any:
    """POST with exponential backoff on transport errors, 5xx and 429."""
    delay = BASE_DELAY_S
    last: BackendError | None = None
    for attempt in range(attempts):
        if attempt:
            sleep(delay)
            delay *= BACKOFF_FACTOR
        try:
            with limiter or nullcontext():
                resp = client.post(url, json=payload, headers=headers)
        except httpx.TransportError as exc:
            last = BackendError(f"POST {url} failed: {exc.__class__.__name__}")
            log.warning("attempt %d/%d: %s", attempt + 1, attempts, last)
            continue
        if resp.status_code < 400:
            try:
                return resp.json()
            except json.JSONDecodeError:
                raise BackendError(f"POST {url} returned non-JSON", resp.status_code, resp.text) from None
        last = BackendError(f"POST {url}", resp.status_code, resp.text)
        if not _transient(resp.status_code):
            raise last
        log.warning("attempt %d/%d: %s", attempt + 1, attempts, last)
    assert last is not None
    raise last


class _HttpBase:
    def __init__(self, base_url: str, timeout: float, client: httpx.Client | None, offline: bool,
                 limiter: RequestLimiter | None, sleep: Callable[[float], None]):
        self.base_url = base_url.rstrip("/")
        self.offline = offline
        self.limiter = limiter
        self.sleep = sleep
        self._client = client or httpx.Client(timeout=timeout)

    def _post(self, path: str, payload: Any, headers: dict | None = None) -> Any:
        url = self.base_url + path
        if self.offline:
            raise BackendError(f"network disabled; cannot reach {url}")
        return post_json(self._client, url, payload, headers=headers, sleep=self.sleep, limiter=self.limiter)


class HttpClassifier(_HttpBase):
    def __init__(self, base_url: str, batch_size: int = 32, timeout: float = DEFAULT_TIMEOUT_S,
                 client: httpx.Client | None = None, offline: bool = False,
                 limiter: RequestLimiter | None = None, sleep: Callable[[float], None] = time.sleep):
        super().__init__(base_url, timeout, client, offline, limiter, sleep)
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        self.batch_size = batch_size
        self.backend_id = f"http-classifier:{self.base_url}"

    def predict(self, texts: Sequence[str]) -> list[list[float]]:
        texts = list(texts)
        out: list[list[float]] = []
        for start in range(0, len(texts), self.batch_size):
            batch = texts[start:start + self.batch_size]
            body = self._post("/predict", {"texts": batch})
            probs = body.get("probs") if isinstance(body, dict) else None
            out.extend(check_probability_batch(probs, len(batch), self.backend_id))
        return out


class HttpEmbedder(_HttpBase):
    def __init__(self, base_url: str, batch_size: int = 64, timeout: float = DEFAULT_TIMEOUT_S,
                 client: httpx.Client | None = None, offline: bool = False,
                 limiter: RequestLimiter | None = None, sleep: Callable[[float], None] = time.sleep):
        super().__init__(base_url, timeout, client, offline, limiter, sleep)
        self.batch_size = batch_size
        self.backend_id = f"http-embedder:{self.base_url}"

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        texts = list(texts)
        out: list[list[float]] = []
        for start in range(0, len(texts), self.batch_size):
            batch = texts[start:start + self.batch_size]
            body = self._post("/embed", {"texts": batch})
            vecs = body.get("embeddings") if isinstance(body, dict) else None
            out.extend(check_embedding_batch(vecs, len(batch), self.backend_id))
        if out and any(len(v) != len(out[0]) for v in out):
            raise BackendError(f"{self.backend_id}: inconsistent embedding dimension across batches")
        return out


def _split_path(path: str) -> list[str | int]:
    return [int(p) if p.isdigit() else p for p in path.split(".")]


def get_path(obj: Any, path: str) -> Any:
    for part in _split_path(path):
        obj = obj[part]
    return obj


def set_path(obj: Any, path: str, value: Any) -> None:
    parts = _split_path(path)
    for part in parts[:-1]:
        if isinstance(part, str) and isinstance(obj, dict) and part not in obj:
            obj[part] = {}
        obj = obj[part]
    obj[parts[-1]] = value


@dataclass(frozen=True)
class ProviderAdapter:
    """Maps the provider-agnostic ``complete()`` call onto one provider's JSON API.

    Credentials are read from the environment variable named by ``auth_env`` at
    call time and never stored.
    """

    endpoint: str
    prompt_path: str
    completion_path: str
    body: dict = field(default_factory=dict)
    temperature_path: str | None = "temperature"
    seed_path: str | None = None
    auth_env: str | None = "LIMELLE_LLM_API_KEY"
    auth_header: str = "Authorization"
    auth_scheme: str = "Bearer"
    headers: dict = field(default_factory=dict)
    name: str = "custom"

    @classmethod
    def from_dict(cls, data: dict) -> "ProviderAdapter":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown adapter keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(f"invalid adapter config: {exc}") from None

    @classmethod
    def load(cls, path: str | Path) -> "ProviderAdapter":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read adapter {path}: {exc}") from None

    def build_request(self, prompt: str, temperature: float, seed: int | None) -> dict:
        body = copy.deepcopy(self.body)
        set_path(body, self.prompt_path, prompt)
        if self.temperature_path:
            set_path(body, self.temperature_path, temperature)
        if self.seed_path and seed is not None:
            set_path(body, self.seed_path, seed)
        return body

    def auth_headers(self) -> dict:
        headers = dict(self.headers)
        if self.auth_env:
            key = os.environ.get(self.auth_env)
            if not key:
                raise BackendError(f"credential environment variable {self.auth_env} is not set")
            headers[self.auth_header] = f"{self.auth_scheme} {key}".strip()
        return headers


class HttpLlm(_HttpBase):
    def __init__(self, adapter: ProviderAdapter, timeout: float = LLM_TIMEOUT_S,
                 client: httpx.Client | None = None, offline: bool = False,
                 limiter: RequestLimiter | None = None, sleep: Callable[[float], None] = time.sleep):
        super().__init__(adapter.endpoint, timeout, client, offline, limiter, sleep)
        self.adapter = adapter
        self.backend_id = f"http-llm:{adapter.name}:{self.base_url}"

    def complete(self, prompt: str, temperature: float = 0.7, seed: int | None = None) -> str:
        body = self.adapter.build_request(prompt, temperature, seed)
        if self.offline:
            raise BackendError(f"network disabled; cannot reach {self.base_url}")
        resp = self._post("", body, headers=self.adapter.auth_headers())
        try:
            text = get_path(resp, self.adapter.completion_path)
        except (KeyError, IndexError, TypeError):
            raise BackendError(f"{self.backend_id}: completion not found at {self.adapter.completion_path}",
                               body=json.dumps(resp)[:200]) from None
        if not isinstance(text, str) or not text.strip():
            raise BackendError(f"{self.backend_id}: empty completion")
        return text
