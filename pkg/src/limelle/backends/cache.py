"""Content-addressed response cache and caching wrappers for each backend kind."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

log = logging.getLogger(__name__)


def canonical_json(obj: Any) -> str:
    """Key order and formatting whitespace do not affect the result."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass(frozen=True)
class CacheKey:
    backend_id: str
    digest: str

    @classmethod
    def for_request(cls, backend_id: str, request: Any) -> "CacheKey":
        h = hashlib.sha256()
        h.update(backend_id.encode())
        h.update(b"\0")
        h.update(canonical_json(request).encode())
        return cls(backend_id, h.hexdigest())


class ResponseCache:
    """One JSON file per key under ``root/ab/cd/<digest>.json``.

    Writes go to a temp file that is renamed into place, so concurrent readers
    never see a partial entry. I/O failures are counted and fall through to the
    live call.
    """

    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)
        self.hits = 0
        self.misses = 0
        self.io_errors = 0
        self._lock = threading.Lock()

    def path_for(self, key: CacheKey) -> Path:
        d = key.digest
        return self.root / d[:2] / d[2:4] / f"{d}.json"

    def _count(self, attr: str) -> None:
        with self._lock:
            setattr(self, attr, getattr(self, attr) + 1)

    def read(self, key: CacheKey) -> bytes | None:
        path = self.path_for(key)
        try:
            return path.read_bytes()
        except FileNotFoundError:
            return None
        except OSError as exc:
            self._count("io_errors")
            log.warning("cache read failed for %s: %s", path, exc)
            return None

    def write(self, key: CacheKey, payload: bytes) -> None:
        path = self.path_for(key)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
            try:
                with os.fdopen(fd, "wb") as fh:
                    fh.write(payload)
                os.replace(tmp, path)
            except BaseException:
                if os.path.exists(tmp):
                    os.unlink(tmp)
                raise
        except OSError as exc:
            self._count("io_errors")
            log.warning("cache write failed for %s: %s", path, exc)

    def get_or_call(self, key: CacheKey, call: Callable[[], Any]) -> Any:
        raw = self.read(key)
        if raw is not None:
            try:
                value = json.loads(raw)
            except json.JSONDecodeError:
                self._count("io_errors")
                log.warning("corrupt cache entry %s; refetching", self.path_for(key))
            else:
                self._count("hits")
                return value
        self._count("misses")
        value = call()
        self.write(key, json.dumps(value, ensure_ascii=False).encode())
        return value


class CachedClassifier:
    def __init__(self, inner, cache: ResponseCache):
        self.inner = inner
        self.cache = cache
        self.backend_id = inner.backend_id

    def predict(self, texts: Sequence[str]) -> list[list[float]]:
        texts = list(texts)
        if not texts:
            return []
        key = CacheKey.for_request(self.backend_id, {"op": "predict", "texts": texts})
        return self.cache.get_or_call(key, lambda: self.inner.predict(texts))

    def __getattr__(self, name):
        return getattr(self.inner, name)


class CachedEmbedder:
    def __init__(self, inner, cache: ResponseCache):
        self.inner = inner
        self.cache = cache
        self.backend_id = inner.backend_id

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        texts = list(texts)
        if not texts:
            return []
        key = CacheKey.for_request(self.backend_id, {"op": "embed", "texts": texts})
        return self.cache.get_or_call(key, lambda: self.inner.embed(texts))

    def __getattr__(self, name):
        return getattr(self.inner, name)


class CachedLlm:
    """The prompt carries its template version, so it is part of the key along with temperature and seed."""

    def __init__(self, inner, cache: ResponseCache):
        self.inner = inner
        self.cache = cache
        self.backend_id = inner.backend_id

    def complete(self, prompt: str, temperature: float = 0.7, seed: int | None = None) -> str:
        key = CacheKey.for_request(self.backend_id, {"op": "complete", "prompt": prompt,
                                                    "temperature": temperature, "seed": seed})
        return self.cache.get_or_call(key, lambda: self.inner.complete(prompt, temperature=temperature, seed=seed))

    def __getattr__(self, name):
        return getattr(self.inner, name)
