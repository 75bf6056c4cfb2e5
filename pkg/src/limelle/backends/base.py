"""Contracts for the three external dependencies."""

from __future__ import annotations

import math
from typing import Protocol, Sequence, runtime_checkable

from ..errors import BackendError

PROB_TOL = 1e-6


@runtime_checkable
class ClassifierBackend(Protocol):
    backend_id: str

    def predict(self, texts: Sequence[str]) -> list[list[float]]: ...


@runtime_checkable
class LlmBackend(Protocol):
    backend_id: str

    def complete(self, prompt: str, temperature: float = 0.7, seed: int | None = None) -> str: ...


@runtime_checkable
class EmbeddingBackend(Protocol):
    backend_id: str

    def embed(self, texts: Sequence[str]) -> list[list[float]]: ...


def check_probability_batch(probs, n: int, source: str) -> list[list[float]]:
    if not isinstance(probs, list) or len(probs) != n:
        raise BackendError(f"{source}: expected {n} probability vectors")
    out = []
    width = None
    for row in probs:
        if not isinstance(row, list) or not row:
            raise BackendError(f"{source}: malformed probability vector")
        row = [float(p) for p in row]
        if width is None:
            width = len(row)
        if len(row) != width or not all(math.isfinite(p) for p in row) or abs(math.fsum(row) - 1.0) > PROB_TOL:
            raise BackendError(f"{source}: probability vector invalid or not normalized")
        out.append(row)
    return out


def check_embedding_batch(vectors, n: int, source: str) -> list[list[float]]:
    if not isinstance(vectors, list) or len(vectors) != n:
        raise BackendError(f"{source}: expected {n} embeddings")
    out = []
    for v in vectors:
        v = [float(x) for x in v]
        if out and len(v) != len(out[0]):
            raise BackendError(f"{source}: inconsistent embedding dimension")
        if not all(math.isfinite(x) for x in v):
            raise BackendError(f"{source}: non-finite embedding entry")
        out.append(v)
    return out
