"""Proximity weights between the original text and its perturbations."""

from __future__ import annotations

import math
from collections import Counter
from typing import Sequence

import numpy as np

from .domain import KernelMode, Token
from .errors import EmptyInput, InvalidValue, ZeroVector

DEFAULT_SIGMA = 0.75
HYBRID_BOW_SHARE = 0.5


def bow_vector(tokens: Sequence[Token]) -> Counter:
    return Counter(t.surface for t in tokens)


def bow_cosine(a: Sequence[Token], b: Sequence[Token]) -> float:
    if not a or not b:
        raise EmptyInput("bag-of-words cosine needs two non-empty token lists")
    ca, cb = bow_vector(a), bow_vector(b)
    # iterate the smaller vocabulary in sorted order so the sum is argument-order independent
    shared = sorted(set(ca) & set(cb))
    dot = math.fsum(ca[w] * cb[w] for w in shared)
    na = math.sqrt(math.fsum(c * c for c in ca.values()))
    nb = math.sqrt(math.fsum(c * c for c in cb.values()))
    return min(1.0, dot / (na * nb))


def vector_cosine(u: Sequence[float], v: Sequence[float]) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ZeroVector("embedding has zero norm")
    return float(np.clip(np.dot(u / nu, v / nv), -1.0, 1.0))


def embedding_cosine(a_text: str, b_text: str, embedder) -> float:
    va, vb = embedder.embed([a_text, b_text])
    return vector_cosine(va, vb)


def combine(bow: float | None, emb: float | None, mode: KernelMode, bow_share: float = HYBRID_BOW_SHARE) -> float:
    """Blend precomputed components; embedding cosine is clamped to [0, 1] first."""
    mode = KernelMode(mode)
    if mode is KernelMode.BOW:
        return bow
    emb = min(1.0, max(0.0, emb))
    if mode is KernelMode.EMBEDDING:
        return emb
    return bow_share * bow + (1.0 - bow_share) * emb


def hybrid_proximity(a_tokens: Sequence[Token], b_tokens: Sequence[Token], a_text: str, b_text: str,
                     mode: KernelMode, embedder=None) -> float:
    mode = KernelMode(mode)
    bow = bow_cosine(a_tokens, b_tokens) if mode is not KernelMode.EMBEDDING else None
    emb = None
    if mode is not KernelMode.BOW:
        if embedder is None:
            raise InvalidValue(f"kernel mode {mode.value} needs an embedder")
        emb = embedding_cosine(a_text, b_text, embedder)
    return combine(bow, emb, mode)


def exponential_kernel(cosine_distance: float, sigma: float = DEFAULT_SIGMA) -> float:
    if not sigma > 0:
        raise InvalidValue("sigma must be positive")
    return math.exp(-(cosine_distance ** 2) / sigma ** 2)
