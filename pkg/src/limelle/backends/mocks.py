"""Deterministic offline stand-ins for the classifier, LLM and embedder."""

from __future__ import annotations

import hashlib
import json
import re
from enum import Enum
from itertools import cycle
from typing import Mapping, Sequence

import numpy as np

from ..errors import MalformedPrompt

EMBED_DIM = 256


def _digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:16]


class OodMode(str, Enum):
    OFF = "off"
    TOKEN_COUNT_PENALTY = "token_count_penalty"


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


class MockClassifier:
    """Bag-of-words linear classifier: logits are summed per-token lexicon weights.

    With ``ood_mode=TOKEN_COUNT_PENALTY`` any text whose token count is not one of
    the registered reference counts gets the uniform distribution, standing in for
    a model that is unreliable on deletion-shortened input.
    """

    def __init__(self, lexicon: Mapping[str, Sequence[float]], class_count: int | None = None,
                 ood_mode: OodMode | str = OodMode.OFF, reference_counts: Sequence[int] = ()):
        if not lexicon:
            raise ValueError("lexicon must be non-empty")
        widths = {len(v) for v in lexicon.values()}
        if len(widths) != 1:
            raise ValueError("all lexicon entries need the same number of classes")
        self.class_count = class_count or widths.pop()
        self.lexicon = {k: np.asarray(v, dtype=float) for k, v in lexicon.items()}
        for v in self.lexicon.values():
            if len(v) != self.class_count:
                raise ValueError("lexicon width does not match class_count")
        self.ood_mode = OodMode(ood_mode)
        self.reference_counts = set(reference_counts)
        self.calls = 0
        self.backend_id = "mock-classifier:" + _digest(
            {"lexicon": {k: list(v) for k, v in lexicon.items()}, "ood": self.ood_mode.value})

    def register_reference(self, text: str) -> None:
        self.reference_counts.add(len(text.split()))

    def predict(self, texts: Sequence[str]) -> list[list[float]]:
        self.calls += 1
        out = []
        uniform = [1.0 / self.class_count] * self.class_count
        for text in texts:
            toks = text.split()
            if self.ood_mode is OodMode.TOKEN_COUNT_PENALTY and len(toks) not in self.reference_counts:
                out.append(list(uniform))
                continue
            logits = np.zeros(self.class_count)
            for t in toks:
                w = self.lexicon.get(t)
                if w is not None:
                    logits = logits + w
            out.append(softmax(logits).tolist())
        return out


_HYP_RE = re.compile(r"^(\d+)\. \[(neutral_infill|boundary_infill)\] target label: (.+)$")
_TEMPLATE_RE = re.compile(r"^\s+template: (.*)$")
_SLOT_RE = re.compile(r"^\[SLOT_\d+\]$")


class MockLlm:
    """Fills each ``[SLOT_k]`` from a word list, so anchors survive by construction.

    Neutral hypotheses draw from ``neutral_lexicon``; boundary hypotheses draw from
    ``boundary_lexicon[target label name]``. Each list is cycled, restarting per call.
    """

    def __init__(self, neutral_lexicon: Sequence[str], boundary_lexicon: Mapping[str, Sequence[str]]):
        if not neutral_lexicon:
            raise ValueError("neutral lexicon must be non-empty")
        self.neutral_lexicon = list(neutral_lexicon)
        self.boundary_lexicon = {k: list(v) for k, v in boundary_lexicon.items()}
        self.calls = 0
        self.backend_id = "mock-llm:" + _digest([self.neutral_lexicon, self.boundary_lexicon])

    def parse_templates(self, prompt: str) -> list[tuple[int, str, str, str]]:
        lines = prompt.splitlines()
        found = []
        for i, line in enumerate(lines):
            m = _HYP_RE.match(line)
            if not m:
                continue
            tm = _TEMPLATE_RE.match(lines[i + 1]) if i + 1 < len(lines) else None
            if tm is None:
                raise MalformedPrompt(f"hypothesis {m.group(1)} has no template line")
            found.append((int(m.group(1)), m.group(2), m.group(3).strip().strip('"'), tm.group(1)))
        if not found:
            raise MalformedPrompt("prompt contains no numbered templates")
        return found

    def complete(self, prompt: str, temperature: float = 0.7, seed: int | None = None) -> str:
        self.calls += 1
        pools = {"neutral": cycle(self.neutral_lexicon)}
        out = []
        for idx, strategy, label, template in self.parse_templates(prompt):
            if strategy == "neutral_infill":
                pool = pools["neutral"]
            else:
                if label not in self.boundary_lexicon:
                    raise MalformedPrompt(f"no boundary lexicon for label {label!r}")
                pool = pools.setdefault(label, cycle(self.boundary_lexicon[label]))
            words = [next(pool) if _SLOT_RE.match(w) else w for w in template.split()]
            out.append(f"{idx}: {' '.join(words)}")
        return "\n".join(out)


def hashed_index(surface: str, dim: int = EMBED_DIM) -> int:
    return int.from_bytes(hashlib.blake2b(surface.encode(), digest_size=8).digest(), "big") % dim


class MockEmbedder:
    """Hashed bag-of-words: counts per hashed token bucket, L2-normalized."""

    def __init__(self, dim: int = EMBED_DIM):
        self.dim = dim
        self.calls = 0
        self.backend_id = f"mock-embedder:hashed-bow-{dim}"

    def embed_one(self, text: str) -> np.ndarray:
        v = np.zeros(self.dim)
        for t in text.split():
            v[hashed_index(t, self.dim)] += 1.0
        n = np.linalg.norm(v)
        return v / n if n > 0 else v

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        self.calls += 1
        return [self.embed_one(t).tolist() for t in texts]
