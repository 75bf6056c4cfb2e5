"""Whitespace featurization, deletion rendering and masked templates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .domain import BinaryMask, Token
from .errors import EmptyInput

__all__ = ["Token", "tokenize", "canonical", "apply_deletion", "render_masked_template", "verify_anchors",
           "AnchorCheck", "slot_name"]


def tokenize(text: str) -> list[Token]:
    """Split on runs of Unicode whitespace; punctuation stays attached to words."""
    parts = text.split()
    if not parts:
        raise EmptyInput("text is empty or all whitespace")
    return [Token(s, i) for i, s in enumerate(parts)]


def canonical(text: str) -> str:
    return " ".join(text.split())


def apply_deletion(tokens: Sequence[Token], mask: BinaryMask) -> str:
    mask.check_length(len(tokens))
    return " ".join(t.surface for t, b in zip(tokens, mask.bits) if b)


def slot_name(k: int) -> str:
    return f"[SLOT_{k}]"


def render_masked_template(tokens: Sequence[Token], mask: BinaryMask) -> str:
    mask.check_length(len(tokens))
    out = []
    k = 0
    for t, b in zip(tokens, mask.bits):
        if b:
            out.append(t.surface)
        else:
            out.append(slot_name(k))
            k += 1
    return " ".join(out)


@dataclass(frozen=True)
class AnchorCheck:
    verified: bool
    candidate_tokens: list[Token]


def _is_subsequence(needle: Sequence[str], haystack: Sequence[str]) -> bool:
    it = iter(haystack)
    return all(any(h == n for h in it) for n in needle)


def verify_anchors(tokens: Sequence[Token], mask: BinaryMask, candidate: str) -> AnchorCheck:
    """Anchors must appear verbatim and in order; infills may change slot lengths."""
    mask.check_length(len(tokens))
    cand = tokenize(candidate)
    anchors = [t.surface for t, b in zip(tokens, mask.bits) if b]
    return AnchorCheck(_is_subsequence(anchors, [t.surface for t in cand]), cand)
