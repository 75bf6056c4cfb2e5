"""Shared immutable value types.

Every type validates its invariants in ``__post_init__`` so an invalid value
cannot be built through the public constructors. ``to_dict``/``from_dict``
give the JSON form used by the on-disk JSONL files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Iterable, Sequence

from .errors import InvalidValue, LengthMismatch

PROB_TOL = 1e-6


def _check_probs(probs: Sequence[float], what: str) -> None:
    if len(probs) < 2:
        raise InvalidValue(f"{what}: need at least 2 classes, got {len(probs)}")
    if not all(math.isfinite(p) and p >= -PROB_TOL for p in probs):
        raise InvalidValue(f"{what}: probabilities must be finite and nonnegative")
    total = math.fsum(probs)
    if abs(total - 1.0) > PROB_TOL:
        raise InvalidValue(f"{what}: probabilities sum to {total!r}, expected 1")


def _check_bits(bits: Sequence[int], what: str) -> tuple[int, ...]:
    out = tuple(int(b) for b in bits)
    if any(b not in (0, 1) for b in out):
        raise InvalidValue(f"{what}: bits must be 0 or 1")
    return out


def argmax(values: Sequence[float]) -> int:
    """Index of the largest value; first index wins ties."""
    best = 0
    for i, v in enumerate(values):
        if v > values[best]:
            best = i
    return best


@dataclass(frozen=True)
class Token:
    surface: str
    index: int

    def __post_init__(self):
        if not self.surface or any(ch.isspace() for ch in self.surface):
            raise InvalidValue(f"token surface must be non-empty without whitespace: {self.surface!r}")
        if self.index < 0:
            raise InvalidValue("token index must be nonnegative")


@dataclass(frozen=True)
class BinaryMask:
    """Per-token keep (1) / mask (0) bits."""

    bits: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "bits", _check_bits(self.bits, "BinaryMask"))

    def __len__(self) -> int:
        return len(self.bits)

    @classmethod
    def from_string(cls, s: str) -> "BinaryMask":
        return cls(tuple(int(c) for c in s))

    @classmethod
    def ones(cls, d: int) -> "BinaryMask":
        return cls((1,) * d)

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)

    @property
    def masked_positions(self) -> tuple[int, ...]:
        return tuple(i for i, b in enumerate(self.bits) if b == 0)

    @property
    def anchor_positions(self) -> tuple[int, ...]:
        return tuple(i for i, b in enumerate(self.bits) if b == 1)

    @property
    def is_degenerate(self) -> bool:
        return all(self.bits) or not any(self.bits)

    def check_length(self, d: int) -> None:
        if len(self.bits) != d:
            raise LengthMismatch(f"mask has {len(self.bits)} bits, expected {d}")


@dataclass(frozen=True)
class BinaryRationale:
    bits: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "bits", _check_bits(self.bits, "BinaryRationale"))

    def __len__(self) -> int:
        return len(self.bits)

    @property
    def positives(self) -> int:
        return sum(self.bits)

    @property
    def is_degenerate(self) -> bool:
        return self.positives in (0, len(self.bits))


class Strategy(str, Enum):
    NEUTRAL = "neutral_infill"
    BOUNDARY = "boundary_infill"


class Origin(str, Enum):
    GENERATED = "generated"
    DELETION = "deletion_baseline"


class KernelMode(str, Enum):
    BOW = "bow"
    EMBEDDING = "embedding"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class Instance:
    id: str
    text: str
    tokens: tuple[Token, ...]
    probs: tuple[float, ...]
    rationale: BinaryRationale | None = None
    label_names: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        if not self.tokens:
            raise InvalidValue(f"instance {self.id!r} has no tokens")
        if [t.index for t in self.tokens] != list(range(len(self.tokens))):
            raise InvalidValue("token indices must be 0..d-1 in order")
        if " ".join(t.surface for t in self.tokens) != " ".join(self.text.split()):
            raise InvalidValue(f"tokens of instance {self.id!r} do not reproduce its text")
        _check_probs(self.probs, f"instance {self.id!r}")
        if self.rationale is not None and len(self.rationale) != len(self.tokens):
            raise LengthMismatch(
                f"instance {self.id!r}: rationale has {len(self.rationale)} bits for {len(self.tokens)} tokens"
            )
        if self.label_names is not None:
            object.__setattr__(self, "label_names", tuple(self.label_names))
            if len(self.label_names) != len(self.probs):
                raise LengthMismatch(f"instance {self.id!r}: {len(self.label_names)} label names for {len(self.probs)} classes")

    @classmethod
    def create(cls, id: str, text: str, probs: Sequence[float], rationale=None, label_names=None) -> "Instance":
        from .tokenization import tokenize

        if rationale is not None and not isinstance(rationale, BinaryRationale):
            rationale = BinaryRationale(tuple(rationale))
        return cls(id=id, text=text, tokens=tuple(tokenize(text)), probs=tuple(probs),
                   rationale=rationale, label_names=label_names)

    @property
    def d(self) -> int:
        return len(self.tokens)

    @property
    def class_count(self) -> int:
        return len(self.probs)

    @property
    def predicted_label(self) -> int:
        return argmax(self.probs)

    @property
    def surfaces(self) -> tuple[str, ...]:
        return tuple(t.surface for t in self.tokens)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"id": self.id, "text": self.text, "probs": list(self.probs)}
        if self.rationale is not None:
            out["rationale"] = list(self.rationale.bits)
        if self.label_names is not None:
            out["label_names"] = list(self.label_names)
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Instance":
        return cls.create(data["id"], data["text"], data["probs"], data.get("rationale"), data.get("label_names"))


@dataclass(frozen=True)
class PerturbationHypothesis:
    mask: BinaryMask
    strategy: Strategy
    target_label: int

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if self.mask.is_degenerate:
            raise InvalidValue(f"hypothesis mask {self.mask} must keep and mask at least one token each")
        if self.target_label < 0:
            raise InvalidValue("target_label must be a class index")

    def check_against(self, instance: Instance) -> None:
        self.mask.check_length(instance.d)
        if self.target_label >= instance.class_count:
            raise InvalidValue(f"target_label {self.target_label} out of range")
        pred = instance.predicted_label
        if self.strategy is Strategy.NEUTRAL and self.target_label != pred:
            raise InvalidValue("neutral infill must target the predicted label")
        if self.strategy is Strategy.BOUNDARY and self.target_label == pred:
            raise InvalidValue("boundary infill must target a label other than the predicted one")

    def to_dict(self) -> dict[str, Any]:
        return {"mask": str(self.mask), "strategy": self.strategy.value, "target_label": self.target_label}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PerturbationHypothesis":
        return cls(BinaryMask.from_string(data["mask"]), Strategy(data["strategy"]), int(data["target_label"]))


@dataclass(frozen=True)
class PerturbationSample:
    """One neighborhood row. ``proximity`` stays None until a kernel has weighted it."""

    hypothesis: PerturbationHypothesis | None
    mask: BinaryMask
    text: str
    anchor_verified: bool
    probs: tuple[float, ...]
    origin: Origin = Origin.GENERATED
    proximity: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        object.__setattr__(self, "origin", Origin(self.origin))
        _check_probs(self.probs, "sample")
        if self.hypothesis is not None and self.hypothesis.mask != self.mask:
            raise InvalidValue("sample mask differs from its hypothesis mask")
        if self.origin is Origin.GENERATED:
            if self.hypothesis is None:
                raise InvalidValue("generated samples carry their hypothesis")
            if not self.anchor_verified:
                raise InvalidValue("generated samples must have verified anchors")
        if self.proximity is not None and not (0.0 <= self.proximity <= 1.0):
            raise InvalidValue(f"proximity {self.proximity} outside [0, 1]")

    def to_dict(self) -> dict[str, Any]:
        return {
            "hypothesis": None if self.hypothesis is None else self.hypothesis.to_dict(),
            "mask": str(self.mask),
            "text": self.text,
            "anchor_verified": self.anchor_verified,
            "probs": list(self.probs),
            "origin": self.origin.value,
            "proximity": self.proximity,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PerturbationSample":
        hyp = data.get("hypothesis")
        return cls(
            hypothesis=None if hyp is None else PerturbationHypothesis.from_dict(hyp),
            mask=BinaryMask.from_string(data["mask"]),
            text=data["text"],
            anchor_verified=bool(data["anchor_verified"]),
            probs=tuple(data["probs"]),
            origin=Origin(data["origin"]),
            proximity=data.get("proximity"),
        )


@dataclass(frozen=True)
class Neighborhood:
    instance: Instance
    samples: tuple[PerturbationSample, ...]
    dropped: int = 0

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        if self.dropped < 0:
            raise InvalidValue("dropped must be nonnegative")
        seen: set[BinaryMask] = set()
        for s in self.samples:
            s.mask.check_length(self.instance.d)
            if len(s.probs) != self.instance.class_count:
                raise LengthMismatch("sample probability vector has the wrong class count")
            if s.origin is Origin.GENERATED:
                s.hypothesis.check_against(self.instance)
                if s.mask in seen:
                    raise InvalidValue(f"duplicate mask {s.mask} in generated neighborhood")
                seen.add(s.mask)

    def __len__(self) -> int:
        return len(self.samples)

    def with_proximities(self, values: Iterable[float]) -> "Neighborhood":
        values = list(values)
        if len(values) != len(self.samples):
            raise LengthMismatch("one proximity per sample required")
        samples = tuple(replace(s, proximity=float(v)) for s, v in zip(self.samples, values))
        return replace(self, samples=samples)

    def to_dict(self) -> dict[str, Any]:
        return {"instance": self.instance.to_dict(), "samples": [s.to_dict() for s in self.samples],
                "dropped": self.dropped}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Neighborhood":
        return cls(Instance.from_dict(data["instance"]),
                   tuple(PerturbationSample.from_dict(s) for s in data["samples"]), int(data["dropped"]))


@dataclass(frozen=True)
class SurrogateFit:
    weights: tuple[float, ...]
    intercept: float
    lam: float
    weighted_sse: float
    sample_count: int

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if not all(math.isfinite(w) for w in self.weights) or not math.isfinite(self.intercept):
            raise InvalidValue("surrogate weights must be finite")
        if not math.isfinite(self.weighted_sse) or self.weighted_sse < 0:
            raise InvalidValue("weighted_sse must be finite and nonnegative")
        if self.lam < 0:
            raise InvalidValue("lambda must be nonnegative")

    def to_dict(self) -> dict[str, Any]:
        return {"weights": list(self.weights), "intercept": self.intercept, "lambda": self.lam,
                "weighted_sse": self.weighted_sse, "sample_count": self.sample_count}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SurrogateFit":
        return cls(tuple(data["weights"]), float(data["intercept"]), float(data["lambda"]),
                   float(data["weighted_sse"]), int(data["sample_count"]))


@dataclass(frozen=True)
class Diagnostics:
    weighted_sse: float
    sample_count: int
    dropped: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {"weighted_sse": self.weighted_sse, "sample_count": self.sample_count, "dropped": self.dropped}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Diagnostics":
        return cls(float(data["weighted_sse"]), int(data["sample_count"]), int(data.get("dropped", 0)))


@dataclass(frozen=True)
class Explanation:
    instance_id: str
    scores: tuple[float, ...]
    tokens: tuple[str, ...]
    method: str
    seed: int
    diagnostics: Diagnostics = field(default_factory=lambda: Diagnostics(0.0, 0, 0))

    def __post_init__(self):
        object.__setattr__(self, "scores", tuple(float(s) for s in self.scores))
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if len(self.scores) != len(self.tokens):
            raise LengthMismatch(f"{len(self.scores)} scores for {len(self.tokens)} tokens")
        if not all(math.isfinite(s) for s in self.scores):
            raise InvalidValue("attribution scores must be finite")

    def ranking(self) -> list[int]:
        """Token indices from most to least supportive; ties go to the lower index."""
        return sorted(range(len(self.scores)), key=lambda j: (-self.scores[j], j))

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.instance_id,
            "method": self.method,
            "seed": self.seed,
            "scores": list(self.scores),
            "tokens": list(self.tokens),
            "diagnostics": self.diagnostics.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Explanation":
        return cls(
            instance_id=data["id"],
            scores=tuple(data["scores"]),
            tokens=tuple(data["tokens"]),
            method=data["method"],
            seed=int(data["seed"]),
            diagnostics=Diagnostics.from_dict(data["diagnostics"]),
        )
