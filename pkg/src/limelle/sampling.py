"""Mask sampling, occlusion saliency and strategy assignment for one instance."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .domain import BinaryMask, Instance, InvalidValue, PerturbationHypothesis, Strategy
from .errors import ExhaustedMaskSpace
from .tokenization import apply_deletion

ATTEMPTS_PER_MASK = 50
COVERAGE_REDRAWS = 100


@dataclass(frozen=True)
class SamplingConfig:
    n_samples: int = 20
    boundary_fraction: float = 0.5
    max_masked_fraction: float = 0.5
    saliency_temperature: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 2:
            raise InvalidValue("n_samples must be >= 2")
        if not 0.0 < self.boundary_fraction < 1.0:
            raise InvalidValue("boundary_fraction must lie in (0, 1)")
        if not 0.0 < self.max_masked_fraction <= 1.0:
            raise InvalidValue("max_masked_fraction must lie in (0, 1]")
        if not self.saliency_temperature > 0:
            raise InvalidValue("saliency_temperature must be positive")

    @property
    def n_neutral(self) -> int:
        # guards against 20 * (1 - 0.3) == 14.000000000000002
        return math.ceil(self.n_samples * (1.0 - self.boundary_fraction) - 1e-9)

    @property
    def n_boundary(self) -> int:
        return self.n_samples - self.n_neutral


@dataclass(frozen=True)
class SaliencyProfile:
    scores: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "scores", tuple(float(s) for s in self.scores))
        if not all(math.isfinite(s) for s in self.scores):
            raise InvalidValue("saliency scores must be finite")

    def __len__(self) -> int:
        return len(self.scores)

    @property
    def top_index(self) -> int:
        return min(range(len(self.scores)), key=lambda j: (-self.scores[j], j))


def occlusion_saliency(instance: Instance, classifier) -> SaliencyProfile:
    """Drop in predicted-class probability when each single token is deleted (one batched call)."""
    d = instance.d
    texts = [apply_deletion(instance.tokens, BinaryMask(tuple(int(i != j) for i in range(d)))) for j in range(d)]
    probs = classifier.predict(texts)
    if len(probs) != d:
        raise InvalidValue("classifier returned the wrong number of predictions")
    pred = instance.predicted_label
    base = instance.probs[pred]
    return SaliencyProfile(tuple(base - p[pred] for p in probs))


def max_masked(d: int, max_masked_fraction: float) -> int:
    """Largest k allowed; never masks every token."""
    return min(d - 1, max(1, math.floor(d * max_masked_fraction + 1e-12)))


def admissible_count(d: int, kmax: int) -> int:
    return sum(math.comb(d, k) for k in range(1, kmax + 1))


def selection_probs(bias: SaliencyProfile | None, d: int, temperature: float = 1.0) -> np.ndarray | None:
    if bias is None:
        return None
    if len(bias) != d:
        raise InvalidValue(f"saliency has {len(bias)} entries for {d} tokens")
    z = np.asarray(bias.scores) / temperature
    e = np.exp(z - z.max())
    return e / e.sum()


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed % 2**64)


def _draw(rng: np.random.Generator, d: int, count: int, kmax: int, p: np.ndarray | None,
          exclude: set[BinaryMask]) -> list[BinaryMask]:
    if count > admissible_count(d, kmax) - len(exclude):
        raise ExhaustedMaskSpace(f"cannot draw {count} more distinct masks for d={d}, kmax={kmax}")
    seen = set(exclude)
    out: list[BinaryMask] = []
    budget = ATTEMPTS_PER_MASK * count
    while len(out) < count:
        if budget == 0:
            raise ExhaustedMaskSpace(f"found only {len(out)} of {count} distinct masks within the attempt budget")
        budget -= 1
        k = int(rng.integers(1, kmax + 1))
        masked = rng.choice(d, size=k, replace=False, p=p)
        bits = np.ones(d, dtype=int)
        bits[masked] = 0
        mask = BinaryMask(tuple(bits.tolist()))
        if mask not in seen:
            seen.add(mask)
            out.append(mask)
    return out


def sample_masks(d: int, count: int, rng_seed: int, max_masked_fraction: float = 0.5,
                 bias: SaliencyProfile | None = None, temperature: float = 1.0) -> list[BinaryMask]:
    """Pairwise-distinct masks with k ~ U{1..kmax} masked positions each.

    Positions are drawn without replacement, uniformly or with probability
    proportional to ``softmax(bias / temperature)``.
    """
    if count < 1:
        raise InvalidValue("count must be >= 1")
    if d < 2:
        raise InvalidValue("need at least 2 tokens to mask")
    rng = _rng(rng_seed)
    return _draw(rng, d, count, max_masked(d, max_masked_fraction), selection_probs(bias, d, temperature), set())


def counterfactual_label(probs: Sequence[float], predicted: int) -> int:
    """Runner-up class: the most probable class other than the prediction (lowest index on ties)."""
    others = [c for c in range(len(probs)) if c != predicted]
    return min(others, key=lambda c: (-probs[c], c))


def build_hypotheses(instance: Instance, config: SamplingConfig,
                     saliency: SaliencyProfile | None) -> list[PerturbationHypothesis]:
    """Neutral hypotheses (unbiased masks) followed by boundary hypotheses (saliency-biased masks)."""
    d = instance.d
    if d < 2:
        raise InvalidValue("instance needs at least 2 tokens")
    kmax = max_masked(d, config.max_masked_fraction)
    n = config.n_samples
    if n > admissible_count(d, kmax):
        raise ExhaustedMaskSpace(f"{n} distinct masks requested but only {admissible_count(d, kmax)} exist for d={d}")
    pred = instance.predicted_label
    target = counterfactual_label(instance.probs, pred)
    p_bias = selection_probs(saliency, d, config.saliency_temperature)
    rng = _rng(config.seed)

    for _ in range(COVERAGE_REDRAWS):
        neutral = _draw(rng, d, config.n_neutral, kmax, None, set())
        boundary = _draw(rng, d, config.n_boundary, kmax, p_bias, set(neutral))
        masks = neutral + boundary
        if n < d or all(any(m.bits[j] == 0 for m in masks) for j in range(d)):
            break

    return ([PerturbationHypothesis(m, Strategy.NEUTRAL, pred) for m in neutral]
            + [PerturbationHypothesis(m, Strategy.BOUNDARY, target) for m in boundary])
