"""Standard LIME: random token deletion neighborhoods fitted with the same surrogate."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .domain import BinaryMask, Explanation, Instance, InvalidValue, Neighborhood, Origin, PerturbationSample
from .kernel import DEFAULT_SIGMA
from .surrogate import DEFAULT_LAMBDA, build_design, explanation_from_fit, fit_weighted_ridge, stage
from .tokenization import apply_deletion

METHOD_TAG = "lime-standard"


@dataclass(frozen=True)
class LimeConfig:
    n_samples: int = 1000
    sigma: float = DEFAULT_SIGMA
    lam: float = DEFAULT_LAMBDA
    seed: int = 0
    exhaustive: bool = False

    def __post_init__(self):
        if self.n_samples < 2:
            raise InvalidValue("n_samples must be >= 2")
        if not self.sigma > 0:
            raise InvalidValue("sigma must be positive")


def deletion_masks(d: int, n: int, seed: int) -> list[BinaryMask]:
    """Reference-LIME sampling: k ~ U{1..d-1} tokens removed uniformly at random; repeats allowed."""
    rng = np.random.default_rng(seed % 2**64)
    out = []
    for _ in range(n):
        k = int(rng.integers(1, d))
        bits = np.ones(d, dtype=int)
        bits[rng.choice(d, size=k, replace=False)] = 0
        out.append(BinaryMask(tuple(bits.tolist())))
    return out


def all_deletion_masks(d: int) -> list[BinaryMask]:
    """Every mask except all-kept and all-deleted (2^d - 2 of them)."""
    return [BinaryMask(bits) for bits in itertools.product((1, 0), repeat=d) if 0 < sum(bits) < d]


def deletion_neighborhood(instance: Instance, classifier, masks: list[BinaryMask]) -> Neighborhood:
    texts = [apply_deletion(instance.tokens, m) for m in masks]
    probs = classifier.predict(texts)
    samples = tuple(PerturbationSample(hypothesis=None, mask=m, text=t, anchor_verified=False,
                                       probs=tuple(p), origin=Origin.DELETION)
                    for m, t, p in zip(masks, texts, probs))
    return Neighborhood(instance, samples)


def explain_lime(instance: Instance, classifier, config: LimeConfig = LimeConfig()) -> Explanation:
    if instance.d < 2:
        raise InvalidValue("standard LIME needs at least 2 tokens")
    with stage("sampling"):
        masks = (all_deletion_masks(instance.d) if config.exhaustive
                 else deletion_masks(instance.d, config.n_samples, config.seed))
    with stage("classifier"):
        nbhd = deletion_neighborhood(instance, classifier, masks)
    with stage("kernel"):
        design = build_design(nbhd, sigma=config.sigma)
    with stage("surrogate"):
        fit = fit_weighted_ridge(design, config.lam)
    return explanation_from_fit(instance, fit, METHOD_TAG, config.seed)
