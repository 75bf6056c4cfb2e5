"""Weighted ridge surrogate over binary mask vectors, and the end-to-end explainer."""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .domain import (BinaryMask, Diagnostics, Explanation, Instance, KernelMode, Neighborhood, Origin,
                     PerturbationHypothesis, SurrogateFit)
from .errors import InvalidValue, LengthMismatch, LimelleError, NonFiniteInput, SingularSystem
from .generation import GenerationPolicy, GenerationStats, PromptSpec, generate_neighborhood
from .kernel import DEFAULT_SIGMA, bow_cosine, combine, exponential_kernel, vector_cosine
from .sampling import SaliencyProfile, SamplingConfig, build_hypotheses, occlusion_saliency
from .tokenization import tokenize

DEFAULT_LAMBDA = 0.01
METHOD_TAG = "lime-llm"


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Rows ``Z`` (N x d, binary), targets ``y`` and sample weights ``pi``."""

    Z: np.ndarray
    y: np.ndarray
    pi: np.ndarray

    def __post_init__(self):
        Z = np.atleast_2d(np.asarray(self.Z, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        pi = np.asarray(self.pi, dtype=float).ravel()
        if not (np.isfinite(Z).all() and np.isfinite(y).all() and np.isfinite(pi).all()):
            raise NonFiniteInput("design contains non-finite values")
        if len(y) != Z.shape[0] or len(pi) != Z.shape[0]:
            raise LengthMismatch(f"design has {Z.shape[0]} rows, {len(y)} targets, {len(pi)} weights")
        if (pi < 0).any() or not (pi > 0).any():
            raise InvalidValue("sample weights must be nonnegative with at least one positive")
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "pi", pi)

    @property
    def n(self) -> int:
        return self.Z.shape[0]

    @property
    def d(self) -> int:
        return self.Z.shape[1]


def proximities(neighborhood: Neighborhood, mode: KernelMode = KernelMode.HYBRID, embedder=None,
                sigma: float = DEFAULT_SIGMA) -> list[float]:
    """Kernel weight of every sample relative to the original instance.

    Generated samples use the lexical/semantic blend selected by ``mode`` with one
    batched embedding request; deletion samples use the exponential kernel on
    bag-of-words cosine distance.
    """
    inst = neighborhood.instance
    samples = neighborhood.samples
    origins = {s.origin for s in samples}
    if len(origins) > 1:
        raise InvalidValue("cannot weight a neighborhood that mixes generated and deletion samples")
    if origins == {Origin.DELETION}:
        return [exponential_kernel(1.0 - bow_cosine(inst.tokens, tokenize(s.text)), sigma) for s in samples]

    mode = KernelMode(mode)
    bows = [None] * len(samples)
    embs = [None] * len(samples)
    if mode is not KernelMode.EMBEDDING:
        bows = [bow_cosine(inst.tokens, tokenize(s.text)) for s in samples]
    if mode is not KernelMode.BOW:
        if embedder is None:
            raise InvalidValue(f"kernel mode {mode.value} needs an embedder")
        vecs = embedder.embed([inst.text] + [s.text for s in samples])
        if len(vecs) != len(samples) + 1:
            raise LengthMismatch("embedder returned the wrong number of vectors")
        embs = [vector_cosine(vecs[0], v) for v in vecs[1:]]
    return [combine(b, e, mode) for b, e in zip(bows, embs)]


def build_design(neighborhood: Neighborhood, mode: KernelMode = KernelMode.HYBRID, embedder=None,
                 sigma: float = DEFAULT_SIGMA, weights: Sequence[float] | None = None) -> DesignMatrix:
    """One row per sample plus the original instance (all-ones mask, weight 1)."""
    if len(neighborhood) == 0:
        raise InvalidValue("neighborhood is empty")
    inst = neighborhood.instance
    pred = inst.predicted_label
    if weights is None:
        weights = proximities(neighborhood, mode, embedder, sigma)
    rows = [s.mask.bits for s in neighborhood.samples] + [BinaryMask.ones(inst.d).bits]
    y = [s.probs[pred] for s in neighborhood.samples] + [inst.probs[pred]]
    pi = list(weights) + [1.0]
    if any(not 0.0 <= v <= 1.0 for v in y):
        raise InvalidValue("targets must be probabilities")
    return DesignMatrix(np.array(rows, dtype=float), np.array(y), np.array(pi))


def _augmented(Z: np.ndarray) -> np.ndarray:
    return np.hstack([np.ones((Z.shape[0], 1)), Z])


def ridge_objective(design: DesignMatrix, weights: np.ndarray, intercept: float, lam: float) -> float:
    r = design.y - design.Z @ weights - intercept
    return float(np.sum(design.pi * r * r) + lam * np.dot(weights, weights))


def fit_weighted_ridge(design: DesignMatrix, lam: float = DEFAULT_LAMBDA) -> SurrogateFit:
    r"""Closed-form minimizer of :math:`\sum_i \pi_i (y_i - w \cdot z_i - b)^2 + \lambda \lVert w \rVert_2^2`.

    The intercept is not penalized. Solved through the weighted normal equations
    of the intercept-augmented design.
    """
    if not math.isfinite(lam):
        raise NonFiniteInput("lambda must be finite")
    if lam < 0:
        raise InvalidValue("lambda must be nonnegative")
    if design.n < 2:
        raise InvalidValue("need at least two rows")
    X = _augmented(design.Z)
    Xw = X * design.pi[:, None]
    A = X.T @ Xw
    rhs = Xw.T @ design.y
    penalty = np.full(X.shape[1], float(lam))
    penalty[0] = 0.0
    A[np.diag_indices_from(A)] += penalty
    if lam == 0 and np.linalg.matrix_rank(A) < A.shape[0]:
        raise SingularSystem("unregularized normal matrix is rank-deficient")
    try:
        beta = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from None
    b, w = float(beta[0]), beta[1:]
    resid = design.y - X @ beta
    sse = float(np.sum(design.pi * resid * resid))
    return SurrogateFit(tuple(w.tolist()), b, float(lam), sse, design.n)


@dataclass(frozen=True)
class ExplainConfig:
    prompt_spec: PromptSpec
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    generation: GenerationPolicy = field(default_factory=GenerationPolicy)
    kernel_mode: KernelMode = KernelMode.HYBRID
    lam: float = DEFAULT_LAMBDA


@dataclass
class ExplainResult:
    explanation: Explanation
    fit: SurrogateFit
    neighborhood: Neighborhood
    stats: GenerationStats
    saliency: SaliencyProfile
    hypotheses: list[PerturbationHypothesis]


@contextmanager
def stage(name: str):
    try:
        yield
    except LimelleError as exc:
        if exc.stage is None:
            exc.stage = name
        raise


def make_instance(id: str, text: str, classifier, rationale=None, label_names=None) -> Instance:
    """Tokenize ``text`` and attach the classifier's prediction for it."""
    (probs,) = classifier.predict([" ".join(text.split())])
    return Instance.create(id, text, probs, rationale=rationale, label_names=label_names)


def explanation_from_fit(instance: Instance, fit: SurrogateFit, method: str, seed: int, dropped: int = 0) -> Explanation:
    return Explanation(instance.id, fit.weights, instance.surfaces, method, seed,
                       Diagnostics(fit.weighted_sse, fit.sample_count, dropped))


def generate_for(instance: Instance, classifier, llm, config: ExplainConfig):
    """Saliency, hypotheses and neighborhood: everything upstream of the kernel."""
    with stage("saliency"):
        saliency = occlusion_saliency(instance, classifier)
    with stage("sampling"):
        hyps = build_hypotheses(instance, config.sampling, saliency)
    with stage("generation"):
        gen = generate_neighborhood(instance, hyps, llm, classifier, config.generation, config.prompt_spec,
                                    saliency=saliency, seed=config.sampling.seed)
    return saliency, hyps, gen


def fit_neighborhood(neighborhood: Neighborhood, embedder, mode: KernelMode, lam: float) -> tuple[Neighborhood, SurrogateFit]:
    with stage("kernel"):
        weights = proximities(neighborhood, mode, embedder)
        neighborhood = neighborhood.with_proximities(weights)
        design = build_design(neighborhood, mode, weights=weights)
    with stage("surrogate"):
        fit = fit_weighted_ridge(design, lam)
    return neighborhood, fit


def explain_detailed(instance: Instance, classifier, llm, embedder, config: ExplainConfig) -> ExplainResult:
    saliency, hyps, gen = generate_for(instance, classifier, llm, config)
    nbhd, fit = fit_neighborhood(gen.neighborhood, embedder, config.kernel_mode, config.lam)
    exp = explanation_from_fit(instance, fit, METHOD_TAG, config.sampling.seed, nbhd.dropped)
    return ExplainResult(exp, fit, nbhd, gen.stats, saliency, hyps)


def explain(instance: Instance, classifier, llm, embedder, config: ExplainConfig) -> Explanation:
    return explain_detailed(instance, classifier, llm, embedder, config).explanation
