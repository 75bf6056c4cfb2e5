import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import SENTIMENT
from helpers import random_system
from limelle.backends import MockClassifier, MockEmbedder, MockLlm
from limelle.domain import KernelMode
from limelle.errors import InvalidValue, LengthMismatch, NonFiniteInput, SingularSystem
from limelle.generation import GenerationPolicy, PromptSpec
from limelle.sampling import SamplingConfig
from limelle.surrogate import (DesignMatrix, ExplainConfig, build_design, explain, explain_detailed,
                               fit_weighted_ridge, make_instance, proximities, ridge_objective)
from oracles import ridge_augmented_lstsq, ridge_gradient_descent, ridge_normal_equations

seeds = st.integers(0, 2**32 - 1)
lams = st.sampled_from([0.0, 0.01, 1.0])


class Constant:
    def predict(self, texts):
        return [[0.25, 0.75] for _ in texts]


class TestDesign:
    def test_rejects_negative_weights(self):
        with pytest.raises(InvalidValue):
            DesignMatrix(np.ones((2, 1)), [0.1, 0.2], [1.0, -1.0])

    def test_rejects_all_zero_weights(self):
        with pytest.raises(InvalidValue):
            DesignMatrix(np.ones((2, 1)), [0.1, 0.2], [0.0, 0.0])

    def test_rejects_nan(self):
        with pytest.raises(NonFiniteInput):
            DesignMatrix(np.ones((2, 1)), [0.1, np.nan], [1.0, 1.0])

    def test_lengths(self):
        with pytest.raises(LengthMismatch):
            DesignMatrix(np.ones((3, 1)), [0.1, 0.2], [1.0, 1.0])

    def test_original_row_appended(self, instance, classifier, llm, embedder, explain_config):
        res = explain_detailed(instance, classifier, llm, embedder, explain_config)
        design = build_design(res.neighborhood, KernelMode.HYBRID, embedder)
        assert len(res.neighborhood) == 20 and design.n == 21
        assert design.Z[-1].tolist() == [1.0] * instance.d
        assert design.pi[-1] == 1.0
        assert design.y[-1] == instance.probs[instance.predicted_label]

    def test_proximities_are_kernel_values(self, instance, classifier, llm, embedder, explain_config):
        res = explain_detailed(instance, classifier, llm, embedder, explain_config)
        for mode in KernelMode:
            w = proximities(res.neighborhood, mode, embedder)
            assert len(w) == 20 and all(0 <= v <= 1 for v in w)


class TestRidge:
    def test_constant_target(self):
        rng = np.random.default_rng(0)
        Z = rng.integers(0, 2, size=(30, 5)).astype(float)
        fit = fit_weighted_ridge(DesignMatrix(Z, np.full(30, 0.4), rng.uniform(0.1, 1, 30)), 0.01)
        assert np.max(np.abs(fit.weights)) <= 1e-8
        assert fit.intercept == pytest.approx(0.4, abs=1e-6)

    def test_exact_interpolation(self):
        rng = np.random.default_rng(1)
        Z = rng.integers(0, 2, size=(12, 4)).astype(float)
        w_true, b_true = np.array([0.3, -0.2, 0.1, 0.05]), 0.4
        fit = fit_weighted_ridge(DesignMatrix(Z, Z @ w_true + b_true, rng.uniform(0.2, 1, 12)), 0.0)
        assert np.allclose(fit.weights, w_true, atol=1e-8, rtol=0)
        assert fit.intercept == pytest.approx(b_true, abs=1e-8)

    def test_small_system_matches_oracle(self):
        design = random_system(np.random.default_rng(2), 0.01, n_max=10, d_max=4)
        fit = fit_weighted_ridge(design, 0.01)
        w, b = ridge_normal_equations(design.Z, design.y, design.pi, 0.01)
        assert np.max(np.abs(np.array(fit.weights) - w)) <= 1e-8
        assert abs(fit.intercept - b) <= 1e-8

    def test_singular_without_penalty(self):
        Z = np.array([[1.0, 1.0], [0.0, 0.0], [1.0, 1.0]])
        with pytest.raises(SingularSystem):
            fit_weighted_ridge(DesignMatrix(Z, [0.1, 0.2, 0.3], [1, 1, 1]), 0.0)
        fit_weighted_ridge(DesignMatrix(Z, [0.1, 0.2, 0.3], [1, 1, 1]), 0.01)

    def test_rejects_negative_lambda(self):
        with pytest.raises(InvalidValue):
            fit_weighted_ridge(random_system(np.random.default_rng(3), 1.0), -1.0)

    def test_matches_gradient_descent_on_1000_systems(self):
        rng = np.random.default_rng(11)
        n, d = 12, 4
        S = 1000
        Z = rng.integers(0, 2, size=(S, n, d)).astype(float)
        y = rng.uniform(0, 1, size=(S, n))
        pi = rng.uniform(0.1, 1, size=(S, n))
        lam = rng.choice([0.01, 0.1, 1.0], size=S)
        # lambda = 0 systems need full column rank; give them an identity-like block
        lam[:100] = 0.0
        Z[:100, :d + 1] = np.vstack([np.eye(d), np.zeros((1, d))])
        gw, gb = ridge_gradient_descent(Z, y, pi, lam)
        for s in range(S):
            fit = fit_weighted_ridge(DesignMatrix(Z[s], y[s], pi[s]), float(lam[s]))
            assert np.max(np.abs(np.array(fit.weights) - gw[s])) <= 1e-6
            assert abs(fit.intercept - gb[s]) <= 1e-6

    @settings(max_examples=60, deadline=None)
    @given(seeds, lams)
    def test_matches_augmented_least_squares(self, seed, lam):
        design = random_system(np.random.default_rng(seed), lam, n_max=30, d_max=8)
        fit = fit_weighted_ridge(design, lam)
        w, b = ridge_augmented_lstsq(design.Z, design.y, design.pi, lam)
        assert np.allclose(fit.weights, w, atol=1e-7, rtol=0)
        assert fit.intercept == pytest.approx(b, abs=1e-7)

    @settings(max_examples=60, deadline=None)
    @given(seeds, st.floats(0.0, 5.0), st.floats(0.0, 5.0))
    def test_monotone_shrinkage(self, seed, l1, l2):
        lo, hi = sorted((l1, l2))
        design = random_system(np.random.default_rng(seed), max(lo, 1e-3), d_max=8)
        lo = max(lo, 1e-3)
        hi = max(hi, lo)
        assert np.linalg.norm(fit_weighted_ridge(design, lo).weights) >= \
            np.linalg.norm(fit_weighted_ridge(design, hi).weights) - 1e-12

    @settings(max_examples=60, deadline=None)
    @given(seeds, st.floats(0.1, 10.0), st.sampled_from([0.0, 0.01, 1.0]))
    def test_weight_scaling_covariance(self, seed, c, lam):
        design = random_system(np.random.default_rng(seed), lam, d_max=8)
        base = fit_weighted_ridge(design, lam)
        scaled = fit_weighted_ridge(DesignMatrix(design.Z, design.y, design.pi * c), lam * c)
        assert np.allclose(base.weights, scaled.weights, atol=1e-9, rtol=1e-7)
        assert base.intercept == pytest.approx(scaled.intercept, abs=1e-9, rel=1e-7)

    @settings(max_examples=40, deadline=None)
    @given(seeds, lams)
    def test_objective_optimality(self, seed, lam):
        design = random_system(np.random.default_rng(seed), lam, d_max=8)
        fit = fit_weighted_ridge(design, lam)
        w, b = np.array(fit.weights), fit.intercept
        best = ridge_objective(design, w, b, lam)
        for j in range(len(w) + 1):
            for step in (-1e-3, 1e-3):
                w2, b2 = w.copy(), b
                if j == 0:
                    b2 += step
                else:
                    w2[j - 1] += step
                assert ridge_objective(design, w2, b2, lam) >= best - 1e-15


class TestExplain:
    def test_planted_keyword_is_top(self, instance, classifier, llm, embedder, explain_config):
        exp = explain(instance, classifier, llm, embedder, explain_config)
        assert instance.tokens[exp.ranking()[0]].surface == "terrible"
        assert exp.method == "lime-llm" and exp.seed == 7
        assert exp.diagnostics.sample_count == 21

    def test_constant_classifier_gives_zero_scores(self, llm, embedder, explain_config):
        inst = make_instance("c", "nothing to see in this sentence at all", Constant(), label_names=SENTIMENT)
        exp = explain(inst, Constant(), llm, embedder, explain_config)
        assert max(abs(s) for s in exp.scores) <= 1e-6

    def test_deterministic(self, instance, classifier, llm, embedder, explain_config):
        a = explain(instance, classifier, llm, embedder, explain_config)
        b = explain(instance, classifier, MockLlm(llm.neutral_lexicon, llm.boundary_lexicon), MockEmbedder(),
                    explain_config)
        assert a.to_dict() == b.to_dict()

    def test_kernel_mode_changes_weights_not_generation(self, instance, classifier, llm, embedder, explain_config):
        from dataclasses import replace
        runs = {m: explain_detailed(instance, classifier, llm, embedder, replace(explain_config, kernel_mode=m))
                for m in KernelMode}
        texts = {m: [s.text for s in r.neighborhood.samples] for m, r in runs.items()}
        assert texts[KernelMode.BOW] == texts[KernelMode.HYBRID] == texts[KernelMode.EMBEDDING]

    def test_stage_is_tagged_on_errors(self, instance, classifier, embedder):
        class Silent:
            def complete(self, prompt, temperature=0.7, seed=None):
                return "no numbers here"

        cfg = ExplainConfig(PromptSpec("x", SENTIMENT), SamplingConfig(), GenerationPolicy(max_retries=0))
        with pytest.raises(Exception) as err:
            explain(instance, classifier, Silent(), embedder, cfg)
        assert err.value.stage == "generation"
        assert "[generation]" in str(err.value)
