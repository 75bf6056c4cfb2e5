import math

import pytest
from hypothesis import given, strategies as st

from limelle.backends import MockEmbedder
from limelle.backends.mocks import hashed_index
from limelle.domain import KernelMode
from limelle.errors import EmptyInput, ZeroVector
from limelle.kernel import (DEFAULT_SIGMA, bow_cosine, combine, embedding_cosine, exponential_kernel,
                            hybrid_proximity, vector_cosine)
from limelle.synthetic import collision_free
from limelle.tokenization import tokenize
from oracles import hashed_bow_cosine

EMB = MockEmbedder()
VOCAB = collision_free(("alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta", "iota", "kappa"))
sentence = st.lists(st.sampled_from(VOCAB), min_size=1, max_size=8).map(" ".join)


def toks(text):
    return tokenize(text)


class TestBow:
    def test_identity(self):
        assert bow_cosine(toks("a b c"), toks("a b c")) == 1.0

    def test_disjoint(self):
        assert bow_cosine(toks("a b"), toks("c d")) == 0.0

    def test_half_overlap(self):
        assert bow_cosine(toks("x y"), toks("x z")) == pytest.approx(0.5)

    def test_counts(self):
        assert bow_cosine(toks("a a b"), toks("a b")) == pytest.approx(3 / (math.sqrt(5) * math.sqrt(2)))

    def test_empty(self):
        with pytest.raises(EmptyInput):
            bow_cosine([], toks("a"))


class TestEmbedding:
    def test_identity(self):
        assert embedding_cosine("the film was bad", "the film was bad", EMB) == pytest.approx(1.0, abs=1e-6)

    def test_disjoint_curated_vocab(self):
        assert len(VOCAB) >= 6
        assert embedding_cosine(" ".join(VOCAB[:3]), " ".join(VOCAB[3:6]), EMB) == 0.0

    def test_half_overlap_matches_hashed_formula(self):
        a, b = f"{VOCAB[0]} {VOCAB[1]}", f"{VOCAB[0]} {VOCAB[2]}"
        ca = {hashed_index(w): 1 for w in a.split()}
        cb = {hashed_index(w): 1 for w in b.split()}
        value = embedding_cosine(a, b, EMB)
        assert 0 < value < 1
        assert value == pytest.approx(hashed_bow_cosine(ca, cb), abs=1e-12)

    def test_repeated_token(self):
        a, b = f"{VOCAB[0]} {VOCAB[0]} {VOCAB[1]}", f"{VOCAB[0]} {VOCAB[1]}"
        expected = hashed_bow_cosine({hashed_index(VOCAB[0]): 2, hashed_index(VOCAB[1]): 1},
                                     {hashed_index(VOCAB[0]): 1, hashed_index(VOCAB[1]): 1})
        assert embedding_cosine(a, b, EMB) == pytest.approx(expected, abs=1e-12)

    def test_zero_vector(self):
        with pytest.raises(ZeroVector):
            vector_cosine([0.0, 0.0], [1.0, 0.0])


class TestHybrid:
    @pytest.mark.parametrize("mode", list(KernelMode))
    def test_self_proximity(self, mode):
        t = "the movie was bad"
        assert hybrid_proximity(toks(t), toks(t), t, t, mode, EMB) == pytest.approx(1.0, abs=1e-12)

    def test_mean(self):
        assert combine(0.6, 0.8, KernelMode.HYBRID) == pytest.approx(0.7)

    def test_negative_embedding_clamped(self):
        assert combine(None, -0.2, KernelMode.EMBEDDING) == 0.0
        assert combine(0.4, -0.2, KernelMode.HYBRID) == pytest.approx(0.2)

    @given(sentence, sentence, st.sampled_from(list(KernelMode)))
    def test_symmetric_and_bounded(self, a, b, mode):
        ab = hybrid_proximity(toks(a), toks(b), a, b, mode, EMB)
        ba = hybrid_proximity(toks(b), toks(a), b, a, mode, EMB)
        assert abs(ab - ba) <= 1e-12
        assert 0.0 <= ab <= 1.0

    @given(sentence, sentence)
    def test_hybrid_is_midpoint(self, a, b):
        bow = hybrid_proximity(toks(a), toks(b), a, b, KernelMode.BOW, EMB)
        emb = hybrid_proximity(toks(a), toks(b), a, b, KernelMode.EMBEDDING, EMB)
        hyb = hybrid_proximity(toks(a), toks(b), a, b, KernelMode.HYBRID, EMB)
        assert min(bow, emb) - 1e-12 <= hyb <= max(bow, emb) + 1e-12
        assert hyb == pytest.approx((bow + emb) / 2, abs=1e-12)


class TestExponential:
    def test_identity(self):
        assert exponential_kernel(0.0) == 1.0

    def test_default_width(self):
        assert DEFAULT_SIGMA == 0.75
        assert exponential_kernel(0.75) == pytest.approx(math.exp(-1), abs=1e-12)
        assert exponential_kernel(0.75, 0.75) == pytest.approx(0.3679, abs=1e-4)

    def test_bad_sigma(self):
        with pytest.raises(ValueError):
            exponential_kernel(0.5, 0.0)
