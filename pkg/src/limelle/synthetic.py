"""Planted-keyword synthetic suite used by the acceptance tests and experiment scripts.

Each instance is a sequence of neutral filler words with one planted keyword whose
lexicon weight decides the class. The rationale marks the keyword. Counter-label
words used by the mock infiller carry a weaker weight than keywords, so a boundary
infill of a filler slot nudges the prediction while replacing the keyword flips it.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .backends.mocks import EMBED_DIM, MockClassifier, MockEmbedder, MockLlm, OodMode, hashed_index
from .baselines import LimeConfig, explain_lime
from .evaluation import evaluate
from .generation import GenerationPolicy, PromptSpec
from .sampling import SamplingConfig
from .surrogate import ExplainConfig, explain_detailed, make_instance

LABELS = ("positive", "negative")
SUITE_SPEC_DESCRIPTION = "Short sentences whose sentiment is carried by one adjective."
KEYWORD_WEIGHT = 3.0
# below KEYWORD_WEIGHT / 7 (the most slots a d=15 mask can open), so stacked infills never outweigh the keyword
COUNTER_WEIGHT = 0.3

POSITIVE_KEYWORDS = ("excellent", "wonderful", "brilliant", "superb", "delightful")
NEGATIVE_KEYWORDS = ("terrible", "awful", "dreadful", "horrible", "atrocious")
# boundary infill vocabulary, keyed by the label the infill pushes toward
COUNTER_WORDS = {"positive": ("nice", "pleasant", "fine"), "negative": ("dull", "weak", "poor")}
NEUTRAL_FILL = ("thing", "item", "part", "piece", "bit")

_FILLER_POOL = (
    "the", "a", "movie", "film", "was", "is", "and", "of", "to", "in", "it", "this", "that", "plot", "actor",
    "scene", "story", "with", "for", "on", "at", "by", "from", "every", "some", "many", "director", "music",
    "ending", "script", "camera", "cast", "role", "screen", "night", "day", "year", "house", "city", "road",
    "window", "door", "table", "chair", "river", "tree", "sky", "light", "voice", "song", "letter", "page",
    "chapter", "book", "writer", "reader", "audience", "theater", "ticket", "seat", "hour", "minute", "moment",
    "friend", "family", "child", "mother", "father", "sister", "brother", "teacher", "student", "doctor",
    "village", "garden", "street", "bridge", "train", "station", "market", "office", "team", "game", "player",
)


def collision_free(words, taken: set[int] | None = None, dim: int = EMBED_DIM) -> tuple[str, ...]:
    """Keep words whose hashed-embedding bucket is not already used."""
    taken = set() if taken is None else taken
    out = []
    for w in words:
        b = hashed_index(w, dim)
        if b not in taken:
            taken.add(b)
            out.append(w)
    return tuple(out)


def _vocabulary():
    taken: set[int] = set()
    pos = collision_free(POSITIVE_KEYWORDS, taken)
    neg = collision_free(NEGATIVE_KEYWORDS, taken)
    counter = {k: collision_free(v, taken) for k, v in COUNTER_WORDS.items()}
    neutral = collision_free(NEUTRAL_FILL, taken)
    fillers = collision_free(_FILLER_POOL, taken)
    return pos, neg, counter, neutral, fillers


@dataclass
class SyntheticRecord:
    id: str
    text: str
    rationale: tuple[int, ...]
    keyword_index: int
    label_names: tuple[str, ...] = LABELS

    def to_dict(self) -> dict:
        return {"id": self.id, "text": self.text, "rationale": list(self.rationale),
                "label_names": list(self.label_names)}


@dataclass
class SyntheticSuite:
    records: list[SyntheticRecord]
    lexicon: dict[str, tuple[float, float]]
    neutral_lexicon: tuple[str, ...]
    boundary_lexicon: dict[str, tuple[str, ...]]
    filler_weights: dict[str, tuple[float, float]] = field(default_factory=dict)

    def classifier(self, ood: bool = False, record: SyntheticRecord | None = None) -> MockClassifier:
        mode = OodMode.TOKEN_COUNT_PENALTY if ood else OodMode.OFF
        refs = [len(record.text.split())] if record is not None else []
        return MockClassifier({**self.filler_weights, **self.lexicon}, ood_mode=mode, reference_counts=refs)

    def llm(self) -> MockLlm:
        return MockLlm(self.neutral_lexicon, self.boundary_lexicon)

    def embedder(self) -> MockEmbedder:
        return MockEmbedder()

    def run_config(self, ood: bool = False, method: str = "lime-llm") -> dict:
        """A run config whose mock backends reproduce ``classifier``, ``llm`` and ``embedder``."""
        lexicon = {**self.filler_weights, **self.lexicon}
        return {
            "method": method,
            "prompt_spec": {"dataset_description": SUITE_SPEC_DESCRIPTION,
                            "label_names": list(LABELS)},
            "backends": {
                "classifier": {"kind": "mock", "lexicon": {w: list(v) for w, v in lexicon.items()},
                               "ood_mode": (OodMode.TOKEN_COUNT_PENALTY if ood else OodMode.OFF).value},
                "llm": {"kind": "mock", "neutral_lexicon": list(self.neutral_lexicon),
                        "boundary_lexicon": {k: list(v) for k, v in self.boundary_lexicon.items()}},
                "embedder": {"kind": "mock", "dim": EMBED_DIM},
            },
            "seeds": [0],
        }


def make_suite(n: int = 100, seed: int = 0, d_min: int = 8, d_max: int = 15,
               filler_noise: float = 0.0, counter_weight: float = COUNTER_WEIGHT) -> SyntheticSuite:
    """``filler_noise`` > 0 gives every filler a small random per-class weight."""
    rng = np.random.default_rng(seed)
    pos, neg, counter, neutral, fillers = _vocabulary()
    lexicon = {w: (KEYWORD_WEIGHT, 0.0) for w in pos}
    lexicon.update({w: (0.0, KEYWORD_WEIGHT) for w in neg})
    lexicon.update({w: (counter_weight, 0.0) for w in counter["positive"]})
    lexicon.update({w: (0.0, counter_weight) for w in counter["negative"]})
    filler_weights = {}
    if filler_noise > 0:
        filler_weights = {w: tuple(rng.uniform(-filler_noise, filler_noise, size=2).tolist()) for w in fillers}
    records = []
    for i in range(n):
        d = int(rng.integers(d_min, d_max + 1))
        words = list(rng.choice(fillers, size=d - 1, replace=False))
        keywords = pos if rng.random() < 0.5 else neg
        kw = str(rng.choice(keywords))
        at = int(rng.integers(0, d))
        words.insert(at, kw)
        rationale = tuple(int(j == at) for j in range(d))
        records.append(SyntheticRecord(f"syn-{i:03d}", " ".join(map(str, words)), rationale, at))
    return SyntheticSuite(records, lexicon, neutral, {k: tuple(v) for k, v in counter.items()}, filler_weights)



def manifold_comparison(n: int = 100, seed: int = 0, ood: bool = True, lime_samples: int = 1000,
                        filler_noise: float = 0.0) -> dict:
    """Explain every suite instance with LIME-LLM and standard LIME; top-1 hits and pooled AUCs for each.

    Each instance gets its own classifier whose OOD reference is that instance's length.
    """
    spec = PromptSpec(SUITE_SPEC_DESCRIPTION, LABELS)
    suite = make_suite(n=n, seed=seed, filler_noise=filler_noise)
    llm, emb = suite.llm(), suite.embedder()
    llm_exps, lime_exps, rationales = [], [], {}
    llm_hits = lime_hits = 0
    calls = 0
    t0 = time.perf_counter()
    for k, rec in enumerate(suite.records):
        clf = suite.classifier(ood=ood, record=rec)
        inst = make_instance(rec.id, rec.text, clf, rationale=rec.rationale, label_names=rec.label_names)
        rationales[rec.id] = rec.rationale
        cfg = ExplainConfig(spec, SamplingConfig(seed=seed * 1000 + k), GenerationPolicy())
        res = explain_detailed(inst, clf, llm, emb, cfg)
        calls += res.stats.llm_calls
        llm_exps.append(res.explanation)
        llm_hits += res.explanation.ranking()[0] == rec.keyword_index
        lexp = explain_lime(inst, clf, LimeConfig(n_samples=lime_samples, seed=seed * 1000 + k))
        lime_exps.append(lexp)
        lime_hits += lexp.ranking()[0] == rec.keyword_index
    r_llm = evaluate(llm_exps, rationales)
    r_lime = evaluate(lime_exps, rationales)
    return {
        "n": n, "seed": seed, "ood": ood, "lime_samples": lime_samples,
        "lime_llm_top1": llm_hits, "lime_top1": lime_hits,
        "lime_llm_roc": r_llm.pooled_roc_auc, "lime_roc": r_lime.pooled_roc_auc,
        "lime_llm_pr": r_llm.pooled_pr_auc, "lime_pr": r_lime.pooled_pr_auc,
        "llm_calls": calls, "seconds": round(time.perf_counter() - t0, 2),
    }
