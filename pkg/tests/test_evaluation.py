import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from limelle.domain import Explanation
from limelle.errors import DegenerateRationale, InsufficientSeeds, LengthMismatch, MissingRationale
from limelle.evaluation import (CURVE_HEADER, EvalReport, Pooling, curve_points, curves_csv, evaluate, pr_auc,
                                roc_auc, seed_ci)
from oracles import brute_force_average_precision, pairwise_roc_auc

FIXTURE = Path(__file__).parent / "fixtures" / "eval"


@st.composite
def scored(draw, d_max=20, grid=True):
    d = draw(st.integers(2, d_max))
    labels = draw(st.lists(st.integers(0, 1), min_size=d, max_size=d).filter(lambda b: 0 < sum(b) < len(b)))
    values = st.sampled_from([-1.0, -0.5, 0.0, 0.25, 0.5, 2.0]) if grid else st.floats(-10, 10)
    return draw(st.lists(values, min_size=d, max_size=d)), labels


def exp(iid, scores, seed=0):
    return Explanation(iid, tuple(scores), tuple(f"t{j}" for j in range(len(scores))), "lime-llm", seed)


def report(roc, pr):
    return EvalReport("micro", roc, pr, roc, pr, roc, pr, 1, 0)


class TestRoc:
    @pytest.mark.parametrize("scores,labels,expected", [
        ([0.9, 0.1], [1, 0], 1.0),
        ([0.1, 0.9], [1, 0], 0.0),
        ([0.4, 0.4, 0.4], [1, 0, 1], 0.5),
        ([3, 1, 2, 0], [1, 0, 1, 0], 1.0),
        ([0, 2, 1, 3], [1, 0, 1, 0], 0.0),
    ])
    def test_examples(self, scores, labels, expected):
        assert roc_auc(scores, labels) == expected
        assert roc_auc(scores, labels) == pairwise_roc_auc(scores, labels)

    @pytest.mark.parametrize("labels", [[0, 0, 0], [1, 1]])
    def test_degenerate(self, labels):
        with pytest.raises(DegenerateRationale):
            roc_auc([0.1] * len(labels), labels)

    def test_length(self):
        with pytest.raises(LengthMismatch):
            roc_auc([0.1, 0.2], [1, 0, 1])

    @settings(max_examples=300)
    @given(scored())
    def test_matches_pairwise_count(self, case):
        s, y = case
        assert roc_auc(s, y) == pairwise_roc_auc(s, y)

    @given(scored(grid=False))
    def test_negation_complements(self, case):
        s, y = case
        assert roc_auc(s, y) + roc_auc([-v for v in s], y) == pytest.approx(1.0, abs=1e-12)

    @given(scored(grid=False))
    def test_monotone_transform_invariant(self, case):
        s, y = case
        # power-of-two scaling is exact, so no two scores merge
        assert roc_auc(s, y) == roc_auc([8 * v for v in s], y)
        assert roc_auc(s, y) == roc_auc([math.ldexp(v, -3) for v in s], y)


class TestAveragePrecision:
    def test_perfect(self):
        assert pr_auc([5, 4, 1, 0], [1, 1, 0, 0]) == 1.0

    @pytest.mark.parametrize("d", [2, 5, 12])
    def test_single_positive_ranked_last(self, d):
        y = [0] * (d - 1) + [1]
        assert pr_auc(list(range(d, 0, -1)), y) == pytest.approx(1 / d)

    def test_uniform_scores_use_index_order(self):
        y = [0, 1, 0, 1, 1]
        assert pr_auc([0.2] * 5, y) == brute_force_average_precision([0.2] * 5, y)
        assert pr_auc([0.2] * 5, y) == pytest.approx((1 / 2 + 2 / 4 + 3 / 5) / 3)

    @settings(max_examples=300)
    @given(scored())
    def test_matches_brute_force(self, case):
        s, y = case
        assert pr_auc(s, y) == brute_force_average_precision(s, y)


class TestPooling:
    def test_single_instance_micro_equals_macro(self):
        rep = evaluate([exp("a", [3, 1, 2, 0])], {"a": [1, 0, 0, 1]})
        assert rep.micro_roc_auc == rep.macro_roc_auc
        assert rep.micro_pr_auc == rep.macro_pr_auc

    @settings(max_examples=50)
    @given(st.lists(scored(d_max=8), min_size=1, max_size=5),
           st.lists(st.tuples(st.sampled_from([1, 2, 4, 8]), st.integers(-5, 5)), min_size=5, max_size=5))
    def test_micro_ignores_per_instance_affine_scale(self, cases, affine):
        # dyadic scales and integer shifts keep normalization exact
        rats = {f"i{k}": y for k, (_, y) in enumerate(cases)}
        plain = [exp(f"i{k}", s) for k, (s, _) in enumerate(cases)]
        scaled = [exp(f"i{k}", [a * v + b for v in s]) for k, ((s, _), (a, b)) in enumerate(zip(cases, affine))]
        r1, r2 = evaluate(plain, rats), evaluate(scaled, rats)
        assert r1.micro_roc_auc == r2.micro_roc_auc
        assert r1.micro_pr_auc == r2.micro_pr_auc

    def test_macro_is_mean_of_instances(self):
        exps = [exp("a", [1, 0]), exp("b", [0, 1])]
        rep = evaluate(exps, {"a": [1, 0], "b": [1, 0]}, Pooling.MACRO)
        assert rep.pooled_roc_auc == 0.5 and rep.pooling == "macro"

    def test_degenerate_instance_skipped(self):
        rep = evaluate([exp("a", [1, 0]), exp("b", [1, 0])], {"a": [1, 0], "b": [0, 0]}, Pooling.MACRO)
        assert rep.skipped == 1 and rep.macro_roc_auc == 1.0
        assert rep.per_instance[1].roc_auc is None

    def test_missing_rationale(self):
        with pytest.raises(MissingRationale):
            evaluate([exp("a", [1, 0])], {})

    def test_absolute_ranks_magnitude(self):
        rep = evaluate([exp("a", [-3, 0.1, 0])], {"a": [1, 0, 0]}, absolute=True)
        assert rep.micro_roc_auc == 1.0

    def test_bundled_fixture_matches_oracle(self):
        exps = [Explanation.from_dict(json.loads(l)) for l in (FIXTURE / "explanations.jsonl").read_text().splitlines()]
        rats = {r["id"]: r["rationale"] for r in map(json.loads, (FIXTURE / "rationales.jsonl").read_text().splitlines())}
        expected = json.loads((FIXTURE / "expected.json").read_text())
        rep = evaluate(exps, rats)
        assert rep.micro_roc_auc == expected["micro_roc_auc"]
        assert rep.micro_pr_auc == expected["micro_pr_auc"]
        got = [(r.id, r.seed, r.roc_auc, r.pr_auc) for r in rep.per_instance]
        assert got == [(r["id"], r["seed"], r["roc_auc"], r["pr_auc"]) for r in expected["per_instance"]]


class TestSeedCi:
    def test_two_seeds(self):
        ci = seed_ci([report(0.4, 0.4), report(0.6, 0.6)])
        mean, half = ci["roc_auc"]
        assert mean == pytest.approx(0.5)
        assert half == pytest.approx(1.96 * math.sqrt(0.02) / math.sqrt(2))
        assert half == pytest.approx(0.196)

    def test_identical_reports(self):
        assert seed_ci([report(0.7, 0.6)] * 5)["roc_auc"] == (pytest.approx(0.7), 0.0)

    def test_thirty_seeds(self):
        vals = np.random.default_rng(0).uniform(0.5, 0.9, 30)
        mean, half = seed_ci([report(v, v) for v in vals])["pr_auc"]
        assert mean == pytest.approx(vals.mean())
        assert half == pytest.approx(1.96 * vals.std(ddof=1) / math.sqrt(30))

    def test_needs_two(self):
        with pytest.raises(InsufficientSeeds):
            seed_ci([report(0.5, 0.5)])


class TestCurves:
    @given(scored(grid=False))
    def test_monotone(self, case):
        pts = curve_points(*case)
        thresholds = [p[0] for p in pts]
        assert thresholds == sorted(thresholds, reverse=True)
        for a, b in zip(pts, pts[1:]):
            assert b[1] >= a[1] and b[2] >= a[2]
        assert pts[-1][1] == 1.0 and pts[-1][2] == 1.0

    def test_csv(self):
        text = curves_csv(curve_points([0.9, 0.1], [1, 0]))
        lines = text.splitlines()
        assert lines[0] == ",".join(CURVE_HEADER)
        assert len(lines) == 3

    def test_report_roundtrip(self):
        rep = evaluate([exp("a", [3, 1, 2, 0], 0), exp("a", [0, 1, 2, 3], 1)], {"a": [1, 0, 1, 0]})
        rep.seed_ci = {"roc_auc": (0.5, 0.1), "pr_auc": (0.6, 0.2)}
        assert EvalReport.from_dict(json.loads(json.dumps(rep.to_dict()))) == rep
