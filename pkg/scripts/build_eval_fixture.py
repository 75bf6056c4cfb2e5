"""Regenerate tests/fixtures/eval: random explanations, rationales, and oracle AUC values.

Expected values come only from the brute-force oracles in tests/oracles.py.

    python scripts/build_eval_fixture.py
"""

import json
import random
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

from oracles import brute_force_average_precision, pairwise_roc_auc  # noqa: E402

OUT = ROOT / "tests" / "fixtures" / "eval"


def normalize(scores):
    lo, hi = min(scores), max(scores)
    return [0.0] * len(scores) if hi == lo else [(s - lo) / (hi - lo) for s in scores]


def main():
    rng = random.Random(20240611)
    exps, rats, per = [], [], []
    pooled_s, pooled_y = [], []
    for i in range(12):
        d = rng.randint(4, 16)
        bits = [0] * d
        for j in rng.sample(range(d), rng.randint(1, d - 1)):
            bits[j] = 1
        rats.append({"id": f"inst-{i:02d}", "rationale": bits})
    for seed in (0, 1):
        for i, rat in enumerate(rats):
            bits = rat["rationale"]
            # coarse grid so the fixture exercises ties
            scores = [rng.choice([-0.5, -0.25, 0.0, 0.1, 0.25, 0.5, 1.0]) * (i + 1) for _ in bits]
            exps.append({"id": rat["id"], "method": "lime-llm", "seed": seed, "scores": scores,
                         "tokens": [f"w{j}" for j in range(len(bits))],
                         "diagnostics": {"weighted_sse": 0.0, "sample_count": 21, "dropped": 0}})
            per.append({"id": rat["id"], "seed": seed, "roc_auc": pairwise_roc_auc(scores, bits),
                        "pr_auc": brute_force_average_precision(scores, bits)})
            pooled_s += normalize(scores)
            pooled_y += bits
    expected = {"micro_roc_auc": pairwise_roc_auc(pooled_s, pooled_y),
                "micro_pr_auc": brute_force_average_precision(pooled_s, pooled_y),
                "per_instance": per}
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "explanations.jsonl").write_text("".join(json.dumps(e) + "\n" for e in exps))
    (OUT / "rationales.jsonl").write_text("".join(json.dumps(r) + "\n" for r in rats))
    (OUT / "expected.json").write_text(json.dumps(expected, indent=2) + "\n")
    print(f"wrote fixture to {OUT}")


if __name__ == "__main__":
    main()
