"""Rationale alignment metrics: ROC-AUC, average precision, pooling and seed-level intervals."""

from __future__ import annotations

import csv
import io
import math
import statistics
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .domain import BinaryRationale, Explanation
from .errors import DegenerateRationale, InsufficientSeeds, LengthMismatch, MissingRationale

Z_95 = 1.96
CURVE_HEADER = ("threshold", "tpr", "fpr", "precision", "recall")


class Pooling(str, Enum):
    MICRO = "micro"
    MACRO = "macro"


def _bits(rationale) -> np.ndarray:
    bits = rationale.bits if isinstance(rationale, BinaryRationale) else rationale
    return np.asarray(bits, dtype=int)


def _check(scores, rationale) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=float)
    y = _bits(rationale)
    if s.shape != y.shape:
        raise LengthMismatch(f"{len(s)} scores for {len(y)} rationale bits")
    p = int(y.sum())
    if p == 0 or p == len(y):
        raise DegenerateRationale("rationale needs at least one positive and one negative token")
    return s, y


def roc_auc(scores: Sequence[float], rationale) -> float:
    """Probability a positive token outranks a negative one, ties counted as half."""
    s, y = _check(scores, rationale)
    pos = s[y == 1]
    neg = np.sort(s[y == 0])
    below = np.searchsorted(neg, pos, side="left")
    at_or_below = np.searchsorted(neg, pos, side="right")
    doubled = int(np.sum(2 * below + (at_or_below - below)))
    return doubled / (2 * len(pos) * len(neg))


def rank_order(scores: Sequence[float]) -> list[int]:
    """Descending score; ties resolved by ascending index."""
    return sorted(range(len(scores)), key=lambda j: (-scores[j], j))


def pr_auc(scores: Sequence[float], rationale) -> float:
    """Average precision: mean over positives of precision at the positive's rank."""
    s, y = _check(scores, rationale)
    total = 0.0
    hits = 0
    for rank, j in enumerate(rank_order(s.tolist()), start=1):
        if y[j]:
            hits += 1
            total += hits / rank
    return total / hits


def curve_points(scores: Sequence[float], rationale) -> list[tuple[float, float, float, float, float]]:
    """(threshold, tpr, fpr, precision, recall) for 'score >= threshold', one row per distinct score, descending."""
    s, y = _check(scores, rationale)
    P = int(y.sum())
    N = len(y) - P
    order = np.argsort(-s, kind="stable")
    s_sorted, y_sorted = s[order], y[order]
    tp = np.cumsum(y_sorted)
    fp = np.cumsum(1 - y_sorted)
    # last position of each run of equal scores
    ends = np.flatnonzero(np.append(s_sorted[1:] != s_sorted[:-1], True))
    return [(float(s_sorted[i]), float(tp[i] / P), float(fp[i] / N), float(tp[i] / (tp[i] + fp[i])), float(tp[i] / P))
            for i in ends]


def min_max(scores: Sequence[float]) -> np.ndarray:
    s = np.asarray(scores, dtype=float)
    lo, hi = s.min(), s.max()
    if hi == lo:
        return np.zeros_like(s)
    return (s - lo) / (hi - lo)


@dataclass
class InstanceScore:
    id: str
    seed: int
    roc_auc: float | None
    pr_auc: float | None


@dataclass
class EvalReport:
    pooling: str
    pooled_roc_auc: float | None
    pooled_pr_auc: float | None
    micro_roc_auc: float | None
    micro_pr_auc: float | None
    macro_roc_auc: float | None
    macro_pr_auc: float | None
    instance_count: int
    skipped: int
    per_instance: list[InstanceScore] = field(default_factory=list)
    curve_points: list[tuple[float, float, float, float, float]] = field(default_factory=list)
    seed_ci: dict[str, tuple[float, float]] | None = None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["curve_points"] = [list(p) for p in self.curve_points]
        if self.seed_ci is not None:
            out["seed_ci"] = {k: {"mean": m, "half_width": h} for k, (m, h) in self.seed_ci.items()}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "EvalReport":
        data = dict(data)
        data["per_instance"] = [InstanceScore(**r) for r in data.get("per_instance", [])]
        data["curve_points"] = [tuple(p) for p in data.get("curve_points", [])]
        if data.get("seed_ci") is not None:
            data["seed_ci"] = {k: (v["mean"], v["half_width"]) for k, v in data["seed_ci"].items()}
        return cls(**data)


def _mean_or_none(values: list[float]) -> float | None:
    return statistics.fmean(values) if values else None


def evaluate(explanations: Sequence[Explanation], rationales: Mapping[str, object],
             pooling: Pooling | str = Pooling.MICRO, absolute: bool = False) -> EvalReport:
    """Score explanations against rationales.

    Micro pooling min-max normalizes each instance's scores and ranks all tokens
    together; macro averages per-instance AUCs over non-degenerate instances.
    ``absolute`` ranks by magnitude instead of signed attribution.
    """
    pooling = Pooling(pooling)
    per: list[InstanceScore] = []
    pooled_s: list[np.ndarray] = []
    pooled_y: list[np.ndarray] = []
    skipped = 0
    for exp in explanations:
        if exp.instance_id not in rationales:
            raise MissingRationale(f"no rationale for instance {exp.instance_id!r}")
        y = _bits(rationales[exp.instance_id])
        if len(y) != len(exp.scores):
            raise LengthMismatch(f"instance {exp.instance_id!r}: {len(exp.scores)} scores for {len(y)} rationale bits")
        s = np.abs(exp.scores) if absolute else np.asarray(exp.scores, dtype=float)
        pooled_s.append(min_max(s))
        pooled_y.append(y)
        try:
            per.append(InstanceScore(exp.instance_id, exp.seed, roc_auc(s, y), pr_auc(s, y)))
        except DegenerateRationale:
            skipped += 1
            per.append(InstanceScore(exp.instance_id, exp.seed, None, None))

    micro_roc = micro_pr = None
    points: list = []
    if pooled_s:
        s_all, y_all = np.concatenate(pooled_s), np.concatenate(pooled_y)
        try:
            micro_roc, micro_pr = roc_auc(s_all, y_all), pr_auc(s_all, y_all)
            points = curve_points(s_all, y_all)
        except DegenerateRationale:
            pass
    macro_roc = _mean_or_none([r.roc_auc for r in per if r.roc_auc is not None])
    macro_pr = _mean_or_none([r.pr_auc for r in per if r.pr_auc is not None])
    chosen = (micro_roc, micro_pr) if pooling is Pooling.MICRO else (macro_roc, macro_pr)
    return EvalReport(pooling.value, chosen[0], chosen[1], micro_roc, micro_pr, macro_roc, macro_pr,
                      len(per), skipped, per, points)


def seed_ci(reports: Sequence[EvalReport]) -> dict[str, tuple[float, float]]:
    """Mean and 95% normal half-width of the pooled metrics across seeds."""
    if len(reports) < 2:
        raise InsufficientSeeds("need at least two seed-level reports")
    out = {}
    for metric in ("roc_auc", "pr_auc"):
        values = [getattr(r, f"pooled_{metric}") for r in reports]
        if any(v is None for v in values):
            raise DegenerateRationale(f"a seed-level report has no pooled {metric}")
        half = Z_95 * statistics.stdev(values) / math.sqrt(len(values))
        out[metric] = (statistics.fmean(values), half)
    return out


def curves_csv(points) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CURVE_HEADER)
    for p in points:
        w.writerow([repr(float(v)) for v in p])
    return buf.getvalue()
