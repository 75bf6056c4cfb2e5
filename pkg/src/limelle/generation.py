"""Batched infill prompting, response parsing, anchor verification and neighborhood assembly."""

from __future__ import annotations

import json
import logging
import re
import time
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from string import Template
from typing import Sequence

from .domain import Instance, InvalidValue, Neighborhood, Origin, PerturbationHypothesis, PerturbationSample, Strategy
from .errors import ConfigError, EmptyInput, InsufficientNeighborhood, MalformedResponse
from .sampling import SaliencyProfile
from .tokenization import canonical, render_masked_template, verify_anchors

log = logging.getLogger(__name__)

DEFAULT_TEMPLATE = "infill-v1"
DEFAULT_CONSTRAINT = 'Do not fill any slot with "{token}" or a synonym of "{token}"; replace it with a word of opposite effect.'

_SECTION_RE = re.compile(r"^=== (\w+) ===$", re.M)
_LINE_RE = re.compile(r"^\s*(\d+)\s*:\s*(.*\S)\s*$")


@dataclass(frozen=True)
class PromptSpec:
    dataset_description: str
    label_names: tuple[str, ...]
    negative_constraints: tuple[str, ...] = (DEFAULT_CONSTRAINT,)
    template_version: str = DEFAULT_TEMPLATE
    template_path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "label_names", tuple(self.label_names))
        object.__setattr__(self, "negative_constraints", tuple(self.negative_constraints))
        if len(self.label_names) < 2 or any(not n for n in self.label_names):
            raise InvalidValue("need at least two non-empty label names")
        if len(set(self.label_names)) != len(self.label_names):
            raise InvalidValue("label names must be distinct")

    @classmethod
    def from_dict(cls, data: dict, base_dir: str | Path | None = None) -> "PromptSpec":
        allowed = {"dataset_description", "label_names", "negative_constraints", "template_version", "template_path"}
        unknown = set(data) - allowed
        if unknown:
            raise ConfigError(f"unknown prompt spec keys: {sorted(unknown)}")
        data = dict(data)
        if data.get("template_path") and base_dir is not None:
            data["template_path"] = str(Path(base_dir) / data["template_path"])
        try:
            return cls(**data)
        except (TypeError, InvalidValue) as exc:
            raise ConfigError(f"invalid prompt spec: {exc}") from None

    @classmethod
    def load(cls, path: str | Path) -> "PromptSpec":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read prompt spec {path}: {exc}") from None
        return cls.from_dict(data, base_dir=path.parent)

    def for_instance(self, instance: Instance) -> "PromptSpec":
        if instance.label_names is None or instance.label_names == self.label_names:
            return self
        return PromptSpec(self.dataset_description, instance.label_names, self.negative_constraints,
                          self.template_version, self.template_path)


@dataclass(frozen=True)
class GenerationPolicy:
    max_retries: int = 2
    min_neighborhood: int = 8
    temperature: float = 0.7

    def __post_init__(self):
        if self.max_retries < 0:
            raise InvalidValue("max_retries must be >= 0")
        if self.min_neighborhood < 2:
            raise InvalidValue("min_neighborhood must be >= 2")


@dataclass
class GenerationStats:
    llm_calls: int = 0
    input_tokens: int = 0
    output_tokens: int = 0
    rejected_samples: int = 0
    wall_time_ms: float = 0.0

    def record_call(self, prompt: str, response: str) -> None:
        self.llm_calls += 1
        self.input_tokens += count_tokens(prompt)
        self.output_tokens += count_tokens(response)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "GenerationStats":
        return cls(**{k: data.get(k, 0) for k in ("llm_calls", "input_tokens", "output_tokens",
                                                  "rejected_samples", "wall_time_ms")})


def count_tokens(text: str) -> int:
    """Whitespace token count; providers' own tokenizers are not available offline."""
    return len(text.split())


def load_template(spec: PromptSpec) -> dict[str, Template]:
    if spec.template_path:
        try:
            raw = Path(spec.template_path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read prompt template {spec.template_path}: {exc}") from None
    else:
        try:
            raw = resources.files("limelle.prompts").joinpath(f"{spec.template_version}.txt").read_text()
        except FileNotFoundError:
            raise ConfigError(f"unknown prompt template version {spec.template_version!r}") from None
    parts = _SECTION_RE.split(raw)
    sections = {name: Template(body.strip("\n")) for name, body in zip(parts[1::2], parts[2::2])}
    missing = {"prompt", "neutral_directive", "boundary_directive", "retry_note"} - set(sections)
    if missing:
        raise ConfigError(f"prompt template lacks sections {sorted(missing)}")
    return sections


def hypothesis_block(index: int, hyp: PerturbationHypothesis, instance: Instance, spec: PromptSpec,
                     sections: dict[str, Template], top_token: int | None) -> str:
    label = spec.label_names[hyp.target_label]
    directive_key = "neutral_directive" if hyp.strategy is Strategy.NEUTRAL else "boundary_directive"
    lines = [
        f"{index}. [{hyp.strategy.value}] target label: \"{label}\"",
        f"   template: {render_masked_template(instance.tokens, hyp.mask)}",
        f"   directive: {sections[directive_key].substitute(label=label)}",
    ]
    if (hyp.strategy is Strategy.BOUNDARY and top_token is not None
            and hyp.mask.bits[top_token] == 0):
        surface = instance.tokens[top_token].surface
        lines += [f"   constraint: {c.format(token=surface)}" for c in spec.negative_constraints]
    return "\n".join(lines)


def build_batched_prompt(instance: Instance, hypotheses: Sequence[PerturbationHypothesis], spec: PromptSpec,
                         saliency: SaliencyProfile | None = None, indices: Sequence[int] | None = None,
                         retry_round: int = 0) -> str:
    """One prompt covering every hypothesis; numbering follows ``indices`` (default 0..n-1)."""
    if not hypotheses:
        raise InvalidValue("need at least one hypothesis")
    indices = list(range(len(hypotheses))) if indices is None else list(indices)
    if len(indices) != len(hypotheses):
        raise InvalidValue("one index per hypothesis required")
    spec = spec.for_instance(instance)
    if len(spec.label_names) != instance.class_count:
        raise ConfigError(f"{len(spec.label_names)} label names for a {instance.class_count}-class classifier")
    sections = load_template(spec)
    top = saliency.top_index if saliency is not None else None
    blocks = "\n\n".join(hypothesis_block(i, h, instance, spec, sections, top) for i, h in zip(indices, hypotheses))
    retry_note = sections["retry_note"].substitute(round=retry_round) + "\n" if retry_round else ""
    return sections["prompt"].substitute(
        template_version=spec.template_version,
        dataset_description=spec.dataset_description,
        label_list=", ".join(f'"{n}"' for n in spec.label_names),
        original_text=canonical(instance.text),
        predicted_label=spec.label_names[instance.predicted_label],
        count=len(hypotheses),
        retry_note=retry_note,
        hypotheses=blocks,
    )


def parse_response(raw: str, indices: Sequence[int], diagnostics: list[str] | None = None) -> dict[int, str]:
    """Extract ``i: sentence`` lines for the requested indices.

    Unknown and repeated indices are dropped (a repeated index drops every copy).
    Raises MalformedResponse when no line has the numbered form at all.
    """
    wanted = set(indices)
    found: dict[int, list[str]] = {}
    matched = 0
    for line in raw.splitlines():
        m = _LINE_RE.match(line)
        if not m:
            continue
        matched += 1
        found.setdefault(int(m.group(1)), []).append(m.group(2))
    if matched == 0:
        raise MalformedResponse("no numbered lines in LLM response")
    notes = diagnostics if diagnostics is not None else []
    out = {}
    for i, texts in found.items():
        if i not in wanted:
            notes.append(f"index {i} was not requested")
        elif len(texts) > 1:
            notes.append(f"index {i} answered {len(texts)} times")
        else:
            out[i] = texts[0]
    for note in notes:
        log.debug("parse_response: %s", note)
    return out


@dataclass
class GenerationResult:
    neighborhood: Neighborhood
    stats: GenerationStats = field(default_factory=GenerationStats)


def generate_neighborhood(instance: Instance, hypotheses: Sequence[PerturbationHypothesis], llm, classifier,
                          policy: GenerationPolicy, spec: PromptSpec, saliency: SaliencyProfile | None = None,
                          seed: int | None = None) -> GenerationResult:
    """Call, verify, re-request failures, then score every admitted text in one classifier call."""
    start = time.perf_counter()
    hyps = list(hypotheses)
    if len({h.mask for h in hyps}) != len(hyps):
        raise InvalidValue("hypothesis masks must be distinct")
    for h in hyps:
        h.check_against(instance)
    stats = GenerationStats()
    accepted: dict[int, str] = {}
    pending = list(range(len(hyps)))
    for round_ in range(policy.max_retries + 1):
        if not pending:
            break
        prompt = build_batched_prompt(instance, [hyps[i] for i in pending], spec, saliency,
                                      indices=pending, retry_round=round_)
        raw = llm.complete(prompt, temperature=policy.temperature,
                           seed=None if seed is None else seed + round_)
        stats.record_call(prompt, raw)
        try:
            parsed = parse_response(raw, pending)
        except MalformedResponse:
            parsed = {}
        failed = []
        for i in pending:
            cand = parsed.get(i)
            ok = False
            if cand is not None:
                try:
                    ok = verify_anchors(instance.tokens, hyps[i].mask, cand).verified
                except EmptyInput:
                    ok = False
            if ok:
                accepted[i] = canonical(cand)
            else:
                failed.append(i)
        stats.rejected_samples += len(failed)
        pending = failed

    order = sorted(accepted)
    texts = [accepted[i] for i in order]
    probs = classifier.predict(texts) if texts else []
    samples = tuple(
        PerturbationSample(hypothesis=hyps[i], mask=hyps[i].mask, text=t, anchor_verified=True,
                           probs=tuple(p), origin=Origin.GENERATED)
        for i, t, p in zip(order, texts, probs)
    )
    stats.wall_time_ms = (time.perf_counter() - start) * 1000.0
    if len(samples) < policy.min_neighborhood:
        err = InsufficientNeighborhood(
            f"only {len(samples)} of {len(hyps)} hypotheses produced verified samples "
            f"(minimum {policy.min_neighborhood})")
        err.stats = stats
        raise err
    return GenerationResult(Neighborhood(instance, samples, dropped=len(pending)), stats)
