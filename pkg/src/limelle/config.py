"""Run configuration: one JSON document, unknown keys rejected, validated before any network call."""

from __future__ import annotations

import json
import os
from dataclasses import MISSING, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from .backends import (CachedClassifier, CachedEmbedder, CachedLlm, HttpClassifier, HttpEmbedder, HttpLlm,
                       MockClassifier, MockEmbedder, MockLlm, ProviderAdapter, RequestLimiter, ResponseCache)
from .backends.http import DEFAULT_TIMEOUT_S, LLM_TIMEOUT_S
from .domain import KernelMode
from .errors import ConfigError, InvalidValue
from .evaluation import Pooling
from .generation import GenerationPolicy, PromptSpec
from .kernel import DEFAULT_SIGMA
from .sampling import SamplingConfig
from .surrogate import DEFAULT_LAMBDA

METHODS = ("lime-llm", "lime-standard")
ENV_CLASSIFIER_URL = "LIMELLE_CLASSIFIER_URL"
ENV_EMBEDDER_URL = "LIMELLE_EMBEDDER_URL"
ENV_CACHE_DIR = "LIMELLE_CACHE_DIR"
ENV_OFFLINE = "LIMELLE_OFFLINE"


def build_dataclass(cls, data: Any, where: str):
    """Construct ``cls`` from a mapping, rejecting unknown and missing keys."""
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object")
    known = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    missing = [n for n, f in known.items()
               if n not in data and f.default is MISSING and f.default_factory is MISSING]
    if missing:
        raise ConfigError(f"{where}: missing keys {missing}")
    try:
        return cls(**data)
    except (TypeError, ValueError, InvalidValue) as exc:
        raise ConfigError(f"{where}: {exc}") from None


@dataclass(frozen=True)
class LimeSection:
    n_samples: int = 1000
    sigma: float = DEFAULT_SIGMA


@dataclass(frozen=True)
class BackendSection:
    classifier: dict = field(default_factory=lambda: {"kind": "http"})
    llm: dict = field(default_factory=lambda: {"kind": "http"})
    embedder: dict = field(default_factory=lambda: {"kind": "http"})


@dataclass(frozen=True)
class RunConfig:
    prompt_spec: PromptSpec
    method: str = "lime-llm"
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    generation: GenerationPolicy = field(default_factory=GenerationPolicy)
    kernel_mode: KernelMode = KernelMode.HYBRID
    lam: float = DEFAULT_LAMBDA
    lime: LimeSection = field(default_factory=LimeSection)
    backends: BackendSection = field(default_factory=BackendSection)
    pooling: Pooling = Pooling.MICRO
    absolute_scores: bool = False
    seeds: tuple[int, ...] = (0,)
    parallel: int = 4
    max_inflight: int = 8
    cache_dir: str | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if self.parallel < 1 or self.max_inflight < 1:
            raise ConfigError("parallel and max_inflight must be >= 1")
        if self.lam < 0:
            raise ConfigError("lambda must be nonnegative")


_TOP_KEYS = {"method", "sampling", "generation", "kernel_mode", "lambda", "lime", "prompt_spec", "backends",
             "pooling", "absolute_scores", "seeds", "parallel", "max_inflight", "cache_dir"}


def parse_config(data: dict, base_dir: str | Path = ".") -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"config: unknown keys {sorted(unknown)}")
    if "prompt_spec" not in data:
        raise ConfigError("config: missing key 'prompt_spec'")
    ps = data["prompt_spec"]
    prompt_spec = PromptSpec.load(Path(base_dir) / ps) if isinstance(ps, str) else PromptSpec.from_dict(ps, base_dir)
    kwargs: dict[str, Any] = {"prompt_spec": prompt_spec}
    if "method" in data:
        kwargs["method"] = data["method"]
    if "sampling" in data:
        kwargs["sampling"] = build_dataclass(SamplingConfig, data["sampling"], "sampling")
    if "generation" in data:
        kwargs["generation"] = build_dataclass(GenerationPolicy, data["generation"], "generation")
    if "lime" in data:
        kwargs["lime"] = build_dataclass(LimeSection, data["lime"], "lime")
    if "backends" in data:
        kwargs["backends"] = build_dataclass(BackendSection, data["backends"], "backends")
    try:
        if "kernel_mode" in data:
            kwargs["kernel_mode"] = KernelMode(data["kernel_mode"])
        if "pooling" in data:
            kwargs["pooling"] = Pooling(data["pooling"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if "lambda" in data:
        kwargs["lam"] = float(data["lambda"])
    if "seeds" in data:
        kwargs["seeds"] = tuple(int(s) for s in data["seeds"])
    for key in ("absolute_scores", "parallel", "max_inflight", "cache_dir"):
        if key in data:
            kwargs[key] = data[key]
    cfg = RunConfig(**kwargs)
    check_backends(cfg.backends, base_dir)
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return parse_config(data, base_dir=".")


_BACKEND_KEYS = {
    ("classifier", "http"): {"kind", "url", "batch_size", "timeout"},
    ("classifier", "mock"): {"kind", "lexicon", "ood_mode"},
    ("llm", "http"): {"kind", "adapter", "timeout"},
    ("llm", "mock"): {"kind", "neutral_lexicon", "boundary_lexicon"},
    ("embedder", "http"): {"kind", "url", "batch_size", "timeout"},
    ("embedder", "mock"): {"kind", "dim"},
}


def check_backends(section: BackendSection, base_dir: str | Path = ".") -> None:
    for role in ("classifier", "llm", "embedder"):
        spec = getattr(section, role)
        kind = spec.get("kind") if isinstance(spec, dict) else None
        allowed = _BACKEND_KEYS.get((role, kind))
        if allowed is None:
            raise ConfigError(f"backends.{role}: kind must be 'http' or 'mock'")
        unknown = set(spec) - allowed
        if unknown:
            raise ConfigError(f"backends.{role}: unknown keys {sorted(unknown)}")
        if kind == "http" and role != "llm" and not (spec.get("url") or os.environ.get(_url_env(role))):
            raise ConfigError(f"backends.{role}: no url configured and {_url_env(role)} is unset")
        if kind == "http" and role == "llm" and "adapter" not in spec:
            raise ConfigError("backends.llm: http kind needs an 'adapter' path or object")
        if kind == "mock" and role == "classifier" and not spec.get("lexicon"):
            raise ConfigError("backends.classifier: mock kind needs a non-empty lexicon")
        if kind == "mock" and role == "llm" and not spec.get("neutral_lexicon"):
            raise ConfigError("backends.llm: mock kind needs a neutral_lexicon")
    llm = section.llm
    if llm.get("kind") == "http":
        _adapter(llm["adapter"], base_dir)


def _url_env(role: str) -> str:
    return ENV_CLASSIFIER_URL if role == "classifier" else ENV_EMBEDDER_URL


def _adapter(spec, base_dir) -> ProviderAdapter:
    if isinstance(spec, str):
        return ProviderAdapter.load(Path(base_dir) / spec)
    return ProviderAdapter.from_dict(spec)


@dataclass
class Backends:
    classifier: Any
    llm: Any
    embedder: Any
    cache: ResponseCache | None = None


def build_backends(cfg: RunConfig, offline: bool | None = None, cache_dir: str | None = None,
                   base_dir: str | Path = ".") -> Backends:
    if offline is None:
        offline = os.environ.get(ENV_OFFLINE, "") not in ("", "0")
    cache_dir = cache_dir or cfg.cache_dir or os.environ.get(ENV_CACHE_DIR)
    limiter = RequestLimiter(cfg.max_inflight)
    b = cfg.backends

    c = b.classifier
    if c["kind"] == "mock":
        classifier = MockClassifier(c["lexicon"], ood_mode=c.get("ood_mode", "off"))
    else:
        classifier = HttpClassifier(c.get("url") or os.environ[ENV_CLASSIFIER_URL], batch_size=c.get("batch_size", 32),
                                    timeout=c.get("timeout", DEFAULT_TIMEOUT_S), offline=offline, limiter=limiter)
    e = b.embedder
    if e["kind"] == "mock":
        embedder = MockEmbedder(e.get("dim", 256))
    else:
        embedder = HttpEmbedder(e.get("url") or os.environ[ENV_EMBEDDER_URL], batch_size=e.get("batch_size", 64),
                                timeout=e.get("timeout", DEFAULT_TIMEOUT_S), offline=offline, limiter=limiter)
    m = b.llm
    if m["kind"] == "mock":
        llm = MockLlm(m["neutral_lexicon"], m.get("boundary_lexicon", {}))
    else:
        llm = HttpLlm(_adapter(m["adapter"], base_dir), timeout=m.get("timeout", LLM_TIMEOUT_S),
                      offline=offline, limiter=limiter)

    cache = None
    if cache_dir:
        cache = ResponseCache(cache_dir)
        classifier, embedder, llm = CachedClassifier(classifier, cache), CachedEmbedder(embedder, cache), CachedLlm(llm, cache)
    return Backends(classifier, llm, embedder, cache)


def with_overrides(cfg: RunConfig, **overrides) -> RunConfig:
    """Apply CLI flag values; ``None`` means 'not given'."""
    changes = {k: v for k, v in overrides.items() if v is not None}
    try:
        if "kernel_mode" in changes:
            changes["kernel_mode"] = KernelMode(changes["kernel_mode"])
        return replace(cfg, **changes)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
