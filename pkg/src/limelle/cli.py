"""Command-line entry point and on-disk formats.

    limelle explain  --config run.json --out exps.jsonl instances.jsonl
    limelle evaluate --out report.json [--curves curves.csv] exps.jsonl rationales.jsonl
    limelle ablate   --config run.json --out outdir/ sst2.jsonl [more.jsonl ...]
    limelle stats    exps.runlog.jsonl

Exit codes: 0 success, 1 configuration or input error, 2 backend failure, 3 partial failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Sequence

from .baselines import LimeConfig, explain_lime
from .config import RunConfig, build_backends, load_config, with_overrides
from .domain import BinaryRationale, Explanation, Instance, KernelMode
from .errors import BackendError, ConfigError, LimelleError
from .evaluation import EvalReport, Pooling, curves_csv, evaluate, seed_ci
from .generation import GenerationStats
from .surrogate import ExplainConfig, METHOD_TAG, explain_detailed, explanation_from_fit, fit_neighborhood, generate_for, make_instance

EXIT_OK, EXIT_CONFIG, EXIT_BACKEND, EXIT_PARTIAL = 0, 1, 2, 3
INSTANCE_KEYS = {"id", "text", "rationale", "label_names"}


class InputError(Exception):
    """Unreadable or malformed input file; maps to exit code 1."""


# ---------------------------------------------------------------- file formats

def dumps_line(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False)


def write_jsonl(path: str | Path, rows: Sequence[Any]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for r in rows:
            fh.write(dumps_line(r) + "\n")


def read_jsonl(path: str | Path) -> list[tuple[int, dict]]:
    """(line number, object) pairs; blank lines skipped."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: line {lineno} is not valid JSON ({exc.msg})") from None
        if not isinstance(obj, dict):
            raise InputError(f"{path}: line {lineno} is not a JSON object")
        rows.append((lineno, obj))
    return rows


@dataclass(frozen=True)
class InstanceRecord:
    id: str
    text: str
    line: int = 0
    rationale: tuple[int, ...] | None = None
    label_names: tuple[str, ...] | None = None

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"id": self.id, "text": self.text}
        if self.rationale is not None:
            out["rationale"] = list(self.rationale)
        if self.label_names is not None:
            out["label_names"] = list(self.label_names)
        return out


def read_instances(path: str | Path) -> list[InstanceRecord]:
    out, seen = [], set()
    for lineno, obj in read_jsonl(path):
        where = f"{path}: line {lineno}"
        unknown = set(obj) - INSTANCE_KEYS
        if unknown:
            raise InputError(f"{where}: unknown keys {sorted(unknown)}")
        if not isinstance(obj.get("id"), str) or not isinstance(obj.get("text"), str):
            raise InputError(f"{where}: 'id' and 'text' must be strings")
        if obj["id"] in seen:
            raise InputError(f"{where}: duplicate id {obj['id']!r}")
        seen.add(obj["id"])
        rat = obj.get("rationale")
        if rat is not None and (not isinstance(rat, list) or any(b not in (0, 1) for b in rat)):
            raise InputError(f"{where}: rationale must be a list of 0/1")
        names = obj.get("label_names")
        if names is not None and (not isinstance(names, list) or not all(isinstance(n, str) for n in names)):
            raise InputError(f"{where}: label_names must be a list of strings")
        out.append(InstanceRecord(obj["id"], obj["text"], lineno,
                                  None if rat is None else tuple(rat), None if names is None else tuple(names)))
    return out


def read_explanations(path: str | Path) -> list[Explanation]:
    out = []
    for lineno, obj in read_jsonl(path):
        try:
            out.append(Explanation.from_dict(obj))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{path}: line {lineno} is not an explanation record ({exc})") from None
    return out


def read_rationales(path: str | Path) -> dict[str, BinaryRationale]:
    out = {}
    for lineno, obj in read_jsonl(path):
        rat = obj.get("rationale")
        if not isinstance(obj.get("id"), str) or rat is None:
            raise InputError(f"{path}: line {lineno} needs 'id' and 'rationale'")
        try:
            out[obj["id"]] = BinaryRationale(tuple(rat))
        except (TypeError, ValueError) as exc:
            raise InputError(f"{path}: line {lineno}: {exc}") from None
    return out


def write_json(path: str | Path, obj: Any) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(obj, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


# ---------------------------------------------------------------- running instances

def derive_seed(seed: int, instance_id: str) -> int:
    """Per-instance seed independent of file order and worker scheduling."""
    digest = hashlib.sha256(f"{seed}:{instance_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


@dataclass
class Outcome:
    record: InstanceRecord
    seed: int
    explanation: Explanation | None = None
    stats: GenerationStats = field(default_factory=GenerationStats)
    error: dict | None = None
    extra: Any = None

    @property
    def ok(self) -> bool:
        return self.error is None


def error_record(rec: InstanceRecord, seed: int, exc: BaseException) -> dict:
    return {"id": rec.id, "line": rec.line, "seed": seed, "error": type(exc).__name__,
            "stage": getattr(exc, "stage", None), "message": str(exc)}


def run_guarded(rec: InstanceRecord, seed: int, body: Callable[[], Outcome]) -> Outcome:
    try:
        return body()
    except (LimelleError, ValueError) as exc:
        stats = getattr(exc, "stats", None) or GenerationStats()
        return Outcome(rec, seed, stats=stats, error=error_record(rec, seed, exc))


def register_references(classifier, records: Sequence[InstanceRecord]) -> None:
    # the mock OOD classifier needs every original length before any worker starts
    register = getattr(classifier, "register_reference", None)
    if register is not None:
        for rec in records:
            register(rec.text)


def build_instance(rec: InstanceRecord, classifier, cfg: RunConfig) -> Instance:
    names = rec.label_names or cfg.prompt_spec.label_names
    return make_instance(rec.id, rec.text, classifier, rationale=rec.rationale, label_names=names)


def explain_one(rec: InstanceRecord, run_seed: int, cfg: RunConfig, backends) -> Outcome:
    def body() -> Outcome:
        seed = derive_seed(run_seed, rec.id)
        inst = build_instance(rec, backends.classifier, cfg)
        if cfg.method == "lime-standard":
            start = time.perf_counter()
            exp = explain_lime(inst, backends.classifier,
                               LimeConfig(cfg.lime.n_samples, cfg.lime.sigma, cfg.lam, seed))
            stats = GenerationStats(wall_time_ms=(time.perf_counter() - start) * 1000.0)
        else:
            ecfg = ExplainConfig(cfg.prompt_spec, replace(cfg.sampling, seed=seed), cfg.generation,
                                 cfg.kernel_mode, cfg.lam)
            res = explain_detailed(inst, backends.classifier, backends.llm, backends.embedder, ecfg)
            exp, stats = res.explanation, res.stats
        return Outcome(rec, run_seed, replace(exp, seed=run_seed), stats)

    return run_guarded(rec, run_seed, body)


def run_parallel(fn: Callable, jobs: Sequence[tuple], parallel: int) -> list:
    if parallel <= 1:
        return [fn(*j) for j in jobs]
    with ThreadPoolExecutor(max_workers=parallel) as pool:
        return list(pool.map(lambda j: fn(*j), jobs))


def runlog_row(o: Outcome) -> dict:
    return {"id": o.record.id, "seed": o.seed, "status": "ok" if o.ok else "error", **o.stats.to_dict()}


def exit_code(outcomes: Sequence[Outcome]) -> int:
    failed = [o for o in outcomes if not o.ok]
    if not failed:
        return EXIT_OK
    if len(failed) == len(outcomes) and all(o.error["error"] == BackendError.__name__ for o in failed):
        return EXIT_BACKEND
    return EXIT_PARTIAL


def report_errors(outcomes: Sequence[Outcome], out_path: str | Path) -> None:
    errors = [o.error for o in outcomes if not o.ok]
    err_path = Path(str(out_path) + ".errors.jsonl")
    if errors:
        write_jsonl(err_path, errors)
        for e in errors:
            print(f"error: instance {e['id']} (line {e['line']}, seed {e['seed']}): {e['error']}: {e['message']}",
                  file=sys.stderr)
    elif err_path.exists():
        err_path.unlink()


def summarize_stats(rows: Sequence[dict]) -> dict:
    calls = sum(r.get("llm_calls", 0) for r in rows)
    return {
        "instances": len(rows),
        "api_calls": calls,
        "avg_input_tokens": sum(r.get("input_tokens", 0) for r in rows) / calls if calls else 0.0,
        "avg_output_tokens": sum(r.get("output_tokens", 0) for r in rows) / calls if calls else 0.0,
        "rejected_samples": sum(r.get("rejected_samples", 0) for r in rows),
        "total_runtime_s": sum(r.get("wall_time_ms", 0.0) for r in rows) / 1000.0,
    }


# ---------------------------------------------------------------- commands

def _load_run_config(args) -> RunConfig:
    cfg = load_config(args.config)
    seeds = None
    if getattr(args, "seeds", None):
        seeds = tuple(int(s) for s in args.seeds.split(","))
    if getattr(args, "seed", None) is not None:
        seeds = (args.seed,)
    return with_overrides(cfg, method=getattr(args, "method", None), kernel_mode=getattr(args, "kernel", None),
                          seeds=seeds, parallel=getattr(args, "parallel", None))


def cmd_explain(args) -> int:
    cfg = _load_run_config(args)
    records = read_instances(args.instances)
    backends = build_backends(cfg, offline=args.offline or None, cache_dir=args.cache_dir)
    register_references(backends.classifier, records)
    jobs = [(rec, s, cfg, backends) for s in cfg.seeds for rec in records]
    outcomes = run_parallel(explain_one, jobs, cfg.parallel)
    write_jsonl(args.out, [o.explanation.to_dict() for o in outcomes if o.ok])
    write_jsonl(args.run_log or str(args.out) + ".runlog.jsonl", [runlog_row(o) for o in outcomes])
    report_errors(outcomes, args.out)
    print("stats: " + json.dumps(summarize_stats([o.stats.to_dict() for o in outcomes])), file=sys.stderr)
    return exit_code(outcomes)


def evaluation_report(explanations: Sequence[Explanation], rationales, pooling, absolute: bool) -> EvalReport:
    by_seed: dict[int, list[Explanation]] = {}
    for e in explanations:
        by_seed.setdefault(e.seed, []).append(e)
    report = evaluate(explanations, rationales, pooling, absolute)
    if len(by_seed) >= 2:
        per_seed = [evaluate(group, rationales, pooling, absolute) for _, group in sorted(by_seed.items())]
        report.seed_ci = seed_ci(per_seed)
    return report


def cmd_evaluate(args) -> int:
    exps = read_explanations(args.explanations)
    rats = read_rationales(args.rationales)
    missing = sorted({e.instance_id for e in exps} - set(rats))
    if missing:
        raise InputError(f"rationales missing for ids {missing}")
    report = evaluation_report(exps, rats, Pooling(args.pooling), args.absolute)
    write_json(args.out, report.to_dict())
    if args.curves:
        Path(args.curves).write_text(curves_csv(report.curve_points), encoding="utf-8")
    print(f"pooled ROC-AUC {report.pooled_roc_auc} PR-AUC {report.pooled_pr_auc} "
          f"over {report.instance_count} explanations", file=sys.stderr)
    return EXIT_OK


MODES = (KernelMode.BOW, KernelMode.EMBEDDING, KernelMode.HYBRID)


def ablate_one(rec: InstanceRecord, run_seed: int, cfg: RunConfig, backends) -> Outcome:
    """Generate one neighborhood, then fit it under every kernel mode."""
    def body() -> Outcome:
        seed = derive_seed(run_seed, rec.id)
        inst = build_instance(rec, backends.classifier, cfg)
        ecfg = ExplainConfig(cfg.prompt_spec, replace(cfg.sampling, seed=seed), cfg.generation, lam=cfg.lam)
        _, _, gen = generate_for(inst, backends.classifier, backends.llm, ecfg)
        per_mode = {}
        for mode in MODES:
            nbhd, fit = fit_neighborhood(gen.neighborhood, backends.embedder, mode, cfg.lam)
            per_mode[mode] = explanation_from_fit(inst, fit, METHOD_TAG, run_seed, nbhd.dropped)
        return Outcome(rec, run_seed, None, gen.stats, extra=per_mode)

    return run_guarded(rec, run_seed, body)


def cmd_ablate(args) -> int:
    cfg = _load_run_config(args)
    datasets = [(Path(p).stem, read_instances(p)) for p in args.instances]
    if len({name for name, _ in datasets}) != len(datasets):
        raise InputError("instance files must have distinct names; each name is one dataset column")
    for name, recs in datasets:
        missing = [r.id for r in recs if r.rationale is None]
        if missing:
            raise InputError(f"{name}: ablation needs rationales; missing for {missing[:5]}")
    backends = build_backends(cfg, offline=args.offline or None, cache_dir=args.cache_dir)
    register_references(backends.classifier, [r for _, recs in datasets for r in recs])
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    jobs = [(rec, s, cfg, backends) for _, recs in datasets for s in cfg.seeds for rec in recs]
    outcomes = run_parallel(ablate_one, jobs, cfg.parallel)
    by_dataset: dict[str, tuple[list[InstanceRecord], list[Outcome]]] = {}
    pos = 0
    for name, recs in datasets:
        n = len(recs) * len(cfg.seeds)
        by_dataset[name] = (recs, outcomes[pos:pos + n])
        pos += n

    rows = []
    for mode in MODES:
        row: dict[str, Any] = {"kernel": mode.value}
        reports = {}
        for name, (recs, outs) in by_dataset.items():
            exps = [o.extra[mode] for o in outs if o.ok]
            rats = {r.id: BinaryRationale(r.rationale) for r in recs}
            write_jsonl(out_dir / mode.value / f"{name}.explanations.jsonl", [e.to_dict() for e in exps])
            rep = evaluation_report(exps, rats, cfg.pooling, cfg.absolute_scores) if exps else None
            reports[name] = None if rep is None else rep.to_dict()
            row[f"{name}_roc_auc"] = None if rep is None else rep.pooled_roc_auc
            row[f"{name}_pr_auc"] = None if rep is None else rep.pooled_pr_auc
        write_json(out_dir / f"report-{mode.value}.json", {"kernel": mode.value, "datasets": reports})
        rows.append(row)

    table = {
        "datasets": [name for name, _ in datasets],
        "columns": ["kernel"] + [f"{n}_{m}" for n, _ in datasets for m in ("roc_auc", "pr_auc")],
        "rows": rows,
        "generation_passes": 1,
        "neighborhoods_generated": sum(o.ok for o in outcomes),
        "llm_calls": sum(o.stats.llm_calls for o in outcomes),
    }
    write_json(out_dir / "ablation.json", table)
    write_jsonl(out_dir / "runlog.jsonl", [runlog_row(o) for o in outcomes])
    report_errors(outcomes, out_dir / "ablation")
    return exit_code(outcomes)


def read_runlog(path: str | Path) -> list[dict]:
    return [obj for _, obj in read_jsonl(path)]


def cmd_stats(args) -> int:
    summary = summarize_stats(read_runlog(args.run_log))
    print(json.dumps(summary, indent=2))
    return EXIT_OK


# ---------------------------------------------------------------- argument parsing

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="limelle", description="Explain text classifiers with LLM-infilled neighborhoods.")
    sub = ap.add_subparsers(dest="command", required=True)

    def run_flags(p):
        p.add_argument("--config", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--method", choices=("lime-llm", "lime-standard"))
        p.add_argument("--kernel", choices=[m.value for m in KernelMode])
        p.add_argument("--seed", type=int)
        p.add_argument("--seeds", help="comma-separated list, e.g. 0,1,2")
        p.add_argument("--parallel", type=int)
        p.add_argument("--cache-dir")
        p.add_argument("--offline", action="store_true", help="never touch the network; serve from cache only")

    p = sub.add_parser("explain", help="explain every instance in a JSONL file")
    run_flags(p)
    p.add_argument("--run-log", help="default: <out>.runlog.jsonl")
    p.add_argument("instances")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("evaluate", help="score explanations against rationales")
    p.add_argument("explanations")
    p.add_argument("rationales")
    p.add_argument("--out", required=True)
    p.add_argument("--curves", help="write pooled ROC/PR curve points as CSV")
    p.add_argument("--pooling", choices=[m.value for m in Pooling], default=Pooling.MICRO.value)
    p.add_argument("--absolute", action="store_true", help="rank tokens by |score|")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="compare kernel modes on one generation pass")
    run_flags(p)
    p.add_argument("instances", nargs="+")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("stats", help="aggregate LLM usage from a run log")
    p.add_argument("run_log")
    p.set_defaults(func=cmd_stats)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BackendError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except LimelleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
