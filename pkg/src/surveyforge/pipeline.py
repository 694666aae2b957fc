"""Pipeline orchestration: ingest -> preprocess -> train -> classify ->
align -> summarize -> evaluate/stats.

Each stage writes its outputs atomically (temp file + rename) and records
input/output digests in a manifest, so re-running with unchanged inputs and
config skips every stage. All randomness flows from the single config seed;
two runs over the same inputs produce byte-identical outputs.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

from . import align as align_mod
from . import classify as classify_mod
from . import corpus as corpus_mod
from . import metrics as metrics_mod
from . import summarize as summarize_mod
from .config import PipelineConfig

MANIFEST_NAME = "manifest.json"
MANIFEST_FORMAT = "surveyforge-manifest"
MANIFEST_VERSION = 1

RAW_CORPUS = "corpus.raw.jsonl"
PRE_CORPUS = "corpus.pre.jsonl"
LABELED_CORPUS = "corpus.labeled.jsonl"
SSC_MODEL = "model.ssc.json"
SCC_MODEL = "model.scc.json"
PAIRS_FILE = "pairs.jsonl"
SUMMARIES_FILE = "summaries.jsonl"
ROUGE_FILE = "rouge.jsonl"
STATS_FILE = "stats.txt"
KDE_FILE = "kde.csv"


class StageError(Exception):
    """A pipeline stage failed; names the stage and, when known, the example."""

    def __init__(self, stage: str, message: str, example_id: str | None = None):
        self.stage = stage
        self.example_id = example_id
        where = f"{stage}: example {example_id!r}: " if example_id else f"{stage}: "
        super().__init__(where + message)


@dataclass
class StageResult:
    name: str
    skipped: bool
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    note: str = ""


def _sha256_bytes(blob: bytes) -> str:
    return hashlib.sha256(blob).hexdigest()


def digest_path(path: Path) -> str:
    """Content digest of a file, or of a directory tree (sorted paths)."""
    if path.is_dir():
        acc = hashlib.sha256()
        for sub in sorted(p for p in path.rglob("*") if p.is_file()):
            acc.update(str(sub.relative_to(path)).encode("utf-8"))
            acc.update(b"\0")
            acc.update(_sha256_bytes(sub.read_bytes()).encode("ascii"))
            acc.update(b"\0")
        return acc.hexdigest()
    return _sha256_bytes(path.read_bytes())


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _dump_jsonl(records: Iterable[dict]) -> str:
    return "".join(json.dumps(r, ensure_ascii=False, sort_keys=True,
                              separators=(",", ":")) + "\n" for r in records)


def _load_examples(path: Path, stage: str) -> list[corpus_mod.SurveyExample]:
    examples = list(corpus_mod.load_corpus(path))
    if not examples:
        raise StageError(stage, f"no examples in {path}")
    return examples


class _Runner:
    """Runs stages against an output directory with manifest-based skipping."""

    def __init__(self, cfg: PipelineConfig, out_dir: Path,
                 quiet: bool = False, previous: dict | None = None):
        self.cfg = cfg
        self.out = out_dir
        self.quiet = quiet
        self.previous = previous or {}
        self.results: list[StageResult] = []

    def _say(self, message: str) -> None:
        if not self.quiet:
            print(message)

    def _input_key(self, path: Path) -> str:
        # Inputs produced inside the output directory are keyed relative to
        # it, so manifests stay identical across output locations.
        try:
            return str(path.relative_to(self.out))
        except ValueError:
            return str(path)

    def run_stage(self, name: str, inputs: list[Path], outputs: list[str],
                  action: Callable[[], dict[str, str]]) -> StageResult:
        """Execute one stage unless the manifest proves it is up to date.

        ``action`` returns {relative output name: file text}; text is written
        atomically only after the whole stage succeeded.
        """
        input_digests = {self._input_key(p): digest_path(p) for p in inputs}
        prior = self.previous.get(name)
        if prior and prior.get("config") == self.cfg.semantic_hash() \
                and prior.get("inputs") == input_digests:
            out_digests = {}
            for rel in outputs:
                target = self.out / rel
                if not target.is_file():
                    break
                out_digests[rel] = digest_path(target)
            else:
                if out_digests == prior.get("outputs"):
                    result = StageResult(name, skipped=True, inputs=input_digests,
                                         outputs=out_digests)
                    self.results.append(result)
                    self._say(f"{name}: skipped (up to date)")
                    return result
        produced = action()
        tmp_written = []
        try:
            for rel in outputs:
                target = self.out / rel
                tmp = target.with_name(target.name + ".tmp")
                tmp.write_text(produced[rel], encoding="utf-8")
                tmp_written.append((tmp, target))
            for tmp, target in tmp_written:
                os.replace(tmp, target)
        except BaseException:
            for tmp, _ in tmp_written:
                tmp.unlink(missing_ok=True)
            raise
        out_digests = {rel: digest_path(self.out / rel) for rel in outputs}
        result = StageResult(name, skipped=False, inputs=input_digests,
                             outputs=out_digests)
        self.results.append(result)
        self._say(f"{name}: wrote {', '.join(outputs)}")
        return result

    def skip_stage(self, name: str, note: str) -> None:
        self.results.append(StageResult(name, skipped=True, note=note))
        self._say(f"{name}: skipped ({note})")


# ---------------------------------------------------------------------------
# Stage bodies


def _stage_ingest(cfg: PipelineConfig) -> str:
    examples = corpus_mod.ingest_raw(
        cfg.raw, subset=cfg.subset,
        include_abstract_in_body=cfg.include_abstract_in_body,
        intro_fallback_words=cfg.body_limit)
    if not examples:
        raise StageError("ingest", f"no topics found under {cfg.raw}")
    return "".join(corpus_mod.dumps_example(e) + "\n" for e in examples)


def _stage_preprocess(cfg: PipelineConfig, source: Path) -> str:
    examples = _load_examples(source, "preprocess")
    if cfg.subset == "abs":
        truncated = [corpus_mod.truncate_inputs(e, 1, cfg.body_limit)
                     for e in examples]
    else:
        truncated = [corpus_mod.truncate_inputs(e, cfg.max_docs, cfg.max_doc_words)
                     for e in examples]
    kept = [e for e in truncated
            if corpus_mod.filter_example(e, cfg.min_input_words,
                                         cfg.min_target_words).keep]
    if not kept:
        raise StageError("preprocess", "no examples survive the length filters")
    try:
        corpus_mod.split_dataset(kept, cfg.seed)
    except ValueError as exc:
        raise StageError("preprocess", str(exc)) from exc
    return "".join(corpus_mod.dumps_example(e) + "\n" for e in kept)


def _stage_train(cfg: PipelineConfig) -> dict[str, str]:
    groups = classify_mod.load_labeled_sentences(cfg.labels)
    out = {}
    for mode, name in (("ssc", SSC_MODEL), ("scc", SCC_MODEL)):
        pairs = classify_mod.build_training_pairs(groups, mode)
        if not pairs:
            raise StageError("train-classifier", f"no training sentences in {cfg.labels}")
        model = classify_mod.train(pairs, smoothing=cfg.smoothing, mode=mode)
        out[name] = classify_mod.dumps_model(model)
    return out


def _label_docs(example: corpus_mod.SurveyExample,
                model: classify_mod.ClassifierModel | None,
                mode: str) -> None:
    for doc in example.input_docs:
        if doc.labels is not None:
            continue  # external labels pass through untouched
        if model is None:
            raise StageError("classify", "doc has no labels and no model is configured",
                             example.example_id)
        if mode == "ssc":
            labeled = classify_mod.classify_abstract(model, doc)
        else:
            labeled = classify_mod.classify_intro(model, doc.sentences)
        doc.labels = [ls.category for ls in labeled]


def _build_targets(example: corpus_mod.SurveyExample,
                   scc_model: classify_mod.ClassifierModel | None) -> None:
    if example.target_mds is not None or example.intro is None:
        return
    if scc_model is None:
        raise StageError("classify", "intro present but no scc model to build "
                         "target sections", example.example_id)
    sentences = corpus_mod.normalize_sentences(example.intro)
    labeled = classify_mod.classify_intro(scc_model, sentences)
    example.target_mds = corpus_mod.build_target_sections(labeled)


def _stage_classify(cfg: PipelineConfig, source: Path,
                    ssc_path: Path | None, scc_path: Path | None) -> str:
    examples = _load_examples(source, "classify")
    ssc_model = classify_mod.load_model(ssc_path) if ssc_path else None
    scc_model = classify_mod.load_model(scc_path) if scc_path else None
    doc_model = ssc_model if cfg.mode == "ssc" else scc_model
    for example in examples:
        _label_docs(example, doc_model, cfg.mode)
        _build_targets(example, scc_model)
    return "".join(corpus_mod.dumps_example(e) + "\n" for e in examples)


def _stage_align(cfg: PipelineConfig, source: Path) -> str:
    examples = _load_examples(source, "align")
    records = []
    for example in examples:
        target = example.target_mds or corpus_mod.TargetSections()
        try:
            docs = [doc.labeled_sentences() for doc in example.input_docs]
        except ValueError as exc:
            raise StageError("align", str(exc), example.example_id) from exc
        if cfg.alignment == "ca":
            pairs = align_mod.category_align(docs, target, fallback=cfg.fallback)
        else:
            pairs = align_mod.one_to_many_align(docs, target)
        for pair in pairs:
            if not pair.target_text:
                continue  # unusable as a training pair
            records.append({
                "example_id": example.example_id,
                "category": pair.category.value,
                "source_text": pair.source_text,
                "target_text": pair.target_text,
                "fallback_used": pair.fallback_used,
            })
    return _dump_jsonl(records)


def _summarize_one(payload: tuple[corpus_mod.SurveyExample, dict]) -> dict:
    example, settings = payload
    try:
        sections, combined = summarize_mod.summarize_structured(example, **settings)
    except (ValueError, summarize_mod.ConvergenceError) as exc:
        # RuntimeError survives worker-process pickling; StageError would not.
        raise RuntimeError(f"example {example.example_id!r}: {exc}") from exc
    return {
        "example_id": example.example_id,
        "background": sections.background,
        "method": sections.method,
        "other": sections.other,
        "combined": combined,
    }


def _stage_summarize(cfg: PipelineConfig, source: Path, jobs: int) -> str:
    examples = _load_examples(source, "summarize")
    budget = summarize_mod.SummaryBudget(max_words=cfg.budget_words,
                                         max_sentences=cfg.budget_sentences)
    settings = dict(method=cfg.method, alignment=cfg.alignment, budget=budget,
                    blocking=cfg.blocking, fallback=cfg.fallback,
                    threshold=cfg.threshold, damping=cfg.damping,
                    tolerance=cfg.tolerance, max_iters=cfg.max_iters)
    records = []
    try:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                # map preserves input order: output stays deterministic.
                records = list(pool.map(_summarize_one,
                                        [(e, settings) for e in examples]))
        else:
            records = [_summarize_one((e, settings)) for e in examples]
    except RuntimeError as exc:
        raise StageError("summarize", str(exc)) from exc
    return _dump_jsonl(records)


def _stage_evaluate(source: Path, summaries: Path) -> str:
    examples = {e.example_id: e for e in _load_examples(source, "evaluate")}
    pairs = []
    with open(summaries, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            example = examples.get(record["example_id"])
            if example is None or example.target_mds is None:
                continue
            produced = corpus_mod.TargetSections(
                background=record["background"],
                method=record["method"],
                other=record["other"])
            pairs.append((produced, example.target_mds))
    if not pairs:
        raise StageError("evaluate", "no summaries with reference sections")
    report = metrics_mod.evaluate_corpus(pairs)
    records = []
    for section in metrics_mod.SECTION_KEYS:
        for metric in metrics_mod.ROUGE_METRICS:
            score = report[section][metric]
            records.append({
                "section": section,
                "metric": metric,
                "precision": score.precision,
                "recall": score.recall,
                "f1": score.f1,
                "examples": len(pairs),
            })
    return _dump_jsonl(records)


def _stage_stats(source: Path) -> dict[str, str]:
    examples = _load_examples(source, "stats")
    stats = metrics_mod.corpus_stats(examples)
    kde_lines = ["metric,grid,density"]
    for name, values in (("coverage", stats.coverage_values),
                         ("density", stats.density_values),
                         ("compression", stats.compression_values)):
        try:
            points = metrics_mod.kde_export(values, grid_size=128)
        except ValueError:
            continue  # constant metric: nothing to plot
        kde_lines.extend(f"{name},{x!r},{d!r}" for x, d in points)
    return {STATS_FILE: "\n".join(stats.lines()) + "\n",
            KDE_FILE: "\n".join(kde_lines) + "\n"}


# ---------------------------------------------------------------------------


def _read_manifest(out_dir: Path) -> dict:
    path = out_dir / MANIFEST_NAME
    if not path.is_file():
        return {}
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError:
        return {}
    if payload.get("format") != MANIFEST_FORMAT:
        return {}
    return {stage["name"]: stage for stage in payload.get("stages", [])}


def _write_manifest(out_dir: Path, cfg: PipelineConfig,
                    results: list[StageResult]) -> None:
    payload = {
        "format": MANIFEST_FORMAT,
        "version": MANIFEST_VERSION,
        "config": cfg.semantic_hash(),
        "settings": cfg.semantic_settings(),
        "stages": [{
            "name": r.name,
            "config": cfg.semantic_hash(),
            "inputs": r.inputs,
            "outputs": r.outputs,
            "skipped": r.skipped,
            "note": r.note,
        } for r in results],
    }
    _atomic_write(out_dir / MANIFEST_NAME,
                  json.dumps(payload, ensure_ascii=False, sort_keys=True,
                             indent=1) + "\n")


def run_pipeline(cfg: PipelineConfig, out_dir: str | Path | None = None,
                 quiet: bool = False) -> list[StageResult]:
    """Run every applicable stage; raises StageError on the first failure.

    Outputs land under ``out_dir`` (default: the config's paths.out). A
    manifest written alongside makes identical re-runs a per-stage no-op.
    """
    out = Path(out_dir) if out_dir is not None else Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    runner = _Runner(cfg, out, quiet=quiet, previous=_read_manifest(out))

    if cfg.raw:
        runner.run_stage("ingest", [Path(cfg.raw)], [RAW_CORPUS],
                         lambda: {RAW_CORPUS: _stage_ingest(cfg)})
        corpus_in = out / RAW_CORPUS
    elif cfg.corpus:
        corpus_in = Path(cfg.corpus)
    else:
        raise StageError("ingest", "config sets neither paths.raw nor paths.corpus")

    runner.run_stage("preprocess", [corpus_in], [PRE_CORPUS],
                     lambda: {PRE_CORPUS: _stage_preprocess(cfg, corpus_in)})
    pre = out / PRE_CORPUS

    ssc_path = scc_path = None
    if cfg.labels:
        runner.run_stage("train-classifier", [Path(cfg.labels)],
                         [SSC_MODEL, SCC_MODEL], lambda: _stage_train(cfg))
        ssc_path = out / SSC_MODEL
        scc_path = out / SCC_MODEL

    classify_inputs = [pre] + [p for p in (ssc_path, scc_path) if p]
    runner.run_stage("classify", classify_inputs, [LABELED_CORPUS],
                     lambda: {LABELED_CORPUS:
                              _stage_classify(cfg, pre, ssc_path, scc_path)})
    labeled = out / LABELED_CORPUS

    runner.run_stage("align", [labeled], [PAIRS_FILE],
                     lambda: {PAIRS_FILE: _stage_align(cfg, labeled)})

    runner.run_stage("summarize", [labeled], [SUMMARIES_FILE],
                     lambda: {SUMMARIES_FILE:
                              _stage_summarize(cfg, labeled, cfg.jobs)})
    summaries = out / SUMMARIES_FILE

    has_refs = any(e.target_mds is not None
                   for e in corpus_mod.load_corpus(labeled))
    if has_refs:
        runner.run_stage("evaluate", [labeled, summaries], [ROUGE_FILE],
                         lambda: {ROUGE_FILE: _stage_evaluate(labeled, summaries)})
    else:
        runner.skip_stage("evaluate", "no reference sections in corpus")

    runner.run_stage("stats", [labeled], [STATS_FILE, KDE_FILE],
                     lambda: _stage_stats(labeled))

    _write_manifest(out, cfg, runner.results)
    return runner.results
