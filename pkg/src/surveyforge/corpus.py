"""Corpus construction: ingestion, normalization, truncation, and splits.

Examples live one per line in a JSON-lines corpus file. Every operation here
is a pure function of its inputs, so workers can process disjoint examples
concurrently; files are streamed record by record.

Record schema (all text already lowercased/normalized once written):
    example_id   string
    input_docs   [{doc_id, abstract, labels?}]   labels: per-sentence category
    target_mds   {background, method, other}     optional
    target_abs   string                          optional
    intro        string                          optional, consumed when
                                                 building target_mds
    split        "train" | "validation" | "test" optional
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .classify import Category, CoarseCategory, LabeledSentence
from .text import SentenceRecord, normalize_sentences, tokenize

MAX_INPUT_DOCS = 200
MAX_DOC_WORDS = 200
SPLIT_NAMES = ("train", "validation", "test")


@dataclass
class ReferenceDoc:
    """One input document: an ordered list of normalized sentences.

    ``labels`` (when present) parallels ``sentences`` with five-way
    categories, either predicted or supplied externally.
    """

    doc_id: str
    sentences: list[SentenceRecord] = field(default_factory=list)
    labels: list[Category] | None = None

    @property
    def word_count(self) -> int:
        return sum(len(s.tokens) for s in self.sentences)

    @property
    def text(self) -> str:
        return " ".join(s.text for s in self.sentences)

    @classmethod
    def from_raw(cls, doc_id: str, raw: str,
                 labels: list[Category] | None = None) -> "ReferenceDoc":
        return cls(doc_id=doc_id, sentences=normalize_sentences(raw), labels=labels)

    def labeled_sentences(self) -> list[LabeledSentence]:
        if self.labels is None:
            raise ValueError(f"doc {self.doc_id!r} has no sentence labels")
        if len(self.labels) != len(self.sentences):
            raise ValueError(
                f"doc {self.doc_id!r}: {len(self.labels)} labels for "
                f"{len(self.sentences)} sentences")
        return [LabeledSentence.make(s, c) for s, c in zip(self.sentences, self.labels)]


@dataclass
class TargetSections:
    """Structured target summary: background / method / other."""

    background: str = ""
    method: str = ""
    other: str = ""

    def section(self, category: CoarseCategory) -> str:
        return getattr(self, category.value)

    def combined(self) -> str:
        return " ".join(s for s in (self.background, self.method, self.other) if s)


@dataclass
class SurveyExample:
    """One topic: input reference documents plus target summaries."""

    example_id: str
    input_docs: list[ReferenceDoc]
    target_mds: TargetSections | None = None
    target_abs: str | None = None
    intro: str | None = None
    split: str | None = None

    @property
    def input_word_count(self) -> int:
        return sum(d.word_count for d in self.input_docs)

    def target_text(self, target: str = "auto") -> str:
        """Pick the evaluation/filter target: mds when present, else abs."""
        if target not in ("auto", "mds", "abs"):
            raise ValueError(f"unknown target {target!r}")
        if target in ("auto", "mds") and self.target_mds is not None:
            return self.target_mds.combined()
        if target == "mds":
            raise ValueError(f"example {self.example_id!r} has no target_mds")
        if self.target_abs is None:
            raise ValueError(f"example {self.example_id!r} has no target_abs")
        return self.target_abs


# ---------------------------------------------------------------------------
# Serialization. `serialize(load(path))` is byte-identical for files written
# by `dumps_example` (canonical form: sorted keys, compact separators).


def example_to_record(example: SurveyExample) -> dict:
    docs = []
    for doc in example.input_docs:
        entry: dict = {"doc_id": doc.doc_id, "abstract": doc.text}
        if doc.labels is not None:
            entry["labels"] = [c.value for c in doc.labels]
        docs.append(entry)
    record: dict = {"example_id": example.example_id, "input_docs": docs}
    if example.target_mds is not None:
        record["target_mds"] = {
            "background": example.target_mds.background,
            "method": example.target_mds.method,
            "other": example.target_mds.other,
        }
    if example.target_abs is not None:
        record["target_abs"] = example.target_abs
    if example.intro is not None:
        record["intro"] = example.intro
    if example.split is not None:
        record["split"] = example.split
    return record


def example_from_record(record: dict) -> SurveyExample:
    by_value = {c.value: c for c in Category}
    docs = []
    for entry in record["input_docs"]:
        labels = None
        if "labels" in entry:
            labels = [by_value[v] for v in entry["labels"]]
        doc = ReferenceDoc.from_raw(str(entry["doc_id"]), entry["abstract"], labels)
        if labels is not None and len(labels) != len(doc.sentences):
            raise ValueError(
                f"doc {entry['doc_id']!r} in example {record.get('example_id')!r}: "
                f"{len(labels)} labels for {len(doc.sentences)} sentences")
        docs.append(doc)
    target_mds = None
    if "target_mds" in record:
        t = record["target_mds"]
        target_mds = TargetSections(background=t.get("background", ""),
                                    method=t.get("method", ""),
                                    other=t.get("other", ""))
    split = record.get("split")
    if split is not None and split not in SPLIT_NAMES:
        raise ValueError(f"example {record.get('example_id')!r}: bad split {split!r}")
    return SurveyExample(
        example_id=str(record["example_id"]),
        input_docs=docs,
        target_mds=target_mds,
        target_abs=record.get("target_abs"),
        intro=record.get("intro"),
        split=split,
    )


def dumps_example(example: SurveyExample) -> str:
    return json.dumps(example_to_record(example), ensure_ascii=False,
                      sort_keys=True, separators=(",", ":"))


def load_corpus(path: str | Path) -> Iterator[SurveyExample]:
    """Stream examples from a JSON-lines corpus file."""
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                yield example_from_record(json.loads(line))


def save_corpus(examples: Iterable[SurveyExample], path: str | Path) -> int:
    """Write examples in canonical form; returns the number written."""
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for example in examples:
            handle.write(dumps_example(example) + "\n")
            count += 1
    return count


# ---------------------------------------------------------------------------
# Raw ingestion: a directory of per-topic folders.
#   topic/refs/*.txt   reference abstracts (one file per paper)
#   topic/intro.txt    survey introduction (target side, mds)
#   topic/abstract.txt survey abstract (target side, abs)
#   topic/body.txt     survey body; fallback intro source / abs-subset input


def _read(path: Path) -> str | None:
    if path.is_file():
        return path.read_text(encoding="utf-8")
    return None


def _strip_abstract_prefix(body: str, abstract: str | None) -> str:
    if not abstract:
        return body
    body_norm = " ".join(body.lower().split())
    abs_norm = " ".join(abstract.lower().split())
    if abs_norm and body_norm.startswith(abs_norm):
        return body_norm[len(abs_norm):].lstrip()
    return body


def normalize_text(raw: str) -> str:
    """Lowercase, re-split, and single-space-join a raw passage."""
    return " ".join(s.text for s in normalize_sentences(raw))


def ingest_raw(raw_dir: str | Path, subset: str = "mds",
               include_abstract_in_body: bool = False,
               intro_fallback_words: int = 1024) -> list[SurveyExample]:
    """Build examples from per-topic folders, in sorted topic order.

    For the mds subset the inputs are the reference abstracts and the target
    side is the introduction (kept in ``intro`` until classification builds
    the sections); when a topic has no intro, the first
    ``intro_fallback_words`` words of the body stand in, with the survey's
    own abstract stripped from the front unless ``include_abstract_in_body``.
    For the abs subset the body is the single input document and the survey
    abstract is the target.
    """
    if subset not in ("mds", "abs"):
        raise ValueError(f"ingest_raw: unknown subset {subset!r}")
    root = Path(raw_dir)
    if not root.is_dir():
        raise ValueError(f"ingest_raw: {root} is not a directory")
    examples = []
    for topic_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        abstract = _read(topic_dir / "abstract.txt")
        intro = _read(topic_dir / "intro.txt")
        body = _read(topic_dir / "body.txt")
        if body is not None and not include_abstract_in_body:
            body = _strip_abstract_prefix(body, abstract)
        if subset == "mds":
            refs_dir = topic_dir / "refs"
            ref_files = sorted(refs_dir.glob("*.txt")) if refs_dir.is_dir() else []
            docs = [ReferenceDoc.from_raw(f.stem, f.read_text(encoding="utf-8"))
                    for f in ref_files]
            if intro is None and body is not None:
                intro = truncate_body(body, intro_fallback_words)
            example = SurveyExample(
                example_id=topic_dir.name,
                input_docs=docs,
                target_abs=normalize_text(abstract) if abstract else None,
                intro=normalize_text(intro) if intro else None,
            )
        else:
            if body is None:
                continue
            example = SurveyExample(
                example_id=topic_dir.name,
                input_docs=[ReferenceDoc.from_raw("body", body)],
                target_abs=normalize_text(abstract) if abstract else None,
            )
        examples.append(example)
    return examples


# ---------------------------------------------------------------------------
# Truncation


def _truncate_doc(doc: ReferenceDoc, max_words: int) -> ReferenceDoc:
    kept: list[SentenceRecord] = []
    kept_labels: list[Category] | None = [] if doc.labels is not None else None
    used = 0
    for i, sentence in enumerate(doc.sentences):
        n = len(sentence.tokens)
        if used + n > max_words:
            remaining = max_words - used
            if remaining > 0:
                # Cut mid-sentence at a token boundary; the partial sentence
                # is kept (truncation is by words, not sentences).
                kept.append(SentenceRecord.from_tokens(sentence.tokens[:remaining]))
                if kept_labels is not None:
                    kept_labels.append(doc.labels[i])
            break
        kept.append(sentence)
        used += n
        if kept_labels is not None:
            kept_labels.append(doc.labels[i])
    return ReferenceDoc(doc_id=doc.doc_id, sentences=kept, labels=kept_labels)


def truncate_inputs(example: SurveyExample,
                    max_docs: int = MAX_INPUT_DOCS,
                    max_doc_words: int = MAX_DOC_WORDS) -> SurveyExample:
    """Keep the first ``max_docs`` documents, each cut to its first
    ``max_doc_words`` word tokens. Idempotent."""
    if max_docs < 1 or max_doc_words < 1:
        raise ValueError("truncate_inputs: caps must be positive")
    docs = [_truncate_doc(d, max_doc_words) for d in example.input_docs[:max_docs]]
    return replace(example, input_docs=docs)


def truncate_body(text: str, limit: int) -> str:
    """First ``limit`` word tokens of a passage, sentence boundaries kept.

    Output is normalized (lowercased, single-spaced); a final partial
    sentence is truncated at a token boundary.
    """
    if limit <= 0:
        raise ValueError(f"truncate_body: limit must be positive, got {limit}")
    kept: list[str] = []
    used = 0
    for sentence in normalize_sentences(text):
        n = len(sentence.tokens)
        if used + n <= limit:
            kept.append(sentence.text)
            used += n
        else:
            remaining = limit - used
            if remaining > 0:
                kept.append(SentenceRecord.from_tokens(sentence.tokens[:remaining]).text)
            break
    return " ".join(kept)


# ---------------------------------------------------------------------------
# Target section construction


def build_target_sections(intro_sentences: Sequence[LabeledSentence]) -> TargetSections:
    """Concatenate intro sentences per coarse category, preserving order.

    Every input sentence lands in exactly one section; empty categories give
    empty sections.
    """
    parts: dict[CoarseCategory, list[str]] = {c: [] for c in CoarseCategory}
    for labeled in intro_sentences:
        parts[labeled.coarse].append(labeled.sentence.text)
    return TargetSections(
        background=" ".join(parts[CoarseCategory.BACKGROUND]),
        method=" ".join(parts[CoarseCategory.METHOD]),
        other=" ".join(parts[CoarseCategory.OTHER]),
    )


# ---------------------------------------------------------------------------
# Filtering and splits


@dataclass(frozen=True)
class FilterDecision:
    keep: bool
    reason: str | None = None


def filter_example(example: SurveyExample,
                   min_input_words: int = 1000,
                   min_target_words: int = 200) -> FilterDecision:
    """Drop examples whose input or target is too short.

    Thresholds default well below the corpus-scale averages, so they only
    remove degenerate records; pass 0 to disable a bound. The target side is
    the structured summary when present, else the abstract; an example still
    waiting on classification falls back to its raw intro.
    """
    if example.input_word_count < min_input_words:
        return FilterDecision(False, "input-too-short")
    if example.target_mds is not None:
        target = example.target_mds.combined()
    elif example.intro is not None:
        target = example.intro
    else:
        target = example.target_abs or ""
    if len(tokenize(target)) < min_target_words:
        return FilterDecision(False, "target-too-short")
    return FilterDecision(True)


def split_dataset(examples: Sequence[SurveyExample], seed: int) -> list[SurveyExample]:
    """Assign train/validation/test tags: 80% / 10% / remainder.

    The shuffle is driven only by the example order and the seed, so the
    assignment is a pure function of (example_id list, seed). Sizes are
    round(0.8 N) and round(0.1 N) with Python round-half-even.
    """
    n = len(examples)
    if n < 3:
        raise ValueError(f"split_dataset: need at least 3 examples, got {n}")
    order = list(range(n))
    random.Random(seed).shuffle(order)
    n_train = round(0.8 * n)
    n_val = round(0.1 * n)
    for rank, idx in enumerate(order):
        if rank < n_train:
            examples[idx].split = "train"
        elif rank < n_train + n_val:
            examples[idx].split = "validation"
        else:
            examples[idx].split = "test"
    return list(examples)
