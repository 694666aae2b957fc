"""Shared builders for tests: random sentences, labeled corpora, fixtures."""

from __future__ import annotations

import random
from pathlib import Path

from surveyforge.classify import Category, LabeledSentence
from surveyforge.corpus import ReferenceDoc, SurveyExample, TargetSections
from surveyforge.text import SentenceRecord

DATA_DIR = Path(__file__).parent / "data"

WORDS = [
    "graph", "noise", "model", "signal", "sparse", "kernel", "bound",
    "sample", "rate", "prior", "learn", "deep", "layer", "node", "edge",
    "data", "method", "result", "study", "test", "train", "error", "loss",
]


def make_sentence(rng: random.Random, vocab=WORDS, min_len=3, max_len=9) -> SentenceRecord:
    # Terminal period keeps sentence boundaries recoverable after the
    # sentences are joined into a document string.
    n = rng.randint(min_len, max_len)
    return SentenceRecord.from_tokens([rng.choice(vocab) for _ in range(n)] + ["."])


def make_sentences(rng: random.Random, count: int, **kwargs) -> list[SentenceRecord]:
    return [make_sentence(rng, **kwargs) for _ in range(count)]


def make_labeled_docs(rng: random.Random, n_docs: int,
                      max_sentences: int = 6) -> list[list[LabeledSentence]]:
    categories = list(Category)
    docs = []
    for _ in range(n_docs):
        doc = [LabeledSentence.make(make_sentence(rng), rng.choice(categories))
               for _ in range(rng.randint(1, max_sentences))]
        docs.append(doc)
    return docs


def make_example(rng: random.Random, example_id: str, n_docs: int = 3,
                 sentences_per_doc: int = 4, with_labels: bool = True,
                 with_target: bool = True) -> SurveyExample:
    categories = list(Category)
    docs = []
    for d in range(n_docs):
        sentences = make_sentences(rng, rng.randint(1, sentences_per_doc))
        labels = [rng.choice(categories) for _ in sentences] if with_labels else None
        docs.append(ReferenceDoc(doc_id=f"{example_id}-d{d}",
                                 sentences=sentences, labels=labels))
    target = None
    if with_target:
        target = TargetSections(
            background=make_sentence(rng).text,
            method=make_sentence(rng).text,
            other=make_sentence(rng).text)
    return SurveyExample(example_id=example_id, input_docs=docs, target_mds=target)


def fixture_config_text(out_dir: Path, seed: int = 13, jobs: int = 1) -> str:
    """A pipeline config pointing at the bundled 5-topic fixture."""
    return f"""
[paths]
raw = {DATA_DIR / 'raw'}
labels = {DATA_DIR / 'labeled_sentences.jsonl'}
out = {out_dir}

[corpus]
min_input_words = 200
min_target_words = 60

[summarizer]
budget_words = 80

[pipeline]
seed = {seed}
jobs = {jobs}
"""
