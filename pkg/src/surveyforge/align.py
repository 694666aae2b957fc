"""Alignment of input sentences with summary sections.

Category-based alignment pairs each section of the structured summary with
exactly the input sentences carrying the same coarse category; the
one-to-many baseline pairs every section with the full input. Both are pure
functions over already-labeled sentences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .classify import COARSE_ORDER, CoarseCategory, LabeledSentence
from .corpus import TargetSections
from .text import SentenceRecord

FALLBACK_MODES = ("empty", "full")


@dataclass(frozen=True)
class AlignedPair:
    """One (summary section, merged source text) training/eval unit."""

    category: CoarseCategory
    source_text: str
    target_text: str
    source_sentence_count: int
    fallback_used: bool = False


def partition_by_category(
        docs: Sequence[Sequence[LabeledSentence]],
) -> dict[CoarseCategory, list[SentenceRecord]]:
    """Split all input sentences by coarse category, in (doc, sentence) order.

    The three lists are disjoint and together hold every input sentence.
    """
    parts: dict[CoarseCategory, list[SentenceRecord]] = {c: [] for c in COARSE_ORDER}
    for doc in docs:
        for labeled in doc:
            parts[labeled.coarse].append(labeled.sentence)
    return parts


def _all_sentences(docs: Sequence[Sequence[LabeledSentence]]) -> list[SentenceRecord]:
    return [labeled.sentence for doc in docs for labeled in doc]


def category_align(docs: Sequence[Sequence[LabeledSentence]],
                   target: TargetSections,
                   fallback: str = "empty") -> list[AlignedPair]:
    """Category-based alignment: one pair per coarse category.

    A category with no source sentences triggers the fallback — "empty"
    leaves the source empty, "full" substitutes the whole input — and marks
    the pair's ``fallback_used`` flag either way.
    """
    if fallback not in FALLBACK_MODES:
        raise ValueError(f"category_align: unknown fallback {fallback!r}")
    parts = partition_by_category(docs)
    pairs = []
    for category in COARSE_ORDER:
        sentences = parts[category]
        used_fallback = not sentences
        if used_fallback and fallback == "full":
            sentences = _all_sentences(docs)
        pairs.append(AlignedPair(
            category=category,
            source_text=" ".join(s.text for s in sentences),
            target_text=target.section(category),
            source_sentence_count=len(sentences),
            fallback_used=used_fallback,
        ))
    return pairs


def one_to_many_align(docs: Sequence[Sequence[LabeledSentence]],
                      target: TargetSections) -> list[AlignedPair]:
    """Baseline alignment: every section paired with the full input."""
    sentences = _all_sentences(docs)
    source_text = " ".join(s.text for s in sentences)
    return [AlignedPair(category=category,
                        source_text=source_text,
                        target_text=target.section(category),
                        source_sentence_count=len(sentences))
            for category in COARSE_ORDER]
