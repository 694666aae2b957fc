"""Graph-based extractive summarization.

Two rankers share one machinery: build a symmetric sentence graph, turn it
into a row-stochastic transition matrix, and power-iterate the damped chain
to its stationary distribution. LexRank connects sentences whose tf-idf
cosine clears a threshold; TextRank weights edges by normalized token
overlap. Selection is greedy by score under a word/sentence budget, with
optional trigram blocking against repetition.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .align import partition_by_category
from .classify import COARSE_ORDER, CoarseCategory
from .corpus import SurveyExample, TargetSections
from .text import SentenceRecord

DEFAULT_THRESHOLD = 0.1
DEFAULT_DAMPING = 0.85
DEFAULT_TOLERANCE = 1e-8
DEFAULT_MAX_ITERS = 1000
DEFAULT_SECTION_WORDS = 350

METHODS = ("lexrank", "textrank")
ALIGNMENTS = ("ca", "one2many")


class ConvergenceError(Exception):
    """Power iteration ran out of iterations; carries the last iterate."""

    def __init__(self, message: str, scores: list[float], residual: float):
        super().__init__(message)
        self.scores = scores
        self.residual = residual


@dataclass(frozen=True)
class SummaryBudget:
    """Selection budget; at least one bound must be set."""

    max_words: int | None = None
    max_sentences: int | None = None

    def __post_init__(self) -> None:
        if self.max_words is None and self.max_sentences is None:
            raise ValueError("SummaryBudget: set max_words and/or max_sentences")
        if self.max_words is not None and self.max_words < 1:
            raise ValueError("SummaryBudget: max_words must be positive")
        if self.max_sentences is not None and self.max_sentences < 1:
            raise ValueError("SummaryBudget: max_sentences must be positive")


@dataclass
class SentenceGraph:
    """Sentences plus a symmetric nonnegative weight matrix, zero diagonal."""

    sentences: list[SentenceRecord]
    weights: np.ndarray


def idf_weights(sentences: Sequence[SentenceRecord]) -> dict[str, float]:
    """Per-example inverse document frequency: log(N / df) over sentences."""
    n = len(sentences)
    df: Counter[str] = Counter()
    for sentence in sentences:
        df.update(set(sentence.tokens))
    return {token: math.log(n / count) for token, count in df.items()}


def tfidf_cosine(a: SentenceRecord, b: SentenceRecord,
                 idf: dict[str, float]) -> float:
    """Cosine similarity of tf-idf vectors; 0 when either vector is zero."""
    tf_a = Counter(a.tokens)
    tf_b = Counter(b.tokens)
    dot = 0.0
    for token, count in tf_a.items():
        if token in tf_b:
            dot += count * tf_b[token] * idf.get(token, 0.0) ** 2
    norm_a = math.sqrt(sum((c * idf.get(t, 0.0)) ** 2 for t, c in tf_a.items()))
    norm_b = math.sqrt(sum((c * idf.get(t, 0.0)) ** 2 for t, c in tf_b.items()))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return dot / (norm_a * norm_b)


def similarity_graph(sentences: Sequence[SentenceRecord],
                     threshold: float = DEFAULT_THRESHOLD) -> SentenceGraph:
    """LexRank graph: binary edges where tf-idf cosine >= threshold.

    With threshold 0 the graph keeps the raw cosine weights instead
    (continuous variant).
    """
    if threshold < 0:
        raise ValueError("similarity_graph: threshold must be >= 0")
    n = len(sentences)
    idf = idf_weights(sentences)
    weights = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            sim = tfidf_cosine(sentences[i], sentences[j], idf)
            if threshold > 0:
                value = 1.0 if sim >= threshold else 0.0
            else:
                value = sim
            weights[i, j] = weights[j, i] = value
    return SentenceGraph(sentences=list(sentences), weights=weights)


def overlap_graph(sentences: Sequence[SentenceRecord]) -> SentenceGraph:
    """TextRank graph: |shared tokens| / (log|Si| + log|Sj|).

    Sentences of length <= 1 contribute no edges (their log length is zero).
    """
    n = len(sentences)
    token_sets = [set(s.tokens) for s in sentences]
    lengths = [len(s.tokens) for s in sentences]
    weights = np.zeros((n, n))
    for i in range(n):
        if lengths[i] <= 1:
            continue
        for j in range(i + 1, n):
            if lengths[j] <= 1:
                continue
            shared = len(token_sets[i] & token_sets[j])
            if shared:
                value = shared / (math.log(lengths[i]) + math.log(lengths[j]))
                weights[i, j] = weights[j, i] = value
    return SentenceGraph(sentences=list(sentences), weights=weights)


def transition_matrix(graph: SentenceGraph) -> np.ndarray:
    """Row-normalize the graph; dangling rows get the uniform distribution."""
    n = len(graph.sentences)
    matrix = np.array(graph.weights, dtype=float, copy=True)
    row_sums = matrix.sum(axis=1)
    for i in range(n):
        if row_sums[i] > 0:
            matrix[i] /= row_sums[i]
        else:
            matrix[i] = 1.0 / n
    return matrix


def stationary_scores(transition: np.ndarray,
                      damping: float = DEFAULT_DAMPING,
                      tolerance: float = DEFAULT_TOLERANCE,
                      max_iters: int = DEFAULT_MAX_ITERS) -> np.ndarray:
    """Stationary distribution of the damped chain, by power iteration.

    Iterates s' = (1-d)/n + d * P^T s from uniform and returns the first
    iterate whose image moves less than ``tolerance`` in the max norm, so
    the returned s satisfies ||M s - s||_inf < tolerance for the damped
    matrix M. Each step preserves sum(s) = 1.
    """
    if not 0.0 < damping < 1.0:
        raise ValueError("stationary_scores: damping must lie in (0, 1)")
    if tolerance <= 0:
        raise ValueError("stationary_scores: tolerance must be positive")
    if max_iters < 1:
        raise ValueError("stationary_scores: max_iters must be positive")
    n = transition.shape[0]
    teleport = (1.0 - damping) / n
    scores = np.full(n, 1.0 / n)
    residual = math.inf
    for _ in range(max_iters):
        nxt = teleport + damping * (transition.T @ scores)
        residual = float(np.max(np.abs(nxt - scores)))
        if residual < tolerance:
            return scores
        scores = nxt
    raise ConvergenceError(
        f"power iteration did not converge in {max_iters} iterations "
        f"(residual {residual:.3e})",
        scores=[float(x) for x in scores], residual=residual)


def lexrank(sentences: Sequence[SentenceRecord],
            threshold: float = DEFAULT_THRESHOLD,
            damping: float = DEFAULT_DAMPING,
            tolerance: float = DEFAULT_TOLERANCE,
            max_iters: int = DEFAULT_MAX_ITERS) -> list[float]:
    """Salience score per sentence from the thresholded similarity graph."""
    if not sentences:
        raise ValueError("lexrank: need at least one sentence")
    graph = similarity_graph(sentences, threshold)
    scores = stationary_scores(transition_matrix(graph), damping, tolerance, max_iters)
    return [float(x) for x in scores]


def textrank(sentences: Sequence[SentenceRecord],
             damping: float = DEFAULT_DAMPING,
             tolerance: float = DEFAULT_TOLERANCE,
             max_iters: int = DEFAULT_MAX_ITERS) -> list[float]:
    """Salience score per sentence from the token-overlap graph."""
    if not sentences:
        raise ValueError("textrank: need at least one sentence")
    graph = overlap_graph(sentences)
    scores = stationary_scores(transition_matrix(graph), damping, tolerance, max_iters)
    return [float(x) for x in scores]


def word_trigrams(tokens: Sequence[str]) -> set[tuple[str, ...]]:
    return {tuple(tokens[i:i + 3]) for i in range(len(tokens) - 2)}


def select(sentences: Sequence[SentenceRecord],
           scores: Sequence[float],
           budget: SummaryBudget,
           blocking: bool = True) -> list[SentenceRecord]:
    """Greedy budgeted selection, returned in original sentence order.

    Candidates are visited by descending score (ties by original index).
    With blocking on, a candidate sharing any word trigram with the
    selection so far is skipped; selection stops at the first candidate
    that would exceed the budget.
    """
    if len(sentences) != len(scores):
        raise ValueError("select: need one score per sentence")
    order = sorted(range(len(sentences)), key=lambda i: (-scores[i], i))
    chosen: list[int] = []
    seen_trigrams: set[tuple[str, str, str]] = set()
    words_used = 0
    for idx in order:
        candidate = sentences[idx]
        if blocking:
            trigrams = word_trigrams(candidate.tokens)
            if trigrams & seen_trigrams:
                continue
        if budget.max_sentences is not None and len(chosen) + 1 > budget.max_sentences:
            break
        if budget.max_words is not None and words_used + len(candidate.tokens) > budget.max_words:
            break
        chosen.append(idx)
        words_used += len(candidate.tokens)
        if blocking:
            seen_trigrams |= trigrams
    return [sentences[i] for i in sorted(chosen)]


def rank_sentences(sentences: Sequence[SentenceRecord], method: str,
                   threshold: float = DEFAULT_THRESHOLD,
                   damping: float = DEFAULT_DAMPING,
                   tolerance: float = DEFAULT_TOLERANCE,
                   max_iters: int = DEFAULT_MAX_ITERS) -> list[float]:
    if method == "lexrank":
        return lexrank(sentences, threshold, damping, tolerance, max_iters)
    if method == "textrank":
        return textrank(sentences, damping, tolerance, max_iters)
    raise ValueError(f"unknown ranking method {method!r}")


def summarize_sentences(sentences: Sequence[SentenceRecord], method: str,
                        budget: SummaryBudget, blocking: bool = True,
                        threshold: float = DEFAULT_THRESHOLD,
                        damping: float = DEFAULT_DAMPING,
                        tolerance: float = DEFAULT_TOLERANCE,
                        max_iters: int = DEFAULT_MAX_ITERS) -> str:
    """Rank, select, and join one sentence pool into a summary string."""
    if not sentences:
        return ""
    scores = rank_sentences(sentences, method, threshold, damping,
                            tolerance, max_iters)
    picked = select(sentences, scores, budget, blocking)
    return " ".join(s.text for s in picked)


def summarize_structured(example: SurveyExample, method: str = "lexrank",
                         alignment: str = "ca",
                         budget: SummaryBudget | None = None,
                         blocking: bool = True,
                         fallback: str = "empty",
                         threshold: float = DEFAULT_THRESHOLD,
                         damping: float = DEFAULT_DAMPING,
                         tolerance: float = DEFAULT_TOLERANCE,
                         max_iters: int = DEFAULT_MAX_ITERS,
                         ) -> tuple[TargetSections, str]:
    """Produce the three summary sections plus their combination.

    Under category-based alignment every input sentence must already carry a
    label; each section summarizes its own category's sentences. Under
    one-to-many all three sections summarize the full input. Returns
    (sections, combined) with the combination in background-method-other
    order.
    """
    if method not in METHODS:
        raise ValueError(f"summarize_structured: unknown method {method!r}")
    if alignment not in ALIGNMENTS:
        raise ValueError(f"summarize_structured: unknown alignment {alignment!r}")
    if budget is None:
        budget = SummaryBudget(max_words=DEFAULT_SECTION_WORDS)

    pools: dict[CoarseCategory, list[SentenceRecord]]
    if alignment == "ca":
        labeled_docs = [doc.labeled_sentences() for doc in example.input_docs]
        pools = partition_by_category(labeled_docs)
        if fallback == "full":
            everything = [ls.sentence for doc in labeled_docs for ls in doc]
            pools = {c: (pool if pool else list(everything))
                     for c, pool in pools.items()}
        elif fallback != "empty":
            raise ValueError(f"summarize_structured: unknown fallback {fallback!r}")
    else:
        everything = [s for doc in example.input_docs for s in doc.sentences]
        pools = {c: everything for c in COARSE_ORDER}

    texts = {}
    for category in COARSE_ORDER:
        texts[category] = summarize_sentences(
            pools[category], method, budget, blocking,
            threshold, damping, tolerance, max_iters)
    sections = TargetSections(background=texts[CoarseCategory.BACKGROUND],
                              method=texts[CoarseCategory.METHOD],
                              other=texts[CoarseCategory.OTHER])
    return sections, sections.combined()
