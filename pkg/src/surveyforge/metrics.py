"""Evaluation and corpus statistics.

ROUGE here is the plain variant: no stemming, no stopword removal (the
tokenizer already lowercases), and ROUGE-L over whole texts. Novel n-grams
are counted over distinct n-gram types. Corpus-level numbers are unweighted
means over examples, and for multi-document examples the "document" is the
in-order concatenation of all input docs.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import SurveyExample, TargetSections
from .text import split_sentences, tokenize

ROUGE_METRICS = ("rouge-1", "rouge-2", "rouge-l")
SECTION_KEYS = ("background", "method", "other", "combined")
NOVEL_NGRAM_ORDERS = (1, 2, 3, 4)


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_pr(cls, precision: float, recall: float) -> "RougeScore":
        if precision + recall > 0:
            f1 = 2 * precision * recall / (precision + recall)
        else:
            f1 = 0.0
        return cls(precision, recall, f1)


ZERO_ROUGE = RougeScore(0.0, 0.0, 0.0)


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: Sequence[str], reference: Sequence[str], n: int) -> RougeScore:
    """Clipped n-gram overlap F-score. Zero counts give zero scores."""
    if n < 1:
        raise ValueError(f"rouge_n: n must be >= 1, got {n}")
    cand = _ngram_counts(candidate, n)
    ref = _ngram_counts(reference, n)
    total_cand = sum(cand.values())
    total_ref = sum(ref.values())
    if total_cand == 0 or total_ref == 0:
        return ZERO_ROUGE
    overlap = sum(min(count, ref[gram]) for gram, count in cand.items() if gram in ref)
    return RougeScore.from_pr(overlap / total_cand, overlap / total_ref)


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        curr = [0]
        best = 0
        for j, y in enumerate(b, start=1):
            if x == y:
                best = prev[j - 1] + 1
            elif prev[j] > curr[j - 1]:
                best = prev[j]
            else:
                best = curr[j - 1]
            curr.append(best)
        prev = curr
    return prev[-1]


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> RougeScore:
    """Longest-common-subsequence F-score over whole token sequences."""
    if not candidate or not reference:
        return ZERO_ROUGE
    lcs = _lcs_length(candidate, reference)
    return RougeScore.from_pr(lcs / len(candidate), lcs / len(reference))


def rouge_all(candidate: Sequence[str], reference: Sequence[str]) -> dict[str, RougeScore]:
    return {
        "rouge-1": rouge_n(candidate, reference, 1),
        "rouge-2": rouge_n(candidate, reference, 2),
        "rouge-l": rouge_l(candidate, reference),
    }


def evaluate_structured(produced: TargetSections,
                        reference: TargetSections) -> dict[str, dict[str, RougeScore]]:
    """Per-section and combined ROUGE-1/2/L for one example.

    The combined row scores the two background-method-other concatenations
    against each other.
    """
    report = {}
    for key in ("background", "method", "other"):
        report[key] = rouge_all(tokenize(getattr(produced, key)),
                                tokenize(getattr(reference, key)))
    report["combined"] = rouge_all(tokenize(produced.combined()),
                                   tokenize(reference.combined()))
    return report


def evaluate_corpus(pairs: Iterable[tuple[TargetSections, TargetSections]],
                    ) -> dict[str, dict[str, RougeScore]]:
    """Unweighted mean of per-example scores, field by field."""
    sums: dict[str, dict[str, list[float]]] = {
        s: {m: [0.0, 0.0, 0.0] for m in ROUGE_METRICS} for s in SECTION_KEYS}
    count = 0
    for produced, reference in pairs:
        report = evaluate_structured(produced, reference)
        for section in SECTION_KEYS:
            for metric in ROUGE_METRICS:
                score = report[section][metric]
                cell = sums[section][metric]
                cell[0] += score.precision
                cell[1] += score.recall
                cell[2] += score.f1
        count += 1
    if count == 0:
        raise ValueError("evaluate_corpus: no examples")
    return {s: {m: RougeScore(*(v / count for v in sums[s][m]))
                for m in ROUGE_METRICS}
            for s in SECTION_KEYS}


# ---------------------------------------------------------------------------
# Extractive fragments and the diversity measures built on them


@dataclass(frozen=True)
class Fragment:
    """A maximal shared token span between summary and document."""

    start_in_summary: int
    start_in_doc: int
    length: int


def extractive_fragments(doc: Sequence[str], summary: Sequence[str]) -> list[Fragment]:
    """Greedy left-to-right fragment decomposition.

    At each summary position take the longest match starting there against
    any document position (earliest document position on ties), emit it, and
    continue after it; positions matching nothing yield no fragment.
    """
    positions: dict[str, list[int]] = defaultdict(list)
    for j, token in enumerate(doc):
        positions[token].append(j)
    fragments = []
    n_doc = len(doc)
    n_sum = len(summary)
    i = 0
    while i < n_sum:
        best_len = 0
        best_pos = -1
        for j in positions.get(summary[i], ()):  # ascending: earliest tie wins
            length = 1
            while (i + length < n_sum and j + length < n_doc
                   and summary[i + length] == doc[j + length]):
                length += 1
            if length > best_len:
                best_len = length
                best_pos = j
        if best_len > 0:
            fragments.append(Fragment(i, best_pos, best_len))
            i += best_len
        else:
            i += 1
    return fragments


def coverage(fragments: Sequence[Fragment], summary_length: int) -> float:
    """Fraction of summary words inside an extractive fragment."""
    if summary_length <= 0:
        raise ValueError("coverage: summary_length must be positive")
    return sum(f.length for f in fragments) / summary_length


def density(fragments: Sequence[Fragment], summary_length: int) -> float:
    """Mean fragment length per summary word: sum of squared lengths over length."""
    if summary_length <= 0:
        raise ValueError("density: summary_length must be positive")
    return sum(f.length ** 2 for f in fragments) / summary_length


def compression(doc_word_count: int, summary_word_count: int) -> float:
    """Word ratio between input documents and their target summary."""
    if doc_word_count <= 0 or summary_word_count <= 0:
        raise ValueError("compression: word counts must be positive")
    return doc_word_count / summary_word_count


def novel_ngrams(summary: Sequence[str], doc: Sequence[str], n: int) -> float:
    """Percentage of distinct summary n-gram types absent from the document."""
    if n < 1:
        raise ValueError(f"novel_ngrams: n must be >= 1, got {n}")
    if len(summary) < n:
        raise ValueError(f"novel_ngrams: summary has fewer than {n} tokens")
    summary_grams = set(_ngram_counts(summary, n))
    doc_grams = set(_ngram_counts(doc, n))
    novel = sum(1 for gram in summary_grams if gram not in doc_grams)
    return 100.0 * novel / len(summary_grams)


# ---------------------------------------------------------------------------
# Corpus-level statistics


@dataclass
class CorpusStats:
    pairs: int
    words_doc: float
    sents_doc: float
    words_summary: float
    sents_summary: float
    input_doc_num: float
    coverage: float
    density: float
    compression: float
    novel: dict[int, float | None]
    # Per-example distributions behind the means; the KDE export plots these.
    coverage_values: list[float] = field(default_factory=list, repr=False)
    density_values: list[float] = field(default_factory=list, repr=False)
    compression_values: list[float] = field(default_factory=list, repr=False)

    def lines(self) -> list[str]:
        out = [
            f"pairs: {self.pairs}",
            f"words_doc: {self.words_doc:.1f}",
            f"sents_doc: {self.sents_doc:.1f}",
            f"words_summary: {self.words_summary:.1f}",
            f"sents_summary: {self.sents_summary:.1f}",
            f"input_doc_num: {self.input_doc_num:.1f}",
            f"coverage: {self.coverage:.4f}",
            f"density: {self.density:.4f}",
            f"compression: {self.compression:.4f}",
        ]
        for n in NOVEL_NGRAM_ORDERS:
            value = self.novel.get(n)
            shown = "n/a" if value is None else f"{value:.2f}"
            out.append(f"novel_{n}gram_pct: {shown}")
        return out


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


def example_diversity(example: SurveyExample, target: str = "auto",
                      ) -> tuple[float, float, float, dict[int, float | None]]:
    """Coverage, density, compression, and novel n-gram rates of one example."""
    doc_tokens: list[str] = []
    for doc in example.input_docs:
        for sentence in doc.sentences:
            doc_tokens.extend(sentence.tokens)
    summary_tokens = tokenize(example.target_text(target))
    if not doc_tokens or not summary_tokens:
        raise ValueError(f"example {example.example_id!r}: empty input or target")
    fragments = extractive_fragments(doc_tokens, summary_tokens)
    cov = coverage(fragments, len(summary_tokens))
    dens = density(fragments, len(summary_tokens))
    comp = compression(len(doc_tokens), len(summary_tokens))
    novel: dict[int, float | None] = {}
    for n in NOVEL_NGRAM_ORDERS:
        novel[n] = (novel_ngrams(summary_tokens, doc_tokens, n)
                    if len(summary_tokens) >= n else None)
    return cov, dens, comp, novel


def corpus_stats(examples: Sequence[SurveyExample], target: str = "auto") -> CorpusStats:
    """Dataset-description statistics: unweighted means over examples."""
    if not examples:
        raise ValueError("corpus_stats: empty corpus")
    words_doc, sents_doc, words_sum, sents_sum, doc_num = [], [], [], [], []
    covs, denss, comps = [], [], []
    novel_values: dict[int, list[float]] = {n: [] for n in NOVEL_NGRAM_ORDERS}
    for example in examples:
        words_doc.append(float(example.input_word_count))
        sents_doc.append(float(sum(len(d.sentences) for d in example.input_docs)))
        summary_text = example.target_text(target)
        words_sum.append(float(len(tokenize(summary_text))))
        sents_sum.append(float(len(split_sentences(summary_text))))
        doc_num.append(float(len(example.input_docs)))
        cov, dens, comp, novel = example_diversity(example, target)
        covs.append(cov)
        denss.append(dens)
        comps.append(comp)
        for n, value in novel.items():
            if value is not None:
                novel_values[n].append(value)
    return CorpusStats(
        pairs=len(examples),
        words_doc=_mean(words_doc),
        sents_doc=_mean(sents_doc),
        words_summary=_mean(words_sum),
        sents_summary=_mean(sents_sum),
        input_doc_num=_mean(doc_num),
        coverage=_mean(covs),
        density=_mean(denss),
        compression=_mean(comps),
        novel={n: (_mean(vals) if vals else None)
               for n, vals in novel_values.items()},
        coverage_values=covs,
        density_values=denss,
        compression_values=comps,
    )


# ---------------------------------------------------------------------------
# Kernel density estimation (for coverage/density/compression plots)


def silverman_bandwidth(values: Sequence[float]) -> float:
    """Silverman's rule of thumb; needs >= 2 values with nonzero variance."""
    n = len(values)
    if n < 2:
        raise ValueError("silverman_bandwidth: need at least 2 values")
    arr = np.asarray(values, dtype=float)
    std = float(arr.std(ddof=1))
    if std == 0.0:
        raise ValueError("silverman_bandwidth: zero variance; pass an explicit bandwidth")
    q75, q25 = np.percentile(arr, [75.0, 25.0])
    iqr = float(q75 - q25)
    spread = min(std, iqr / 1.34) if iqr > 0 else std
    return 0.9 * spread * n ** (-0.2)


def kde_export(values: Sequence[float], bandwidth: float | None = None,
               grid_size: int = 512) -> list[tuple[float, float]]:
    """Gaussian kernel density on an even grid spanning [min-3h, max+3h].

    The trapezoidal integral over the grid is 1 within about 0.01 (the
    +-3h padding leaves under 0.3% of kernel mass outside).
    """
    if not values:
        raise ValueError("kde_export: no values")
    if grid_size < 2:
        raise ValueError("kde_export: grid_size must be >= 2")
    h = silverman_bandwidth(values) if bandwidth is None else float(bandwidth)
    if h <= 0:
        raise ValueError("kde_export: bandwidth must be positive")
    arr = np.asarray(values, dtype=float)
    grid = np.linspace(arr.min() - 3 * h, arr.max() + 3 * h, grid_size)
    z = (grid[:, None] - arr[None, :]) / h
    dens = np.exp(-0.5 * z * z).sum(axis=1) / (len(arr) * h * math.sqrt(2 * math.pi))
    return [(float(x), float(d)) for x, d in zip(grid, dens)]


# ---------------------------------------------------------------------------
# Inter-annotator agreement


@dataclass(frozen=True)
class AgreementTable:
    """Items-by-categories rating counts with a constant rater count per item."""

    counts: tuple[tuple[int, ...], ...]
    raters: int

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "AgreementTable":
        if len(rows) < 2:
            raise ValueError("AgreementTable: need at least 2 items")
        widths = {len(row) for row in rows}
        if len(widths) != 1:
            raise ValueError("AgreementTable: ragged rows")
        counts = tuple(tuple(int(v) for v in row) for row in rows)
        if any(v < 0 for row in counts for v in row):
            raise ValueError("AgreementTable: negative count")
        row_sums = {sum(row) for row in counts}
        if len(row_sums) != 1:
            raise ValueError("AgreementTable: rows must all sum to the same rater count")
        raters = row_sums.pop()
        if raters < 2:
            raise ValueError("AgreementTable: need at least 2 raters per item")
        return cls(counts=counts, raters=raters)


def fleiss_kappa(table: AgreementTable | Sequence[Sequence[int]]) -> float:
    """Chance-corrected multi-rater agreement.

    kappa = (P_obs - P_exp) / (1 - P_exp) with the usual per-item observed
    agreement and squared-marginal chance agreement. When every rating falls
    in a single category P_exp is 1 and kappa is defined as 1.
    """
    if not isinstance(table, AgreementTable):
        table = AgreementTable.from_rows(table)
    n_items = len(table.counts)
    r = table.raters
    p_obs = _mean([
        (sum(v * v for v in row) - r) / (r * (r - 1)) for row in table.counts])
    total = n_items * r
    marginals = [sum(row[j] for row in table.counts) / total
                 for j in range(len(table.counts[0]))]
    p_exp = math.fsum(m * m for m in marginals)
    if p_exp == 1.0:
        return 1.0
    return (p_obs - p_exp) / (1.0 - p_exp)
