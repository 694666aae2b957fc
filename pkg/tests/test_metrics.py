"""Metric suite: ROUGE, fragments, diversity stats, KDE, Fleiss' kappa."""

from __future__ import annotations

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from surveyforge.corpus import ReferenceDoc, SurveyExample, TargetSections
from surveyforge.metrics import (AgreementTable, Fragment, RougeScore,
                                 compression, corpus_stats, coverage, density,
                                 evaluate_corpus, evaluate_structured,
                                 extractive_fragments, fleiss_kappa,
                                 kde_export, novel_ngrams, rouge_l, rouge_n,
                                 silverman_bandwidth)

# --- ROUGE --------------------------------------------------------------------

def test_rouge_n_identical():
    tokens = "the quick fox".split()
    for n in (1, 2):
        assert rouge_n(tokens, tokens, n) == RougeScore(1.0, 1.0, 1.0)


def test_rouge_n_disjoint():
    assert rouge_n("a b".split(), "c d".split(), 1) == RougeScore(0.0, 0.0, 0.0)


def test_rouge_1_hand_counts():
    score = rouge_n("the cat sat".split(), "the cat ran".split(), 1)
    assert score.precision == pytest.approx(2 / 3)
    assert score.recall == pytest.approx(2 / 3)
    assert score.f1 == pytest.approx(2 / 3)


def test_rouge_n_clips_repeats():
    score = rouge_n("a a a".split(), "a b".split(), 1)
    assert score.precision == pytest.approx(1 / 3)
    assert score.recall == pytest.approx(1 / 2)


def test_rouge_n_empty_inputs_are_zero():
    assert rouge_n([], "a".split(), 1) == RougeScore(0.0, 0.0, 0.0)
    assert rouge_n("a".split(), [], 2) == RougeScore(0.0, 0.0, 0.0)


def test_rouge_n_rejects_bad_n():
    with pytest.raises(ValueError):
        rouge_n(["a"], ["a"], 0)


def test_rouge_l_identical():
    tokens = "a b c".split()
    assert rouge_l(tokens, tokens) == RougeScore(1.0, 1.0, 1.0)


def test_rouge_l_hand_lcs():
    score = rouge_l("a b c d".split(), "a x c y".split())
    assert score == RougeScore(0.5, 0.5, 0.5)


def test_rouge_l_empty_candidate():
    assert rouge_l([], "a b".split()) == RougeScore(0.0, 0.0, 0.0)


@given(st.lists(st.sampled_from("abcd"), max_size=12),
       st.lists(st.sampled_from("abcd"), max_size=12))
def test_rouge_f1_symmetry(a, b):
    for n in (1, 2):
        assert rouge_n(a, b, n).f1 == pytest.approx(rouge_n(b, a, n).f1, abs=1e-12)
    assert rouge_l(a, b).f1 == pytest.approx(rouge_l(b, a).f1, abs=1e-12)


def test_rouge_1_extractive_summary_fully_matches_its_source():
    doc = "w0 w1 w2 w3 w4 w5".split()
    summary = "w2 w3".split()
    # Every summary unigram occurs in the source: the summary side of the
    # overlap is total, whichever argument slot the summary occupies.
    assert rouge_n(summary, doc, 1).precision == 1.0
    assert rouge_n(doc, summary, 1).recall == 1.0


# --- structured evaluation -------------------------------------------------------

def test_evaluate_structured_perfect():
    target = TargetSections(background="a b.", method="c d.", other="e.")
    report = evaluate_structured(target, target)
    for section in ("background", "method", "other", "combined"):
        for metric in ("rouge-1", "rouge-2", "rouge-l"):
            assert report[section][metric].f1 == 1.0


def test_evaluate_structured_empty_section_scores_zero():
    produced = TargetSections(background="", method="c d.", other="e.")
    reference = TargetSections(background="a b.", method="c d.", other="e.")
    report = evaluate_structured(produced, reference)
    assert report["background"]["rouge-1"] == RougeScore(0.0, 0.0, 0.0)
    assert report["combined"]["rouge-1"].recall > 0


def test_evaluate_corpus_is_mean_of_examples():
    ref = TargetSections(background="a b c d.")
    half = TargetSections(background="a b x y.")
    report = evaluate_corpus([(ref, ref), (half, ref)])
    per_example = evaluate_structured(half, ref)["background"]["rouge-1"].f1
    expected = (1.0 + per_example) / 2
    assert report["background"]["rouge-1"].f1 == pytest.approx(expected, abs=1e-12)


def test_evaluate_corpus_rejects_empty():
    with pytest.raises(ValueError):
        evaluate_corpus([])


# --- extractive fragments ---------------------------------------------------------

def test_fragments_hand_case():
    frags = extractive_fragments("a b c d".split(), "b c x".split())
    assert frags == [Fragment(start_in_summary=0, start_in_doc=1, length=2)]


def test_fragments_full_copy():
    doc = "a b c d e".split()
    frags = extractive_fragments(doc, doc)
    assert frags == [Fragment(0, 0, 5)]


def test_fragments_disjoint():
    assert extractive_fragments("a b".split(), "x y".split()) == []


def test_fragments_earliest_doc_position_on_ties():
    frags = extractive_fragments("q a b q a b".split(), "a b".split())
    assert frags == [Fragment(0, 1, 2)]


def _fragments_oracle(doc, summary):
    """Exhaustive longest-match search at every summary position."""
    frags = []
    i = 0
    while i < len(summary):
        best_len, best_pos = 0, -1
        for j in range(len(doc)):
            length = 0
            while (i + length < len(summary) and j + length < len(doc)
                   and summary[i + length] == doc[j + length]):
                length += 1
            if length > best_len:
                best_len, best_pos = length, j
        if best_len > 0:
            frags.append(Fragment(i, best_pos, best_len))
            i += best_len
        else:
            i += 1
    return frags


@given(st.lists(st.sampled_from("ab"), max_size=12),
       st.lists(st.sampled_from("ab"), max_size=12))
@settings(max_examples=300)
def test_fragments_match_bruteforce_oracle(doc, summary):
    assert extractive_fragments(doc, summary) == _fragments_oracle(doc, summary)


@given(st.lists(st.sampled_from("abc"), min_size=1, max_size=12),
       st.lists(st.sampled_from("abc"), min_size=1, max_size=12))
def test_fragment_decomposition_invariants(doc, summary):
    frags = extractive_fragments(doc, summary)
    # Disjoint in the summary, in order.
    end = 0
    for f in frags:
        assert f.start_in_summary >= end
        end = f.start_in_summary + f.length
        assert doc[f.start_in_doc:f.start_in_doc + f.length] == \
            summary[f.start_in_summary:f.start_in_summary + f.length]
    cov = coverage(frags, len(summary))
    dens = density(frags, len(summary))
    assert 0.0 <= cov <= 1.0
    assert dens <= cov * len(summary) + 1e-12
    if len(frags) == 1 and cov == 1.0:
        assert dens == pytest.approx(len(summary))


# --- coverage / density / compression ------------------------------------------

def test_coverage_hand_value():
    frags = extractive_fragments("a b c d".split(), "b c x".split())
    assert coverage(frags, 3) == pytest.approx(2 / 3)


def test_coverage_full_and_empty():
    doc = "a b c".split()
    assert coverage(extractive_fragments(doc, doc), 3) == 1.0
    assert coverage([], 5) == 0.0


def test_density_hand_value():
    frags = extractive_fragments("a b c d".split(), "b c x".split())
    assert density(frags, 3) == pytest.approx(4 / 3)


def test_density_full_copy_equals_length():
    doc = ["t"] * 7 + ["u", "v"]
    assert density(extractive_fragments(doc, doc), len(doc)) == pytest.approx(len(doc))


def test_coverage_density_reject_zero_length():
    with pytest.raises(ValueError):
        coverage([], 0)
    with pytest.raises(ValueError):
        density([], 0)


def test_compression_values():
    assert compression(100, 10) == 10.0
    assert compression(7, 7) == 1.0
    with pytest.raises(ValueError):
        compression(10, 0)


# --- novel n-grams ----------------------------------------------------------------

def test_novel_ngrams_verbatim_summary():
    doc = "a b c d e".split()
    for n in (1, 2, 3):
        assert novel_ngrams("b c d".split(), doc, n) == 0.0


def test_novel_ngrams_fully_novel():
    assert novel_ngrams("x y".split(), "a b".split(), 1) == 100.0


def test_novel_ngrams_hand_bigrams():
    assert novel_ngrams("a b c".split(), "a b d".split(), 2) == 50.0


def test_novel_ngrams_counts_types_not_tokens():
    # "c c" repeats a novel bigram: types {ab, bc(x2 -> 1), ...}
    value = novel_ngrams("a b a b z".split(), "a b".split(), 2)
    # bigram types: {ab, ba, bz}; novel: {ba, bz} -> 2/3
    assert value == pytest.approx(100 * 2 / 3)


def test_novel_ngrams_rejects_short_summary():
    with pytest.raises(ValueError):
        novel_ngrams(["a"], ["a"], 2)


@given(st.lists(st.sampled_from("abc"), min_size=2, max_size=10))
def test_novel_ngrams_of_self_is_zero(tokens):
    for n in (1, 2):
        assert novel_ngrams(tokens, tokens, n) == 0.0


# --- corpus stats -------------------------------------------------------------------

def _stats_example(example_id="e0"):
    docs = [ReferenceDoc.from_raw("d0", "w1 w2 w3 w4. w5 w6."),
            ReferenceDoc.from_raw("d1", "w7 w8 w9.")]
    target = TargetSections(background="w1 w2 w3 w4.", method="", other="nu.")
    return SurveyExample(example_id, docs, target_mds=target)


def test_corpus_stats_single_example_known_counts():
    stats = corpus_stats([_stats_example()])
    assert stats.pairs == 1
    assert stats.words_doc == 12.0  # 4+1 + 2+1 + 3+1 tokens (periods count)
    assert stats.sents_doc == 3.0
    assert stats.words_summary == 7.0
    assert stats.sents_summary == 2.0
    assert stats.input_doc_num == 2.0
    assert stats.compression == pytest.approx(12 / 7)
    # summary tokens: w1 w2 w3 w4 . | nu .  -> fragment "w1 w2 w3 w4 ." (5),
    # "." matches too; "nu" is novel.
    assert stats.coverage == pytest.approx(6 / 7)
    assert stats.novel[1] == pytest.approx(100 / 6)  # types: w1..w4, ., nu


def test_corpus_stats_duplicated_example_same_means():
    one = corpus_stats([_stats_example()])
    two = corpus_stats([_stats_example("a"), _stats_example("b")])
    assert one.coverage == two.coverage
    assert one.density == two.density
    assert one.words_doc == two.words_doc


def test_corpus_stats_three_hand_examples_mean():
    examples = [_stats_example(f"e{i}") for i in range(3)]
    examples[1].target_mds = TargetSections(background="w1 w2.")
    stats = corpus_stats(examples)
    individual = [corpus_stats([e]) for e in examples]
    assert stats.coverage == pytest.approx(
        math.fsum(s.coverage for s in individual) / 3, abs=1e-12)
    assert stats.compression == pytest.approx(
        math.fsum(s.compression for s in individual) / 3, abs=1e-12)


def test_corpus_stats_rejects_empty():
    with pytest.raises(ValueError):
        corpus_stats([])


def test_corpus_stats_abs_target():
    example = _stats_example()
    example.target_mds = None
    example.target_abs = "w1 w2 w3."
    stats = corpus_stats([example])
    assert stats.words_summary == 4.0


# --- KDE ------------------------------------------------------------------------

def test_kde_single_repeated_value_explicit_bandwidth():
    points = kde_export([2.0, 2.0, 2.0], bandwidth=0.5, grid_size=101)
    xs = [x for x, _ in points]
    ds = [d for _, d in points]
    assert xs[0] == pytest.approx(2.0 - 1.5)
    assert xs[-1] == pytest.approx(2.0 + 1.5)
    peak = max(range(len(ds)), key=ds.__getitem__)
    assert xs[peak] == pytest.approx(2.0)
    assert ds == pytest.approx(ds[::-1], abs=1e-12)  # symmetric bell


def test_kde_hand_value_at_midpoint():
    points = kde_export([0.0, 1.0], bandwidth=0.5, grid_size=101)
    at_half = min(points, key=lambda p: abs(p[0] - 0.5))
    expected = (1 / (2 * 0.5 * math.sqrt(2 * math.pi))) * 2 * math.exp(-0.5)
    assert at_half[0] == pytest.approx(0.5)
    assert at_half[1] == pytest.approx(expected, rel=1e-12)


def test_kde_mirrored_data_gives_mirrored_curve():
    values = [0.3, 1.0, 1.1, 2.4]
    left = kde_export(values, bandwidth=0.4, grid_size=64)
    right = kde_export([-v for v in values], bandwidth=0.4, grid_size=64)
    for (x, d), (mx, md) in zip(left, reversed(right)):
        assert x == pytest.approx(-mx, abs=1e-12)
        assert d == pytest.approx(md, abs=1e-12)


def test_kde_constant_input_needs_explicit_bandwidth():
    with pytest.raises(ValueError):
        kde_export([1.0, 1.0, 1.0])


def test_kde_rejects_bad_arguments():
    with pytest.raises(ValueError):
        kde_export([])
    with pytest.raises(ValueError):
        kde_export([1.0, 2.0], bandwidth=-1.0)
    with pytest.raises(ValueError):
        kde_export([1.0, 2.0], grid_size=1)
    with pytest.raises(ValueError):
        silverman_bandwidth([1.0])


def _trapezoid(points):
    total = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        total += (x1 - x0) * (y0 + y1) / 2
    return total


def test_kde_integral_close_to_one_on_random_inputs():
    rng = random.Random(99)
    for _ in range(1000):
        n = rng.randint(2, 40)
        scale = 10 ** rng.randint(-2, 3)
        values = [rng.gauss(0, 1) * scale for _ in range(n)]
        if len(set(values)) < 2:
            continue
        points = kde_export(values, grid_size=128)
        assert abs(_trapezoid(points) - 1.0) <= 0.01


# --- Fleiss' kappa -----------------------------------------------------------------

def test_fleiss_kappa_perfect_agreement():
    table = [[3, 0], [0, 3], [3, 0], [0, 3]]
    assert fleiss_kappa(table) == pytest.approx(1.0)


def test_fleiss_kappa_single_category_convention():
    assert fleiss_kappa([[4], [4], [4]]) == 1.0


def test_fleiss_kappa_chance_agreement_is_zero():
    # P_obs: [1, 1, 0, 0] -> 0.5; marginals 0.5/0.5 -> P_exp 0.5.
    table = [[2, 0], [0, 2], [1, 1], [1, 1]]
    assert fleiss_kappa(table) == pytest.approx(0.0, abs=1e-9)


def test_fleiss_kappa_random_tables_match_direct_formula():
    rng = random.Random(13)
    for _ in range(20):
        items, cats, raters = rng.randint(2, 8), rng.randint(2, 5), rng.randint(2, 6)
        rows = []
        for _ in range(items):
            counts = [0] * cats
            for _ in range(raters):
                counts[rng.randrange(cats)] += 1
            rows.append(counts)
        # Direct spreadsheet-style evaluation.
        p_i = [(sum(v * v for v in row) - raters) / (raters * (raters - 1))
               for row in rows]
        p_bar = sum(p_i) / items
        p_j = [sum(row[j] for row in rows) / (items * raters) for j in range(cats)]
        p_e = sum(p * p for p in p_j)
        expected = 1.0 if p_e == 1.0 else (p_bar - p_e) / (1 - p_e)
        assert fleiss_kappa(rows) == pytest.approx(expected, abs=1e-12)


def test_fleiss_kappa_validates_table():
    with pytest.raises(ValueError):
        fleiss_kappa([[2, 0]])  # one item
    with pytest.raises(ValueError):
        fleiss_kappa([[2, 0], [1, 0]])  # ragged rater counts
    with pytest.raises(ValueError):
        fleiss_kappa([[1, 0], [0, 1]])  # single rater
    with pytest.raises(ValueError):
        fleiss_kappa([[2, -1], [1, 0]])  # negative cell


@given(st.integers(min_value=0, max_value=10 ** 9))
def test_fleiss_kappa_bounded(seed):
    rng = random.Random(seed)
    items, cats, raters = rng.randint(2, 6), rng.randint(2, 4), rng.randint(2, 5)
    rows = []
    for _ in range(items):
        counts = [0] * cats
        for _ in range(raters):
            counts[rng.randrange(cats)] += 1
        rows.append(counts)
    value = fleiss_kappa(AgreementTable.from_rows(rows))
    assert -1.0 - 1e-9 <= value <= 1.0 + 1e-9
