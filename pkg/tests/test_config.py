"""Config parsing, validation diagnostics, defaults."""

from __future__ import annotations

from surveyforge.config import (PipelineConfig, default_config_text,
                                validate_config)


def test_minimal_config_fills_defaults():
    cfg, diagnostics = validate_config("[paths]\ncorpus = data.jsonl\n")
    assert diagnostics == []
    assert cfg.corpus == "data.jsonl"
    assert cfg.max_docs == 200
    assert cfg.max_doc_words == 200
    assert cfg.body_limit == 1024
    assert cfg.method == "lexrank"
    assert cfg.damping == 0.85
    assert cfg.budget_words == 350
    assert cfg.seed == 13


def test_damping_out_of_range_is_diagnosed():
    cfg, diagnostics = validate_config("[summarizer]\ndamping = 1.5\n")
    assert cfg is None
    assert "summarizer.damping out of (0,1)" in diagnostics


def test_unknown_key_rejected_with_location():
    cfg, diagnostics = validate_config("[summarizer]\nfoo = 1\n")
    assert cfg is None
    assert any("unknown key summarizer.foo" in d for d in diagnostics)


def test_unknown_section_rejected():
    cfg, diagnostics = validate_config("[surprise]\nx = 1\n")
    assert cfg is None
    assert any("unknown section [surprise]" in d for d in diagnostics)


def test_multiple_violations_all_reported():
    text = "[summarizer]\ndamping = 2\nmethod = magic\n[classifier]\nsmoothing = 0\n"
    cfg, diagnostics = validate_config(text)
    assert cfg is None
    assert len(diagnostics) == 3


def test_type_errors_diagnosed():
    cfg, diagnostics = validate_config("[pipeline]\nseed = soon\n")
    assert cfg is None
    assert any("pipeline.seed" in d for d in diagnostics)


def test_bool_and_optional_values():
    text = ("[summarizer]\nblocking = off\nbudget_words =\n"
            "budget_sentences = 4\n")
    cfg, diagnostics = validate_config(text)
    assert diagnostics == []
    assert cfg.blocking is False
    assert cfg.budget_words is None
    assert cfg.budget_sentences == 4


def test_both_budgets_unset_is_rejected():
    text = "[summarizer]\nbudget_words =\n"
    cfg, diagnostics = validate_config(text)
    assert cfg is None
    assert any("budget" in d for d in diagnostics)


def test_defaults_text_round_trips_to_default_config():
    cfg, diagnostics = validate_config(default_config_text())
    assert diagnostics == []
    assert cfg == PipelineConfig()


def test_semantic_hash_ignores_paths():
    a, _ = validate_config("[paths]\ncorpus = one.jsonl\n")
    b, _ = validate_config("[paths]\ncorpus = two.jsonl\nout = elsewhere\n")
    c, _ = validate_config("[pipeline]\nseed = 99\n")
    assert a.semantic_hash() == b.semantic_hash()
    assert a.semantic_hash() != c.semantic_hash()
