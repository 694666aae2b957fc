"""Pipeline configuration.

A flat INI-style file with one section per pipeline concern. Every constant
the under-specified stages need lives here, with a single defaults table
printed by ``surveyforge defaults``. Unknown sections or keys are rejected;
validation reports every violation with its key path.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import json
from dataclasses import dataclass, fields


@dataclass
class PipelineConfig:
    # paths
    raw: str = ""
    corpus: str = ""
    labels: str = ""
    out: str = "out"
    # corpus
    subset: str = "mds"
    max_docs: int = 200
    max_doc_words: int = 200
    body_limit: int = 1024
    min_input_words: int = 1000
    min_target_words: int = 200
    include_abstract_in_body: bool = False
    # classifier
    mode: str = "ssc"
    smoothing: float = 1.0
    # summarizer
    method: str = "lexrank"
    alignment: str = "ca"
    budget_words: int | None = 350
    budget_sentences: int | None = None
    blocking: bool = True
    damping: float = 0.85
    threshold: float = 0.1
    tolerance: float = 1e-8
    max_iters: int = 1000
    fallback: str = "empty"
    # pipeline
    seed: int = 13
    jobs: int = 1

    def semantic_settings(self) -> dict[str, object]:
        """All settings except file locations, with defaults filled in."""
        path_keys = {"raw", "corpus", "labels", "out"}
        return {f.name: getattr(self, f.name) for f in fields(self)
                if f.name not in path_keys}

    def semantic_hash(self) -> str:
        """Hash of everything except file locations; drives stage skipping."""
        blob = json.dumps(self.semantic_settings(), sort_keys=True,
                          separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


# section -> key -> (type tag, default). Type tags: str, int, float, bool,
# optional-int (empty value means unset).
_SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "paths": {
        "raw": ("str", ""),
        "corpus": ("str", ""),
        "labels": ("str", ""),
        "out": ("str", "out"),
    },
    "corpus": {
        "subset": ("str", "mds"),
        "max_docs": ("int", 200),
        "max_doc_words": ("int", 200),
        "body_limit": ("int", 1024),
        "min_input_words": ("int", 1000),
        "min_target_words": ("int", 200),
        "include_abstract_in_body": ("bool", False),
    },
    "classifier": {
        "mode": ("str", "ssc"),
        "smoothing": ("float", 1.0),
    },
    "summarizer": {
        "method": ("str", "lexrank"),
        "alignment": ("str", "ca"),
        "budget_words": ("optional-int", 350),
        "budget_sentences": ("optional-int", None),
        "blocking": ("bool", True),
        "damping": ("float", 0.85),
        "threshold": ("float", 0.1),
        "tolerance": ("float", 1e-8),
        "max_iters": ("int", 1000),
        "fallback": ("str", "empty"),
    },
    "pipeline": {
        "seed": ("int", 13),
        "jobs": ("int", 1),
    },
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _parse_value(kind: str, raw: str, path: str,
                 diagnostics: list[str]) -> object | None:
    raw = raw.strip()
    if kind == "str":
        return raw
    if kind == "bool":
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        diagnostics.append(f"{path}: expected on/off, got {raw!r}")
        return None
    if kind == "optional-int" and raw == "":
        return None
    try:
        return int(raw) if kind in ("int", "optional-int") else float(raw)
    except ValueError:
        wanted = "integer" if kind != "float" else "number"
        diagnostics.append(f"{path}: expected {wanted}, got {raw!r}")
        return None


def _check_ranges(cfg: PipelineConfig, diagnostics: list[str]) -> None:
    if cfg.subset not in ("mds", "abs"):
        diagnostics.append("corpus.subset must be mds or abs")
    for key in ("max_docs", "max_doc_words", "body_limit"):
        if getattr(cfg, key) < 1:
            diagnostics.append(f"corpus.{key} must be >= 1")
    for key in ("min_input_words", "min_target_words"):
        if getattr(cfg, key) < 0:
            diagnostics.append(f"corpus.{key} must be >= 0")
    if cfg.mode not in ("ssc", "scc"):
        diagnostics.append("classifier.mode must be ssc or scc")
    if cfg.smoothing <= 0:
        diagnostics.append("classifier.smoothing must be > 0")
    if cfg.method not in ("lexrank", "textrank"):
        diagnostics.append("summarizer.method must be lexrank or textrank")
    if cfg.alignment not in ("ca", "one2many"):
        diagnostics.append("summarizer.alignment must be ca or one2many")
    if cfg.budget_words is None and cfg.budget_sentences is None:
        diagnostics.append("summarizer.budget_words/budget_sentences: set at least one")
    if cfg.budget_words is not None and cfg.budget_words < 1:
        diagnostics.append("summarizer.budget_words must be >= 1")
    if cfg.budget_sentences is not None and cfg.budget_sentences < 1:
        diagnostics.append("summarizer.budget_sentences must be >= 1")
    if not 0.0 < cfg.damping < 1.0:
        diagnostics.append("summarizer.damping out of (0,1)")
    if cfg.threshold < 0:
        diagnostics.append("summarizer.threshold must be >= 0")
    if cfg.tolerance <= 0:
        diagnostics.append("summarizer.tolerance must be > 0")
    if cfg.max_iters < 1:
        diagnostics.append("summarizer.max_iters must be >= 1")
    if cfg.fallback not in ("empty", "full"):
        diagnostics.append("summarizer.fallback must be empty or full")
    if cfg.jobs < 1:
        diagnostics.append("pipeline.jobs must be >= 1")


def validate_config(text: str) -> tuple[PipelineConfig | None, list[str]]:
    """Parse and validate config text.

    Returns (config, []) on success or (None, diagnostics) where each
    diagnostic names the offending key path. Omitted keys take defaults.
    """
    diagnostics: list[str] = []
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        return None, [f"config parse error: {exc}"]
    values: dict[str, object] = {key: default
                                 for section in _SCHEMA.values()
                                 for key, (_, default) in section.items()}
    for section in parser.sections():
        if section not in _SCHEMA:
            diagnostics.append(f"unknown section [{section}]")
            continue
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                diagnostics.append(f"unknown key {section}.{key}")
                continue
            kind = _SCHEMA[section][key][0]
            parsed = _parse_value(kind, raw, f"{section}.{key}", diagnostics)
            if parsed is not None or kind == "optional-int":
                values[key] = parsed
    cfg = PipelineConfig(**values)  # type: ignore[arg-type]
    _check_ranges(cfg, diagnostics)
    if diagnostics:
        return None, diagnostics
    return cfg, []


def load_config(path: str) -> tuple[PipelineConfig | None, list[str]]:
    with open(path, encoding="utf-8") as handle:
        return validate_config(handle.read())


def default_config_text() -> str:
    """Canonical config text with every default filled in."""
    out = io.StringIO()
    for section, keys in _SCHEMA.items():
        out.write(f"[{section}]\n")
        for key, (kind, default) in keys.items():
            if default is None:
                shown = ""
            elif kind == "bool":
                shown = "on" if default else "off"
            else:
                shown = str(default)
            out.write(f"{key} = {shown}\n")
        out.write("\n")
    return out.getvalue().rstrip() + "\n"
