"""Command-line entry point.

One subcommand per pipeline stage plus `run` (the whole pipeline), `kappa`,
and `defaults`. Global flags: --config, --seed, --jobs, --quiet. Stage
subcommands read and write the same line-delimited files the pipeline uses,
so the two routes are interchangeable.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import classify as classify_mod
from . import corpus as corpus_mod
from . import metrics as metrics_mod
from .config import PipelineConfig, default_config_text, load_config
from .pipeline import (KDE_FILE, STATS_FILE, StageError, _atomic_write,
                       _stage_align, _stage_classify, _stage_evaluate,
                       _stage_preprocess, _stage_stats, _stage_summarize,
                       run_pipeline)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="surveyforge",
        description="Structured multi-document summarization of paper "
                    "abstracts: corpus tools, alignment, extractive "
                    "baselines, and metrics.")
    parser.add_argument("--config", help="pipeline config file (INI)")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--jobs", type=int, help="worker processes per stage")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="build a corpus file from raw topic folders")
    p.add_argument("--raw", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--subset", choices=("mds", "abs"))
    p.add_argument("--include-abstract-in-body", action="store_true", default=None)

    p = sub.add_parser("preprocess", help="truncate, filter, and split a corpus")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-docs", type=int)
    p.add_argument("--max-doc-words", type=int)
    p.add_argument("--body-limit", type=int)
    p.add_argument("--min-input-words", type=int)
    p.add_argument("--min-target-words", type=int)
    p.add_argument("--seed", dest="stage_seed", type=int,
                   help="shuffle seed for the train/validation/test split")

    p = sub.add_parser("train-classifier", help="fit a sentence classifier")
    p.add_argument("--mode", choices=("ssc", "scc"), required=True)
    p.add_argument("--train", required=True, help="labeled sentences (JSONL)")
    p.add_argument("--smoothing", type=float)
    p.add_argument("--out", required=True)

    p = sub.add_parser("classify", help="label corpus sentences; build target sections")
    p.add_argument("--model", help="model for input-doc sentences")
    p.add_argument("--scc-model", help="model for intro sentences (target side)")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("align", help="export (source, target) section pairs")
    p.add_argument("--mode", choices=("ca", "one2many"), required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fallback", choices=("empty", "full"))

    p = sub.add_parser("summarize", help="produce structured extractive summaries")
    p.add_argument("--method", choices=("lexrank", "textrank"))
    p.add_argument("--alignment", choices=("ca", "one2many"))
    p.add_argument("--budget-words", type=int)
    p.add_argument("--budget-sentences", type=int)
    p.add_argument("--blocking", choices=("on", "off"))
    p.add_argument("--threshold", type=float)
    p.add_argument("--damping", type=float)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", help="score summaries against references")
    p.add_argument("--pred", required=True, help="summaries file")
    p.add_argument("--ref", required=True, help="reference corpus")
    p.add_argument("--out", required=True)

    p = sub.add_parser("stats", help="corpus statistics and KDE export")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kde-out")

    p = sub.add_parser("kappa", help="Fleiss' kappa of a ratings table")
    p.add_argument("--in", dest="infile", required=True,
                   help="CSV: one item per line, comma-separated category counts")

    sub.add_parser("defaults", help="print the full default config")

    p = sub.add_parser("run", help="run the whole pipeline from a config")
    p.add_argument("--out", help="output directory (default: paths.out)")
    return parser


def _load_cfg(args: argparse.Namespace) -> PipelineConfig:
    if args.config:
        cfg, diagnostics = load_config(args.config)
        if cfg is None:
            raise ConfigInvalid(diagnostics)
    else:
        cfg = PipelineConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.jobs is not None:
        cfg.jobs = args.jobs
    return cfg


class ConfigInvalid(Exception):
    def __init__(self, diagnostics: list[str]):
        super().__init__("invalid config")
        self.diagnostics = diagnostics


def _override(cfg: PipelineConfig, args: argparse.Namespace,
              mapping: dict[str, str]) -> None:
    for arg_name, cfg_name in mapping.items():
        value = getattr(args, arg_name, None)
        if value is not None:
            setattr(cfg, cfg_name, value)


def _cmd_ingest(cfg: PipelineConfig, args: argparse.Namespace) -> int:
    _override(cfg, args, {"subset": "subset",
                          "include_abstract_in_body": "include_abstract_in_body"})
    examples = corpus_mod.ingest_raw(
        args.raw, subset=cfg.subset,
        include_abstract_in_body=cfg.include_abstract_in_body,
        intro_fallback_words=cfg.body_limit)
    if not examples:
        raise StageError("ingest", f"no topics found under {args.raw}")
    text = "".join(corpus_mod.dumps_example(e) + "\n" for e in examples)
    _atomic_write(Path(args.out), text)
    if not args.quiet:
        print(f"ingest: {len(examples)} examples -> {args.out}")
    return 0


def _cmd_preprocess(cfg: PipelineConfig, args: argparse.Namespace) -> int:
    _override(cfg, args, {"max_docs": "max_docs", "max_doc_words": "max_doc_words",
                          "body_limit": "body_limit",
                          "min_input_words": "min_input_words",
                          "min_target_words": "min_target_words",
                          "stage_seed": "seed"})
    _atomic_write(Path(args.out), _stage_preprocess(cfg, Path(args.infile)))
    return 0


def _cmd_train(cfg: PipelineConfig, args: argparse.Namespace) -> int:
    smoothing = args.smoothing if args.smoothing is not None else cfg.smoothing
    groups = classify_mod.load_labeled_sentences(args.train)
    pairs = classify_mod.build_training_pairs(groups, args.mode)
    if not pairs:
        raise StageError("train-classifier", f"no training sentences in {args.train}")
    model = classify_mod.train(pairs, smoothing=smoothing, mode=args.mode)
    classify_mod.save_model(model, args.out)
    if not args.quiet:
        print(f"train-classifier: {len(pairs)} sentences, "
              f"|V|={len(model.vocabulary)} -> {args.out}")
    return 0


def _cmd_classify(cfg: PipelineConfig, args: argparse.Namespace) -> int:
    ssc_path = scc_path = None
    if args.model:
        model = classify_mod.load_model(args.model)
        cfg.mode = model.mode
        if model.mode == "ssc":
            ssc_path = Path(args.model)
        else:
            scc_path = Path(args.model)
    if args.scc_model:
        scc_path = Path(args.scc_model)
    _atomic_write(Path(args.out),
                  _stage_classify(cfg, Path(args.infile), ssc_path, scc_path))
    return 0


def _cmd_align(cfg: PipelineConfig, args: argparse.Namespace) -> int:
    cfg.alignment = args.mode
    _override(cfg, args, {"fallback": "fallback"})
    _atomic_write(Path(args.out), _stage_align(cfg, Path(args.infile)))
    return 0


def _cmd_summarize(cfg: PipelineConfig, args: argparse.Namespace) -> int:
    _override(cfg, args, {"method": "method", "alignment": "alignment",
                          "budget_words": "budget_words",
                          "budget_sentences": "budget_sentences",
                          "threshold": "threshold", "damping": "damping"})
    if args.blocking is not None:
        cfg.blocking = args.blocking == "on"
    _atomic_write(Path(args.out),
                  _stage_summarize(cfg, Path(args.infile), cfg.jobs))
    return 0


def _cmd_evaluate(cfg: PipelineConfig, args: argparse.Namespace) -> int:
    _atomic_write(Path(args.out), _stage_evaluate(Path(args.ref), Path(args.pred)))
    return 0


def _cmd_stats(cfg: PipelineConfig, args: argparse.Namespace) -> int:
    produced = _stage_stats(Path(args.infile))
    _atomic_write(Path(args.out), produced[STATS_FILE])
    if args.kde_out:
        _atomic_write(Path(args.kde_out), produced[KDE_FILE])
    return 0


def _cmd_kappa(cfg: PipelineConfig, args: argparse.Namespace) -> int:
    rows = []
    with open(args.infile, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            rows.append([int(cell) for cell in line.split(",")])
    print(metrics_mod.fleiss_kappa(rows))
    return 0


def _cmd_run(cfg: PipelineConfig, args: argparse.Namespace) -> int:
    run_pipeline(cfg, out_dir=args.out, quiet=args.quiet)
    return 0


_HANDLERS = {
    "ingest": _cmd_ingest,
    "preprocess": _cmd_preprocess,
    "train-classifier": _cmd_train,
    "classify": _cmd_classify,
    "align": _cmd_align,
    "summarize": _cmd_summarize,
    "evaluate": _cmd_evaluate,
    "stats": _cmd_stats,
    "kappa": _cmd_kappa,
    "run": _cmd_run,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "defaults":
        print(default_config_text(), end="")
        return 0
    try:
        cfg = _load_cfg(args)
        return _HANDLERS[args.command](cfg, args)
    except ConfigInvalid as exc:
        for diagnostic in exc.diagnostics:
            print(f"config: {diagnostic}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
