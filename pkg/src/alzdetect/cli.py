"""Command-line entry point.

One YAML config file carries the experiment knobs (paths, seeds, split
fractions, model hyperparameters, synthetic-corpus settings); each
subcommand reads the sections it needs. Unknown config keys are errors.
Every run is deterministic given the config, down to byte-identical CSV
artifacts.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 training
divergence.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import yaml

from . import chat_corpus, evaluation, lexical_features, model, synthgen
from .chat_corpus import ChatParseError, EmptyCorpus, Label, StatsReport
from .evaluation import SplitSpec, TooSmall
from .lexical_features import (
    BadLexiconFile,
    DimensionMismatch,
    EmptyFile,
    MissingLexicon,
)
from .model import CorruptFile, Diverged, ModelConfig, VersionMismatch, ZeroClass
from .synthgen import SynthConfig
from .text_pipeline import EmptyText, PerceptronTaggerModel, default_tagger

OUTPUT_DIR_ENV = "ALZDETECT_OUTPUT_DIR"

DATA_ERRORS = (
    ChatParseError, EmptyCorpus, EmptyText, EmptyFile, DimensionMismatch,
    BadLexiconFile, MissingLexicon, CorruptFile, VersionMismatch, ZeroClass,
    TooSmall, FileNotFoundError, NotADirectoryError, IsADirectoryError,
)


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    corpus_dir: str | None = None
    embeddings: str | None = None
    lexicons: str | None = None
    tagger: str | None = None
    output_dir: str | None = None
    variant: str | None = None
    seeds: tuple[int, ...] = (0, 1, 2)
    split: SplitSpec = SplitSpec()
    model: ModelConfig = ModelConfig()
    synth: SynthConfig = SynthConfig()


def _section(cls, raw: dict, label: str, exclude: tuple[str, ...] = ()):
    if not isinstance(raw, dict):
        raise UsageError(f"config section {label!r} must be a mapping")
    allowed = set(cls.__dataclass_fields__) - set(exclude)
    unknown = set(raw) - allowed
    if unknown:
        raise UsageError(f"unknown {label} keys: {', '.join(sorted(unknown))}")
    try:
        return cls(**raw)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad {label} config: {exc}") from exc


_TOP_KEYS = ("corpus_dir", "embeddings", "lexicons", "tagger", "output_dir",
             "variant", "seeds", "split", "model", "synth")


def load_run_config(path: str | Path) -> RunConfig:
    try:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise UsageError(f"cannot parse config {path}: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise UsageError(f"config {path} must be a mapping")
    unknown = set(raw) - set(_TOP_KEYS)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")

    model_raw = dict(raw.get("model", {}) or {})
    if "feature_mask" in model_raw:
        model_raw["feature_mask"] = tuple(model_raw["feature_mask"])
    cfg = RunConfig(
        corpus_dir=raw.get("corpus_dir"),
        embeddings=raw.get("embeddings"),
        lexicons=raw.get("lexicons"),
        tagger=raw.get("tagger"),
        output_dir=raw.get("output_dir"),
        variant=raw.get("variant"),
        seeds=tuple(raw.get("seeds", (0, 1, 2))),
        split=_section(SplitSpec, raw.get("split", {}) or {}, "split"),
        model=_section(ModelConfig, model_raw, "model"),
        synth=_section(SynthConfig, raw.get("synth", {}) or {}, "synth",
                       exclude=("vocab",)),
    )
    if not cfg.seeds:
        raise UsageError("seeds must list at least one seed")
    if cfg.variant is not None and cfg.variant not in model.VARIANTS:
        raise UsageError(f"unknown variant {cfg.variant!r}; "
                         f"expected one of {', '.join(model.VARIANTS)}")
    return cfg


def _output_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir or os.environ.get(OUTPUT_DIR_ENV, "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require_paths(cfg: RunConfig, *names: str):
    """Fail fast, before any long computation, if an input is missing."""
    missing = []
    for name in names:
        value = getattr(cfg, name)
        if value is None:
            missing.append(f"{name} (not set in config)")
        elif not Path(value).exists():
            missing.append(f"{name}: {value}")
    if missing:
        raise FileNotFoundError("; ".join(missing))


def _model_config(cfg: RunConfig) -> ModelConfig:
    if cfg.variant is not None:
        return model.variant_config(cfg.variant, cfg.model)
    return cfg.model


def _load_resources(cfg: RunConfig):
    table = lexical_features.load_embeddings(cfg.embeddings)
    lexicons = lexical_features.load_lexicon_dir(cfg.lexicons)
    if cfg.tagger is not None:
        tagger = PerceptronTaggerModel.load(cfg.tagger)
    else:
        tagger = default_tagger()
    return table, lexicons, tagger


def _encode(cfg: RunConfig, mcfg: ModelConfig):
    corpus = chat_corpus.load_corpus(cfg.corpus_dir)
    table, lexicons, tagger = _load_resources(cfg)
    if table.dim != mcfg.embed_dim:
        raise DimensionMismatch(
            f"embedding file is {table.dim}-dimensional but the model "
            f"expects {mcfg.embed_dim}")
    instances = lexical_features.encode_corpus(corpus, table, lexicons, tagger,
                                               budget=mcfg.seq_len)
    return corpus, instances


def _stats_table(report: StatsReport) -> str:
    rows = [("", "total", "ad", "ct"),
            ("participants",) + tuple(str(report.n_participants[k])
                                      for k in ("total", "ad", "ct")),
            ("transcripts",) + tuple(str(report.n_transcripts[k])
                                     for k in ("total", "ad", "ct")),
            ("median words",) + tuple(str(report.median_words[k])
                                      for k in ("total", "ad", "ct"))]
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    return "\n".join(
        "  ".join(c.ljust(widths[0]) if i == 0 else c.rjust(widths[i])
                  for i, c in enumerate(row))
        for row in rows)


def _log_csv(log: list[model.TrainLogRow]) -> str:
    lines = ["epoch,train_loss,val_loss,val_auc"]
    lines += [f"{r.epoch},{r.train_loss:.6f},{r.val_loss:.6f},{r.val_auc:.6f}"
              for r in log]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# commands

def _cmd_stats(args) -> int:
    corpus = chat_corpus.load_corpus(args.corpus_dir)
    print(_stats_table(chat_corpus.corpus_stats(corpus)))
    return 0


def _cmd_ingest(args) -> int:
    cfg = RunConfig(output_dir=args.output_dir)
    corpus = chat_corpus.load_corpus(args.corpus_dir)
    out = _output_dir(cfg)
    manifest = out / "manifest.jsonl"
    chat_corpus.write_manifest(corpus, manifest)
    print(_stats_table(chat_corpus.corpus_stats(corpus)))
    print(f"manifest -> {manifest}")
    return 0


def _cmd_synth(args) -> int:
    cfg = load_run_config(args.config)
    out = _output_dir(cfg)
    corpus = synthgen.generate(cfg.synth, out)
    print(_stats_table(chat_corpus.corpus_stats(corpus)))
    print(f"corpus -> {out}")
    return 0


def _cmd_train(args) -> int:
    cfg = load_run_config(args.config)
    _require_paths(cfg, "corpus_dir", "embeddings", "lexicons")
    out = _output_dir(cfg)
    mcfg = replace(_model_config(cfg), seed=cfg.seeds[0])
    _, instances = _encode(cfg, mcfg)
    train, val, _ = evaluation.split(instances,
                                     replace(cfg.split, seed=cfg.seeds[0]))
    params, log = model.fit(mcfg, train, val)
    model_path = out / "model.bin"
    model.save(params, mcfg, model_path)
    (out / "training_log.csv").write_text(_log_csv(log), encoding="utf-8")
    best = min(log, key=lambda r: r.val_loss)
    print(f"trained {len(log)} epochs; best epoch {best.epoch} "
          f"(val loss {best.val_loss:.4f}, val auc {best.val_auc:.4f})")
    print(f"model -> {model_path}")
    return 0


def _cmd_eval(args) -> int:
    cfg = load_run_config(args.config)
    _require_paths(cfg, "corpus_dir", "embeddings", "lexicons")
    if not Path(args.model).exists():
        raise FileNotFoundError(f"model file: {args.model}")
    out = _output_dir(cfg)
    params, mcfg = model.load(args.model)
    _, instances = _encode(cfg, mcfg)
    _, _, test = evaluation.split(instances,
                                  replace(cfg.split, seed=cfg.seeds[0]))
    scores = model.predict(params, mcfg, test)
    labels = np.array([i.label for i in test])
    report = evaluation.metrics(
        evaluation.confusion(labels, model.classify(scores)), scores, labels)
    result = evaluation.ExperimentResult(
        variant=cfg.variant or "model", seeds=(cfg.seeds[0],),
        per_seed=(report,), mean=report,
        feature_dim=len(model.active_feature_indices(mcfg)))
    (out / "eval.csv").write_text(evaluation.results_csv([result]),
                                  encoding="utf-8")
    if "auc" not in report.undefined:
        (out / "roc.csv").write_text(evaluation.roc_csv(labels, scores),
                                     encoding="utf-8")
    print(evaluation.format_table([result]), end="")
    print(f"reports -> {out}")
    return 0


def _cmd_compare(args) -> int:
    cfg = load_run_config(args.config)
    _require_paths(cfg, "corpus_dir", "embeddings", "lexicons")
    out = _output_dir(cfg)
    _, instances = _encode(cfg, cfg.model)
    results = evaluation.compare_variants(instances, list(cfg.seeds),
                                          base=cfg.model, split_spec=cfg.split)
    (out / "compare.csv").write_text(evaluation.results_csv(results),
                                     encoding="utf-8")
    print(evaluation.format_table(results), end="")
    print(f"report -> {out / 'compare.csv'}")
    return 0


def _cmd_ablate(args) -> int:
    cfg = load_run_config(args.config)
    _require_paths(cfg, "corpus_dir", "embeddings", "lexicons")
    out = _output_dir(cfg)
    _, instances = _encode(cfg, cfg.model)
    results = evaluation.ablate(instances, list(cfg.seeds),
                                base=cfg.model, split_spec=cfg.split)
    (out / "ablate.csv").write_text(evaluation.results_csv(results),
                                    encoding="utf-8")
    print(evaluation.format_table(results), end="")
    print(f"report -> {out / 'ablate.csv'}")
    return 0


def _cmd_predict(args) -> int:
    cfg = load_run_config(args.config)
    _require_paths(cfg, "embeddings", "lexicons")
    for p in (args.model, args.transcript):
        if not Path(p).exists():
            raise FileNotFoundError(p)
    params, mcfg = model.load(args.model)
    table, lexicons, tagger = _load_resources(cfg)
    if table.dim != mcfg.embed_dim:
        raise DimensionMismatch(
            f"embedding file is {table.dim}-dimensional but the model "
            f"expects {mcfg.embed_dim}")
    text = Path(args.transcript).read_text(encoding="utf-8")
    # the label on the record is a placeholder; prediction ignores it
    record = chat_corpus.parse_chat_file(
        text, Label.CT, transcript_id=Path(args.transcript).stem,
        participant_id=Path(args.transcript).stem.split("-")[0])
    instance = lexical_features.encode_record(record, table, lexicons, tagger,
                                              budget=mcfg.seq_len)
    prob = model.predict(params, mcfg, [instance])[0]
    label = "AD" if prob >= 0.5 else "CT"
    print(f"{record.transcript_id}\t{prob:.4f}\t{label}")
    return 0


# ---------------------------------------------------------------------------
# parser and entry point

class _ArgumentParser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this project reserves 2 for
    data errors, so remap to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="alzdetect",
        description="Transcript-based dementia classification experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="corpus statistics per label")
    p.add_argument("corpus_dir", help="directory with ad/ and ct/ transcript folders")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("ingest", help="parse a corpus and write its manifest")
    p.add_argument("corpus_dir", help="directory with ad/ and ct/ transcript folders")
    p.add_argument("--output-dir", default=None,
                   help=f"artifact directory (default ${OUTPUT_DIR_ENV} or .)")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("synth", help="generate a synthetic labeled corpus")
    p.add_argument("config", help="YAML config with a synth section")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="train one model on the first seed's split")
    p.add_argument("config", help="YAML config")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model on the test split")
    p.add_argument("config", help="YAML config")
    p.add_argument("--model", required=True, help="model file from train")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("compare", help="run the six-variant comparison")
    p.add_argument("config", help="YAML config")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("ablate", help="run the feature-group ablations")
    p.add_argument("config", help="YAML config")
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("predict", help="classify a single transcript file")
    p.add_argument("config", help="YAML config")
    p.add_argument("--model", required=True, help="model file from train")
    p.add_argument("transcript", help="CHAT transcript file")
    p.set_defaults(func=_cmd_predict)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Diverged as exc:
        print(f"error: training diverged: {exc}", file=sys.stderr)
        return 3
    except DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
