#!/usr/bin/env python3
"""Print the most-attended tokens of a transcript under a trained model.

Usage:
    python3 scripts/inspect_attention.py CONFIG MODEL TRANSCRIPT [--top N]

Train a model first, e.g. `alzdetect train configs/default.yaml`, then point
this at any .cha file to see where the attention mass sits.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

import numpy as np

from alzdetect import chat_corpus, lexical_features, model, text_pipeline
from alzdetect.chat_corpus import Label
from alzdetect.cli import _load_resources, load_run_config


def run(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("config")
    parser.add_argument("model")
    parser.add_argument("transcript")
    parser.add_argument("--top", type=int, default=10)
    args = parser.parse_args(argv)

    cfg = load_run_config(args.config)
    params, mcfg = model.load(args.model)
    if not mcfg.use_attention:
        parser.error("that model was trained without attention")
    table, lexicons, tagger = _load_resources(cfg)

    stem = Path(args.transcript).stem
    record = chat_corpus.parse_chat_file(
        Path(args.transcript).read_text(encoding="utf-8"),
        Label.CT, transcript_id=stem, participant_id=stem.split("-")[0])
    instance = lexical_features.encode_record(record, table, lexicons, tagger,
                                              budget=mcfg.seq_len)

    tokens = text_pipeline.fix_length(
        text_pipeline.tokenize(chat_corpus.extract_participant_text(record)),
        mcfg.seq_len).tokens
    alpha = model.attention_weights(params, mcfg, instance)
    prob = model.predict(params, mcfg, [instance])[0]

    print(f"{record.transcript_id}: p(positive) = {prob:.4f}")
    for i in np.argsort(alpha)[::-1][:args.top]:
        if instance.mask[i]:
            print(f"  {alpha[i]:.4f}  [{i:3d}] {tokens[i]}")
    return 0


if __name__ == "__main__":
    sys.exit(run())
