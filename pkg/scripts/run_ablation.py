#!/usr/bin/env python3
"""Retrain the full model with one targeted-feature group dropped per row.

Uses the same corpus bootstrap as run_comparison.py; writes
<output_dir>/ablate.csv with the No Psych. / No Sent. / No Demo. rows.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from alzdetect.cli import load_run_config, main


def run(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default="configs/default.yaml")
    args = parser.parse_args(argv)

    cfg = load_run_config(args.config)
    corpus_dir = Path(cfg.corpus_dir or ".")
    if not any(corpus_dir.glob("*/*.cha")):
        code = main(["synth", args.config])
        if code:
            return code
    return main(["ablate", args.config])


if __name__ == "__main__":
    sys.exit(run())
