#!/usr/bin/env python3
"""Run the six-variant comparison end to end.

Generates the synthetic corpus on first use (skipped if corpus_dir already
has transcripts), then trains and evaluates every variant over the
configured seeds. Results land in <output_dir>/compare.csv.
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
    return main(["compare", args.config])


if __name__ == "__main__":
    sys.exit(run())
