"""Run a scenario config through the CLI; defaults to the full frustrum sweep."""

import argparse
import sys
from pathlib import Path

from pslab.cli import main

ROOT = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("config", nargs="?", default=str(ROOT / "configs" / "sweep_full.json"))
    ap.add_argument("--out", default=str(ROOT / "out" / "sweep"))
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    sys.exit(main(["run", args.config, "--out", args.out, "--jobs", str(args.jobs)]))
