#!/usr/bin/env python3
"""Generate the reference scene and run the full pipeline on it.

Equivalent to:

    landcover synth --spec scenes/reference.json --out out/reference
    landcover pipeline --config configs/reference_pipeline.json

Prints the final OA / AA / kappa and leaves all artifacts in out/reference/.
"""

import argparse
import json
import sys
from pathlib import Path

from landcover.cli import main as cli_main

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "out" / "reference"


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, help="override the pipeline rng_seed")
    args = ap.parse_args()

    rc = cli_main(["synth", "--spec", str(ROOT / "scenes" / "reference.json"),
                   "--out", str(OUT)])
    if rc != 0:
        return rc
    argv = ["pipeline", "--config",
            str(ROOT / "configs" / "reference_pipeline.json")]
    if args.seed is not None:
        argv += ["--seed", str(args.seed)]
    rc = cli_main(argv)
    if rc != 0:
        return rc

    report = json.loads((OUT / "metrics.json").read_text())
    print(json.dumps({k: report[k] for k in ("oa", "aa", "kappa")}, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
