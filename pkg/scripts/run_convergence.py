#!/usr/bin/env python3
"""Threshold-adaptation convergence traces for a five-user cell with
asymmetric lower demands, on a static placement and on a mobile one
(two-dimensional random walk).

Each run leaves the sampled threshold/share/utility trajectory in
adapt_history.csv under <output>/<scenario>/, ready for plotting.
"""
import argparse
import sys
from pathlib import Path

from nomasched import cli

REPO = Path(__file__).resolve().parents[1]
SCENARIOS = {
    "static": "convergence_static.yaml",
    "mobile": "convergence_mobile.yaml",
}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--scenario",
        choices=[*SCENARIOS, "both"],
        default="both",
        help="which placement model to run",
    )
    parser.add_argument("--output", default="out/convergence", help="output directory")
    parser.add_argument("--slots", help="override the slot count (default 5,000,000)")
    parser.add_argument("--seed", help="override the RNG seed")
    args = parser.parse_args()

    names = list(SCENARIOS) if args.scenario == "both" else [args.scenario]
    for name in names:
        argv = [
            "adapt",
            "--config", str(REPO / "configs" / SCENARIOS[name]),
            "--output", str(Path(args.output) / name),
        ]
        if args.slots is not None:
            argv += ["--slots", args.slots]
        if args.seed is not None:
            argv += ["--seed", args.seed]
        print(f"== {name} ==")
        code = cli.main(argv)
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
