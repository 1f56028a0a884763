#!/usr/bin/env python3
"""Throughput-CDF benchmark: five static users with equal lower demands,
scheduled with pairing, against single-user and round-robin arms on paired
channel randomness.

Writes per-arm traces and empirical CDFs ({primary,oma,rr}_{trace,ecdf}.csv),
a summary table, and the effective config into the output directory.
"""
import argparse
import sys
from pathlib import Path

from nomasched import cli

REPO = Path(__file__).resolve().parents[1]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--output", default="out/ecdf", help="output directory")
    parser.add_argument("--slots", help="override the slot count (default 5,000,000)")
    parser.add_argument("--seed", help="override the RNG seed")
    parser.add_argument("--jobs", default="1", help="parallel worker cap")
    args = parser.parse_args()

    argv = [
        "simulate",
        "--config", str(REPO / "configs" / "ecdf_benchmark.yaml"),
        "--output", args.output,
        "--jobs", args.jobs,
    ]
    if args.slots is not None:
        argv += ["--slots", args.slots]
    if args.seed is not None:
        argv += ["--seed", args.seed]
    return cli.main(argv)


if __name__ == "__main__":
    sys.exit(main())
