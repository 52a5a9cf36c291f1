"""Concurrent double-spend under random delays: how often do honest dbs disagree?

    python scripts/divergence_sweep.py --seeds 200 --max-delay 1 2 4 8
"""
from __future__ import annotations

import argparse
from collections import Counter

from owncash.scenarios import double_spend_divergence


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seeds", type=int, default=100)
    parser.add_argument("--max-delay", type=int, nargs="+", default=[1, 2, 4, 8])
    args = parser.parse_args()

    print(f"{'max_delay':>9} {'diverged':>9} {'states':>20}")
    for d in args.max_delay:
        states = Counter(double_spend_divergence(seed, d) for seed in range(1, args.seeds + 1))
        diverged = sum(c for k, c in states.items() if k > 1)
        hist = " ".join(f"{k}:{c}" for k, c in sorted(states.items()))
        print(f"{d:>9} {diverged / args.seeds:>9.2%} {hist:>20}")


if __name__ == "__main__":
    main()
