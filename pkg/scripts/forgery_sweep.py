"""Throw randomized forged certificates at a settled network and count acceptances.

    python scripts/forgery_sweep.py --attempts 5000 --seed 3
"""
from __future__ import annotations

import argparse
import time
from collections import Counter

from owncash import adversary
from owncash.scenarios import Settings, World


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--attempts", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args()

    world = World(args.seed, Settings(retain_history=True))
    notes = [world.issue(owner) for owner in (1, 2, 3)]
    world.pay(1, 2, notes[0])
    world.pay(2, 3, notes[0])
    chains = {n: world.db(0).records[n].chain() for n in notes}

    forged = adversary.forgery_campaign(world.rng, chains, args.attempts)
    mark = len(world.sim.deliveries)
    t0 = time.perf_counter()
    world.inject(4, forged)
    elapsed = time.perf_counter() - t0

    results = Counter(str(d.result) for d in world.sim.deliveries[mark:])
    for result, count in results.most_common():
        print(f"{count:>7}  {result}")
    print(f"{args.attempts} forgeries, {sum(results.values())} deliveries in {elapsed:.2f}s")


if __name__ == "__main__":
    main()
