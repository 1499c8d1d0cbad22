"""Mean subgradient queries needed to identify a hidden set, per strategy and size.

    python scripts/lowerbound_table.py --sizes 32 64 128 --trials 10000
"""

import argparse
import csv
import sys
from dataclasses import dataclass

from subsfm.lowerbound import STRATEGIES, first_pivot_sample, geometric_chisquare, simulate_recognizer


@dataclass(frozen=True)
class Config:
    sizes: tuple[int, ...]
    trials: int
    seed: int


def run(config: Config, out):
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["n", "strategy", "mean_queries", "std", "n_over_4", "reveals_per_query", "flagged"])
    for n in config.sizes:
        for name in sorted(STRATEGIES):
            res = simulate_recognizer(name, n, config.seed + n, config.trials)
            writer.writerow([n, name, f"{res.mean:.3f}", f"{res.std:.3f}", n / 4,
                             f"{res.reveals_per_query:.3f}", res.flagged])
    test = geometric_chisquare(first_pivot_sample(max(config.sizes), 100_000, config.seed))
    print(f"# first-pivot chi-square against 2^-k: statistic {test.statistic:.2f}, p = {test.pvalue:.3f}",
          file=out)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[32, 64, 128])
    parser.add_argument("--trials", type=int, default=10_000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    run(Config(tuple(args.sizes), args.trials, args.seed), sys.stdout)


if __name__ == "__main__":
    main()
