"""Gap between the approximate routine's sample mean and the true minimum on small [-1, 1] tables.

    python scripts/approx_quality.py --sizes 2 4 6 --instances 5 --seeds 30 --eps 0.1
"""

import argparse
import csv
import math
import sys
from dataclasses import dataclass

import numpy as np

from subsfm.algorithms import approx_sfm
from subsfm.oracle import random_table_instance
from subsfm.verify import brute_force_min


@dataclass(frozen=True)
class Config:
    sizes: tuple[int, ...]
    instances: int
    seeds: int
    eps: float


def run(config: Config, out):
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["n", "instance", "opt", "mean_value", "stderr", "gap", "mean_eval_calls", "batches"])
    for n in config.sizes:
        for inst in range(config.instances):
            f = random_table_instance(n, 1000 * n + inst, unit=True, integer=False)
            opt = brute_force_min(f).value
            reps = [approx_sfm(f, config.eps, seed=s) for s in range(config.seeds)]
            values = np.array([r.value for r in reps])
            se = values.std(ddof=1) / math.sqrt(len(values)) if len(values) > 1 else 0.0
            writer.writerow([n, inst, f"{opt:.4f}", f"{values.mean():.4f}", f"{se:.4f}",
                             f"{values.mean() - opt:.4f}", f"{np.mean([r.eval_calls for r in reps]):.0f}",
                             reps[0].batches])


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[2, 4, 6])
    parser.add_argument("--instances", type=int, default=5)
    parser.add_argument("--seeds", type=int, default=30)
    parser.add_argument("--eps", type=float, default=0.1)
    args = parser.parse_args(argv)
    run(Config(tuple(args.sizes), args.instances, args.seeds, args.eps), sys.stdout)


if __name__ == "__main__":
    main()
