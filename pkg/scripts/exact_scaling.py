"""Oracle calls of the exact routine as the ground set grows at a fixed bound.

Prints one CSV row per size and the log-log slope of calls against n.

    python scripts/exact_scaling.py --sizes 64 128 256 512 1024 --edges 2
"""

import argparse
import csv
import sys
from dataclasses import dataclass

import numpy as np

from subsfm.algorithms import exact_sfm
from subsfm.oracle import CutFunction


@dataclass(frozen=True)
class Config:
    sizes: tuple[int, ...]
    edges: int
    seeds: int
    step: str


def sparse_unit_cut(n, edges, seed):
    """``edges`` distinct unit edges among ``n`` ground vertices plus ``s = n`` and ``t = n + 1``."""
    rng = np.random.default_rng(seed)
    s, t = n, n + 1
    chosen = set()
    while len(chosen) < edges:
        u = int(rng.integers(0, n + 1))
        v = int(rng.integers(0, n + 2))
        if v in (u, s) or u == t:
            continue
        chosen.add((u, v))
    return CutFunction(n + 2, s, t, [(u, v, 1) for u, v in sorted(chosen)])


def run(config: Config, out):
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["n", "seed", "eval_calls", "steps_executed", "value", "elapsed_ms"])
    mean_calls = []
    for n in config.sizes:
        calls = []
        for seed in range(config.seeds):
            f = sparse_unit_cut(n, config.edges, seed)
            rep = exact_sfm(f, f.bound, step=config.step, seed=seed)
            d = rep.to_dict()
            writer.writerow([n, seed, d["eval_calls"], rep.extra["steps_executed"], d["value"], d["elapsed_ms"]])
            calls.append(rep.eval_calls)
        mean_calls.append(np.mean(calls))
    if len(config.sizes) > 1:
        slope = np.polyfit(np.log(config.sizes), np.log(mean_calls), 1)[0]
        print(f"# log-log slope of eval_calls vs n: {slope:.3f}", file=out)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256, 512, 1024])
    parser.add_argument("--edges", type=int, default=2, help="unit edges, so the bound M equals this")
    parser.add_argument("--seeds", type=int, default=3)
    parser.add_argument("--step", choices=("fixed", "theory"), default="fixed")
    args = parser.parse_args(argv)
    run(Config(tuple(args.sizes), args.edges, args.seeds, args.step), sys.stdout)


if __name__ == "__main__":
    main()
