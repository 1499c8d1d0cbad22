"""Command-line harness: ``subsfm run --alg NAME (--instance PATH | --gen SPEC) ...``.

Exit status is 0 on success, 2 on usage errors and 1 when an instance file
is unreadable or an instance breaks a promised property.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import algorithms, lowerbound, verify
from .oracle import (ContractViolation, CountingOracle, CutFunction, DomainError, InstanceFormatError,
                     LowerBoundFunction, ScaledFunction, load_instance, random_cut_instance,
                     random_table_instance)

log = logging.getLogger("subsfm")

ALGORITHMS = ("exact", "approx", "sparse-exact", "sparse-approx", "mult", "mincut", "lowerbound", "verify")
REPORT_FIELDS = ("algorithm", "minimizer", "value", "eval_calls", "iterations", "batches", "seed", "elapsed_ms")

GENERATORS = {
    "cut": {"n": int, "density": float, "wmax": int, "seed": int},
    "table": {"n": int, "wmax": int, "items": int, "seed": int, "unit": int, "integer": int, "nonpositive": int},
    "lb": {"n": int, "seed": int},
}


class UsageError(Exception):
    pass


def parse_generator(spec: str) -> tuple[str, dict]:
    """``name:key=value,...`` with every key checked against the generator."""
    name, _, rest = spec.partition(":")
    if name not in GENERATORS:
        raise UsageError(f"unknown generator {name!r}; choose from {sorted(GENERATORS)}")
    fields = GENERATORS[name]
    params = {}
    for item in filter(None, rest.split(",")):
        key, eq, raw = item.partition("=")
        key = key.strip()
        if not eq:
            raise UsageError(f"generator parameter {item!r} is not key=value")
        if key not in fields:
            raise UsageError(f"unknown key {key!r} for generator {name!r}; allowed: {sorted(fields)}")
        try:
            params[key] = fields[key](raw)
        except ValueError:
            raise UsageError(f"bad value {raw!r} for {name}:{key}") from None
    if "n" not in params:
        raise UsageError(f"generator {name!r} needs n")
    return name, params


def build_generated(name: str, params: dict, seed: int):
    seed = params.get("seed", seed)
    n = params["n"]
    if name == "cut":
        return random_cut_instance(n, params.get("density", 0.3), params.get("wmax", 3), seed)
    if name == "table":
        return random_table_instance(
            n, seed, weight_max=params.get("wmax", 3), items=params.get("items"),
            unit=bool(params.get("unit", 0)), integer=bool(params.get("integer", 1)),
            nonpositive=bool(params.get("nonpositive", 0)))
    rng = np.random.default_rng(seed)
    hidden = np.flatnonzero(rng.random(n) < 0.5).tolist()
    return LowerBoundFunction(hidden, n)


@dataclass(frozen=True)
class RunConfig:
    algorithm: str
    instance: str | None
    generator: str | None
    eps: float | None
    M: float | None
    s: int | None
    delta: float | None
    seed: int
    trials: int
    out: str
    step: str
    strategy: str

    def validate(self):
        need = {
            "exact": ("M",), "sparse-exact": ("M", "s"),
            "approx": ("eps",), "sparse-approx": ("eps", "s"),
            "mincut": ("eps",), "mult": ("delta",),
        }.get(self.algorithm, ())
        missing = [k for k in need if getattr(self, k) is None]
        if missing:
            raise UsageError(f"--alg {self.algorithm} requires " + ", ".join(f"--{k}" for k in missing))
        if (self.instance is None) == (self.generator is None):
            raise UsageError("give exactly one of --instance and --gen")
        if self.trials < 1:
            raise UsageError("--trials must be at least 1")

    def load(self):
        if self.instance is not None:
            return load_instance(self.instance)
        name, params = parse_generator(self.generator)
        return build_generated(name, params, self.seed)


def _scaled_for_approx(f):
    """Approximate routines need ``|f| <= 1``; larger instances are divided by their bound."""
    bound = float(f.bound)
    if bound <= 1:
        return f, 1.0
    return ScaledFunction(f, bound), bound


def run_trial(config: RunConfig, trial: int) -> dict:
    f = config.load()
    seed = config.seed + trial
    alg = config.algorithm
    if alg in ("exact", "sparse-exact"):
        rep = algorithms.exact_sfm(f, config.M, step=config.step,
                                   sparsity=config.s if alg == "sparse-exact" else None, seed=seed)
    elif alg in ("approx", "sparse-approx"):
        g, scale = _scaled_for_approx(f)
        oracle = CountingOracle(g)
        rep = algorithms.approx_sfm(oracle, config.eps, seed,
                                    sparsity=config.s if alg == "sparse-approx" else None)
        rep.value = rep.value * scale
    elif alg == "mult":
        rep = algorithms.multiplicative_approx(f, config.delta, seed)
    elif alg == "mincut":
        if not isinstance(f, CutFunction):
            raise UsageError("--alg mincut needs a cut instance")
        rep = algorithms.mincut_sgd(f, config.eps, seed)
    else:
        raise UsageError(f"--alg {alg} is not a per-trial algorithm")
    out = rep.to_dict()
    log.info("trial %d: value=%s eval_calls=%d", trial, out["value"], out["eval_calls"])
    return out


def _emit(rows, fields, fmt, stream):
    if fmt == "json":
        for row in rows:
            stream.write(json.dumps(row, sort_keys=True) + "\n")
        return
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        cells = []
        for k in fields:
            v = row.get(k)
            cells.append(" ".join(map(str, v)) if isinstance(v, (list, tuple)) else v)
        writer.writerow(cells)


def _lowerbound(config: RunConfig, stream):
    f = config.load()
    if not isinstance(f, LowerBoundFunction):
        raise UsageError("--alg lowerbound needs an lb instance or generator")
    res = lowerbound.simulate_recognizer(config.strategy, f.n, config.seed, config.trials)
    row = {"n": f.n, "mean_queries": res.mean, "std": res.std, "strategy": res.strategy,
           "trials": res.trials, "flagged": res.flagged}
    fields = ("n", "mean_queries", "std") if config.out == "csv" else tuple(row)
    _emit([row], fields, config.out, stream)


def _verify(config: RunConfig, stream):
    f = config.load()
    if f.n > 12:
        raise UsageError("--alg verify is limited to n <= 12")
    check = verify.check_submodular(f)
    best = verify.brute_force_min(f)
    witness = None
    if check.witness is not None:
        S, T, i = check.witness
        witness = {"S": sorted(S), "T": sorted(T), "i": i}
    value = float(best.value)
    row = {"n": f.n, "submodular": check.passed, "witness": witness,
           "minimizer": sorted(best.minimizer), "value": int(value) if value.is_integer() else value}
    _emit([row], tuple(row), config.out, stream)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subsfm", description="Submodular function minimization runs.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one algorithm on an instance",
                         epilog="Generators: cut:n=,density=,wmax=,seed=  table:n=,wmax=,items=,unit=,"
                                "integer=,nonpositive=,seed=  lb:n=,seed=.  For approx on instances with "
                                "|f| > 1 the function is divided by its certified bound, so eps is relative "
                                "to that bound; for mincut eps is relative to the total edge weight.")
    run.add_argument("--alg", required=True, choices=ALGORITHMS)
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--instance", help="instance file (cut, table or lb format)")
    src.add_argument("--gen", dest="generator", help="generator spec name:key=value,...")
    run.add_argument("--eps", type=float)
    run.add_argument("--M", type=float, help="certified bound on |f| (exact variants)")
    run.add_argument("--s", type=int, help="sparsity budget (sparse variants)")
    run.add_argument("--delta", type=float, help="relative error (mult)")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--trials", type=int, default=1)
    run.add_argument("--out", choices=("json", "csv"), default="json")
    run.add_argument("--step", choices=("fixed", "theory"), default="fixed",
                     help="step rule for the exact variants")
    run.add_argument("--strategy", choices=sorted(lowerbound.STRATEGIES), default="random",
                     help="recognizer strategy (lowerbound)")
    run.add_argument("--workers", type=int, default=1, help="processes for --trials fan-out")
    return parser


def main(argv=None, stream=None) -> int:
    stream = stream or sys.stdout
    logging.basicConfig(level=os.environ.get("SFM_LOG", "WARNING").upper(), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    fields = {k: getattr(args, k) for k in RunConfig.__dataclass_fields__ if k != "algorithm"}
    config = RunConfig(algorithm=args.alg, **fields)
    try:
        config.validate()
        if config.generator is not None:
            parse_generator(config.generator)
        if config.algorithm == "lowerbound":
            _lowerbound(config, stream)
        elif config.algorithm == "verify":
            _verify(config, stream)
        else:
            if args.workers > 1 and config.trials > 1:
                with ProcessPoolExecutor(max_workers=args.workers) as pool:
                    rows = list(pool.map(run_trial, [config] * config.trials, range(config.trials)))
            else:
                rows = [run_trial(config, t) for t in range(config.trials)]
            _emit(rows, REPORT_FIELDS, config.out, stream)
    except UsageError as exc:
        print(f"subsfm: error: {exc}", file=sys.stderr)
        return 2
    except (InstanceFormatError, ContractViolation, DomainError) as exc:
        print(f"subsfm: {exc}", file=sys.stderr)
        return 1
    return 0
