"""Monte Carlo trials and parameter sweeps over (rank, number of measurements)."""

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from .altmin import AmOptions, run_am
from .core import LrprError, make_rng
from .datagen import gen_lowrank, gen_measurements
from .initialization import random_init, spectral_init
from .metrics import SUCCESS_THRESHOLD, TrialRecord, is_success, relative_error
from .vem import Hyperparameters, VemOptions, run_vem

log = logging.getLogger(__name__)

ALGORITHMS = ("vbl", "am")
INITS = ("spectral", "random")
CSV_HEADER = ["algo", "init", "seed", "trial", "n", "m", "p", "r", "iters",
              "converged", "re", "success", "runtime_ms"]

# substream keys under a trial seed
DATA_STREAM = 0
INIT_STREAM = 1


def trial_seed(master, cell, trial):
    """64-bit seed of one (cell, trial) pair, derived from the master seed."""
    words = np.random.SeedSequence([int(master), int(cell), int(trial)]).generate_state(2)
    return (int(words[0]) << 32) | int(words[1])


def make_instance(seed, n, m, r, p, beta_true=None):
    rng = make_rng(seed, DATA_STREAM)
    x = gen_lowrank(rng, n, m, r)
    return gen_measurements(rng, x, p, beta_true), x


def make_init(ms, init, seed, r):
    if init == "spectral":
        return spectral_init(ms, r)
    if init == "random":
        return random_init(make_rng(seed, INIT_STREAM), ms.n, ms.m)
    raise ValueError(f"unknown init {init!r}")


def run_trial(ms, x, algo, init, seed, max_iter=300, tol=1e-6, compute_elbo=False,
              rank=None, threshold=SUCCESS_THRESHOLD, trial=0, hyper=None):
    """Initialize, solve and score one instance against the ground truth ``x``.

    Numerical failures do not propagate: the record gets ``re = inf`` and
    ``success = False``.
    """
    if algo not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algo!r}")
    r = rank if rank is not None else x.rank_hint
    if r is None:
        raise ValueError("rank must be given when the ground truth has no rank hint")
    start = time.perf_counter()
    iters, converged, re, message = 0, False, math.inf, ""
    try:
        x0 = make_init(ms, init, seed, r)
        if algo == "vbl":
            xhat, _, trace = run_vem(ms, hyper, x0, VemOptions(max_iter, tol, compute_elbo))
        else:
            xhat, trace = run_am(ms, r, x0, AmOptions(max_iter, tol))
        iters, converged = trace.iterations, trace.converged
        re = relative_error(x, xhat)
        if not math.isfinite(re):
            converged, re, message = False, math.inf, "non-finite estimate"
    except (LrprError, np.linalg.LinAlgError, FloatingPointError) as exc:
        message = f"{type(exc).__name__}: {exc}"
        log.warning("trial failed (%s, %s, seed %s): %s", algo, init, seed, message)
    runtime_ms = (time.perf_counter() - start) * 1e3
    return TrialRecord(
        algo=algo, init=init, seed=int(seed), n=ms.n, m=ms.m, p=ms.p, r=int(r),
        iterations=iters, converged=converged, re=re,
        success=math.isfinite(re) and is_success(re, threshold),
        runtime_ms=runtime_ms, trial=trial, threshold=threshold, message=message,
    )


@dataclass
class SweepConfig:
    n: int
    m: int
    ranks: List[int]
    measurements: List[int]
    trials: int
    algorithms: List[str] = field(default_factory=lambda: list(ALGORITHMS))
    inits: List[str] = field(default_factory=lambda: ["spectral"])
    threshold: float = SUCCESS_THRESHOLD
    seed: int = 0
    max_iter: int = 300
    tol: float = 1e-6
    beta_true: Optional[float] = None
    output: Optional[str] = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.ranks or not self.measurements or not self.algorithms or not self.inits:
            raise ValueError("ranks, measurements, algorithms and inits must be nonempty")
        bad = set(self.algorithms) - set(ALGORITHMS) or set(self.inits) - set(INITS)
        if bad:
            raise ValueError(f"unknown entries {sorted(bad)}")
        for r in self.ranks:
            if not 1 <= r <= min(self.n, self.m):
                raise ValueError(f"rank {r} outside [1, {min(self.n, self.m)}]")

    def cells(self):
        return [(r, p) for r in self.ranks for p in self.measurements]

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        data.setdefault("ranks", data.pop("r", None))
        data.setdefault("measurements", data.pop("p", None))
        return cls(**data)

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return asdict(self)


def format_row(rec):
    return {
        "algo": rec.algo,
        "init": rec.init,
        "seed": str(rec.seed),
        "trial": str(rec.trial),
        "n": str(rec.n),
        "m": str(rec.m),
        "p": str(rec.p),
        "r": str(rec.r),
        "iters": str(rec.iterations),
        "converged": "true" if rec.converged else "false",
        "re": repr(float(rec.re)) if math.isfinite(rec.re) else "",
        "success": "true" if rec.success else "false",
        "runtime_ms": f"{rec.runtime_ms:.3f}",
    }


def write_records(path, records):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_HEADER, lineterminator="\n")
        writer.writeheader()
        for rec in records:
            writer.writerow(format_row(rec))


def _sweep_task(args):
    config, cell, trial, todo = args
    r, p = config.cells()[cell]
    seed = trial_seed(config.seed, cell, trial)
    ms, x = make_instance(seed, config.n, config.m, r, p, config.beta_true)
    return [
        run_trial(ms, x, algo, init, seed, config.max_iter, config.tol,
                  rank=r, threshold=config.threshold, trial=trial)
        for algo, init in todo
    ]


def _completed(path):
    done = set()
    if not path.exists() or path.stat().st_size == 0:
        return done
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"{path} exists with a different header; refusing to append")
        for row in reader:
            done.add((row["algo"], row["init"], row["seed"], row["trial"]))
    return done


def run_sweep(config, out=None, jobs=1):
    """Run every (cell, trial, algorithm, init) combination, appending rows to ``out``.

    Rows already in ``out`` are skipped, so an interrupted sweep resumes
    where it stopped. Rows are written in task order regardless of ``jobs``.
    Returns the output path.
    """
    out = Path(out or config.output or "results.csv")
    done = _completed(out)
    combos = [(a, i) for a in config.algorithms for i in config.inits]
    tasks = []
    for cell in range(len(config.cells())):
        for trial in range(config.trials):
            seed = str(trial_seed(config.seed, cell, trial))
            todo = [c for c in combos if (c[0], c[1], seed, str(trial)) not in done]
            if todo:
                tasks.append((config, cell, trial, todo))

    fresh = not done and not (out.exists() and out.stat().st_size > 0)
    with open(out, "a", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_HEADER, lineterminator="\n")
        if fresh:
            writer.writeheader()
            fh.flush()
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                _drain(pool.map(_sweep_task, tasks), writer, fh)
        else:
            _drain(map(_sweep_task, tasks), writer, fh)
    return out


def _drain(results, writer, fh):
    for records in results:
        for rec in records:
            writer.writerow(format_row(rec))
        fh.flush()
