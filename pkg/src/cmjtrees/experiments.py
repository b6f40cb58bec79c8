"""Seeded, parallel Monte Carlo experiments comparing simulated trees with nu.

Every trial (or batch of runs) owns the random stream ``(seed, index)``, and
results are reduced in index order, so reports do not depend on how many
worker processes ran them.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .analytic import analytic_nu
from .generators import gen_discrete
from .independence import independence_profile
from .models import ModelSpec, exponential, make_rng
from .simulate import MAX_SIMULATED_NODES, grow_forest

CSV_HEADER = ("trial", "tree_size", "independence", "ratio")
DEFAULT_BATCH = 20_000
FRINGE_TREE_BUDGET = 10**6


def default_threads() -> int:
    """``THREADS`` from the environment, else the number of available cores."""
    env = os.environ.get("THREADS")
    if env:
        return max(1, int(env))
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:  # pragma: no cover - non-Linux
        return max(1, os.cpu_count() or 1)


def _parallel_map(fn: Callable, args: Sequence[tuple], threads: Optional[int]) -> list:
    """``[fn(*a) for a in args]``, optionally across processes; order preserved."""
    threads = default_threads() if threads is None else int(threads)
    if threads < 1:
        raise ValueError("threads must be at least 1")
    if threads == 1 or len(args) <= 1:
        return [fn(*a) for a in args]
    workers = min(threads, len(args))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*args), chunksize=max(1, len(args) // (4 * workers))))


# -- I(T_n) / |T_n| ------------------------------------------------------------


@dataclass(frozen=True)
class TrialRow:
    trial: int
    tree_size: int
    independence: int

    @property
    def ratio(self) -> float:
        return self.independence / self.tree_size


@dataclass(frozen=True)
class TrialReport:
    """Per-trial rows and aggregate statistics of ``I(T_n) / |T_n|``."""

    model: ModelSpec
    n_target: int
    trials: int
    seed: int
    rows: tuple
    mean_ratio: float
    sample_std: float
    std_error: float
    analytic_nu: Optional[float]

    @property
    def abs_deviation(self) -> Optional[float]:
        if self.analytic_nu is None:
            return None
        return abs(self.mean_ratio - self.analytic_nu)

    @property
    def ratios(self) -> np.ndarray:
        return np.array([r.ratio for r in self.rows])

    def within_band(self, band: float = 0.005, sigmas: float = 4.0, bias: bool = True) -> Optional[bool]:
        """Deviation at most ``band`` and at most ``sigmas`` standard errors.

        With ``bias`` an ``O(1/n)`` allowance of ``10 / n`` is added to the
        standard-error bound.  None when no analytic nu is known.
        """
        dev = self.abs_deviation
        if dev is None:
            return None
        slack = 10.0 / self.n_target if bias else 0.0
        return dev <= band and dev <= sigmas * self.std_error + slack

    def verdict(self, sigmas: float = 4.0) -> Optional[bool]:
        """Deviation at most ``sigmas * std_error + 10 / n`` (None without analytic nu)."""
        dev = self.abs_deviation
        if dev is None:
            return None
        return dev <= sigmas * self.std_error + 10.0 / self.n_target

    def aggregate(self) -> dict:
        return {
            "model": self.model.model.value,
            "params": self.model.params(),
            "n_target": self.n_target,
            "trials": self.trials,
            "seed": self.seed,
            "mean_ratio": self.mean_ratio,
            "sample_std": self.sample_std,
            "std_error": self.std_error,
            "analytic_nu": self.analytic_nu,
            "abs_deviation": self.abs_deviation,
        }

    def to_json(self) -> str:
        return json.dumps(self.aggregate(), sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in self.rows:
            writer.writerow((r.trial, r.tree_size, r.independence, repr(r.ratio)))
        return buf.getvalue()

    def write(self, output_dir) -> tuple[Path, Path]:
        """Write ``trials.csv`` and ``aggregate.json`` under ``output_dir``."""
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        rows_path = out / "trials.csv"
        agg_path = out / "aggregate.json"
        rows_path.write_text(self.to_csv())
        agg_path.write_text(self.to_json() + "\n")
        return rows_path, agg_path


def _one_trial(spec: ModelSpec, n: int, seed: int, k: int) -> tuple[int, int]:
    tree = gen_discrete(spec, n, make_rng(seed, k))
    return tree.node_count, independence_profile(tree).tree_i


def run_trials(spec: ModelSpec, n: int, trials: int, seed: int = 0, threads: Optional[int] = None) -> TrialReport:
    """Grow ``trials`` trees of size parameter ``n`` and record ``I(T)/|T|``.

    Trial ``k`` uses the random stream ``(seed, k)``.
    """
    if int(n) < 1:
        raise ValueError("n must be at least 1")
    if int(trials) < 1:
        raise ValueError("trials must be at least 1")
    n, trials = int(n), int(trials)
    results = _parallel_map(_one_trial, [(spec, n, seed, k) for k in range(trials)], threads)
    rows = tuple(TrialRow(k, size, ind) for k, (size, ind) in enumerate(results))
    ratios = np.array([r.ratio for r in rows])
    mean = float(np.sum(ratios) / trials)
    std = float(np.std(ratios, ddof=1)) if trials > 1 else 0.0
    return TrialReport(
        model=spec,
        n_target=n,
        trials=trials,
        seed=seed,
        rows=rows,
        mean_ratio=mean,
        sample_std=std,
        std_error=std / math.sqrt(trials),
        analytic_nu=analytic_nu(spec),
    )


# -- fixed-time and fringe estimates ---------------------------------------------


@dataclass(frozen=True)
class Estimate:
    """A Bernoulli mean with its standard error; unpacks as ``(estimate, std_error)``."""

    estimate: float
    std_error: float
    trials: int
    redraws: int = 0
    extra: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.estimate, self.std_error))

    def within(self, target: float, sigmas: float = 3.0) -> bool:
        return abs(self.estimate - target) <= sigmas * self.std_error


def _bernoulli(hits: int, trials: int, redraws: int = 0) -> Estimate:
    p = hits / trials
    return Estimate(p, math.sqrt(p * (1.0 - p) / trials), trials, redraws)


def _batches(trials: int, batch_size: int) -> list[int]:
    full, rest = divmod(trials, batch_size)
    return [batch_size] * full + ([rest] if rest else [])


def _root_essential_batch(spec: ModelSpec, t: float, size: int, seed: int, b: int, max_nodes: int) -> int:
    rng = make_rng(seed, b)
    forest = grow_forest(spec, np.full(size, float(t)), rng, max_nodes)
    return int(np.count_nonzero(forest.root_essential()))


def estimate_root_essential(
    spec: ModelSpec,
    t: float,
    trials: int,
    seed: int = 0,
    threads: Optional[int] = None,
    batch_size: int = DEFAULT_BATCH,
    max_nodes: int = MAX_SIMULATED_NODES,
) -> Estimate:
    """Fraction of simulated ``T_t`` whose root is essential.

    Runs are grouped in batches of ``batch_size``; batch ``b`` uses the stream
    ``(seed, b)``.

    Raises
    ------
    SizeGuardExceeded
        If one batch grows past ``max_nodes`` nodes in total.
    """
    if not t >= 0:
        raise ValueError("t must be non-negative")
    if int(trials) < 1:
        raise ValueError("trials must be at least 1")
    sizes = _batches(int(trials), int(batch_size))
    hits = _parallel_map(
        _root_essential_batch,
        [(spec, t, size, seed, b, max_nodes) for b, size in enumerate(sizes)],
        threads,
    )
    return _bernoulli(int(sum(hits)), int(trials))


def _fringe_batch(spec: ModelSpec, size: int, seed: int, b: int, t_guard: float, max_nodes: int) -> tuple[int, int]:
    rng = make_rng(seed, b)
    tau = exponential(rng, spec.alpha, size)
    redraws = 0
    heavy = np.flatnonzero(tau > t_guard)
    while heavy.size:
        redraws += heavy.size
        tau[heavy] = exponential(rng, spec.alpha, heavy.size)
        heavy = heavy[tau[heavy] > t_guard]
    forest = grow_forest(spec, tau, rng, max_nodes)
    return int(np.count_nonzero(forest.root_essential())), redraws


def estimate_nu_fringe(
    spec: ModelSpec,
    trials: int,
    seed: int = 0,
    threads: Optional[int] = None,
    batch_size: int = DEFAULT_BATCH,
    tree_budget: int = FRINGE_TREE_BUDGET,
    max_nodes: int = MAX_SIMULATED_NODES,
) -> Estimate:
    """Estimate nu as the probability that the root of ``T_tau`` is essential.

    ``tau ~ Exp(alpha)`` is drawn independently per sample.  Draws above
    ``t_guard = log(tree_budget) / alpha``, where the expected tree size
    exceeds ``tree_budget``, are redrawn; this happens with probability
    ``1 / tree_budget`` and the count is reported as ``redraws``.
    """
    if int(trials) < 1:
        raise ValueError("trials must be at least 1")
    t_guard = math.log(tree_budget) / spec.alpha
    sizes = _batches(int(trials), int(batch_size))
    out = _parallel_map(
        _fringe_batch,
        [(spec, size, seed, b, t_guard, max_nodes) for b, size in enumerate(sizes)],
        threads,
    )
    hits = sum(h for h, _ in out)
    redraws = sum(r for _, r in out)
    est = _bernoulli(hits, int(trials), redraws)
    return Estimate(est.estimate, est.std_error, est.trials, redraws, {"t_guard": t_guard})


# -- convergence in n ---------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    mean: float
    std_error: float
    deviation: Optional[float]


@dataclass(frozen=True)
class ConvergenceTable:
    model: ModelSpec
    rows: tuple
    analytic_nu: Optional[float]

    def deviations_non_increasing(self, sigmas: float = 2.0) -> bool:
        """Each deviation exceeds the previous one by at most ``sigmas`` combined standard errors."""
        for a, b in zip(self.rows, self.rows[1:]):
            if a.deviation is None or b.deviation is None:
                return True
            if b.deviation > a.deviation + sigmas * math.hypot(a.std_error, b.std_error):
                return False
        return True

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("n", "mean", "std_error", "deviation"))
        for r in self.rows:
            writer.writerow((r.n, repr(r.mean), repr(r.std_error), "" if r.deviation is None else repr(r.deviation)))
        return buf.getvalue()


def convergence_table(
    spec: ModelSpec, n_list: Sequence[int], trials: int, seed: int = 0, threads: Optional[int] = None
) -> ConvergenceTable:
    """:func:`run_trials` at each ``n`` in ``n_list`` (same seed for every ``n``)."""
    rows = []
    nu = None
    for n in n_list:
        rep = run_trials(spec, n, trials, seed, threads)
        nu = rep.analytic_nu
        rows.append(ConvergenceRow(int(n), rep.mean_ratio, rep.std_error, rep.abs_deviation))
    return ConvergenceTable(spec, tuple(rows), nu)
