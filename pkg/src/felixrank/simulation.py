"""Synthetic queries and sensitivity sweeps of the re-sampling procedure."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import MERIT_FLOOR, ExposureModel, ItemCatalog
from .felix import FelixConfig, ZScoreOutlierPredicate, run_felix
from .lp import OPTIMAL, STRICT, fair_mrp

log = logging.getLogger(__name__)

KINDS = ("uniform", "normal", "lognormal", "powerlaw")


@dataclass(frozen=True)
class FeatureDistribution:
    kind: str
    lognormal_sigma: float = 1.0
    powerlaw_shape: float = 1.5

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown distribution {self.kind!r}; pick one of {KINDS}")
        if self.lognormal_sigma <= 0 or self.powerlaw_shape <= 0:
            raise ValueError("distribution parameters must be positive")

    def draw(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "uniform":
            return rng.random(size)
        if self.kind == "normal":
            return rng.standard_normal(size)
        if self.kind == "lognormal":
            return rng.lognormal(0.0, self.lognormal_sigma, size)
        # classical Pareto with unit scale
        return rng.pareto(self.powerlaw_shape, size) + 1.0


def generate_query(n: int, dist: FeatureDistribution, rng: np.random.Generator,
                   query_id: str = "sim", merit_floor: float = MERIT_FLOOR) -> ItemCatalog:
    """Uniform merits (clamped to the floor) and features drawn from ``dist``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    merits = np.clip(rng.random(n), merit_floor, 1.0)
    features = dist.draw(rng, n)
    return ItemCatalog.from_arrays(query_id, merits, features, merit_floor=merit_floor)


def base_outlier_rate(dist: FeatureDistribution, list_length: int = 10,
                      trials: int = 10**6, lam: float = 2.5,
                      rng: np.random.Generator | None = None,
                      chunk: int = 200_000) -> float:
    """Monte-Carlo probability that an i.i.d. list contains a |z| > lam item."""
    if trials < 10**4:
        raise ValueError("use at least 10^4 trials")
    rng = np.random.default_rng() if rng is None else rng
    hits = 0
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        x = dist.draw(rng, (m, list_length))
        s = x.std(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            z = np.where(s > 0, (x - x.mean(axis=1, keepdims=True)) / s, 0.0)
        hits += int(np.count_nonzero((np.abs(z) > lam).any(axis=1)))
        done += m
    return hits / trials


@dataclass(frozen=True)
class SensitivityRow:
    distribution: str
    x: int
    relative_reduction_pct: float
    queries_used: int
    queries_skipped: int
    infeasible: int = 0


def query_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent stream per (seed, keys); identical under any scheduling."""
    return np.random.default_rng([seed, *keys])


@dataclass(frozen=True)
class _Job:
    dist: FeatureDistribution
    n: int
    k: int
    iterations: int
    lam: float
    seed: int
    dist_index: int
    query: int


def _unknown_trace(job: _Job):
    """Unknown mass after each iteration for one simulated query, or None if infeasible."""
    rng = query_rng(job.seed, job.dist_index, job.n, job.query)
    cat = generate_query(job.n, job.dist, rng, query_id=f"q{job.query}")
    model = ExposureModel.log_discount(job.k)
    report = fair_mrp(cat, model, STRICT)
    if report.status != OPTIMAL:
        return None
    pol = run_felix(report.mrp, cat, ZScoreOutlierPredicate(job.lam, job.k),
                    FelixConfig(job.iterations, seed=int(rng.integers(2**31))))
    return pol.unknown_mass_trace


def _run(jobs, threads):
    if threads <= 1:
        return [_unknown_trace(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(_unknown_trace, jobs, chunksize=4))


def _reduction(traces, t):
    """Mean relative change (%) of unknown mass at iteration t vs iteration 1."""
    vals = []
    skipped = infeasible = 0
    for tr in traces:
        if tr is None:
            infeasible += 1
        elif tr[0] <= 0:
            skipped += 1
        else:
            vals.append(100.0 * (tr[t - 1] - tr[0]) / tr[0])
    mean = float(np.mean(vals)) if vals else float("nan")
    return mean, len(vals), skipped + infeasible, infeasible


def sensitivity_candidates(dists, n_values, m_queries: int = 100, k: int = 10,
                           iterations: int = 20, seed: int = 42, lam: float = 2.5,
                           threads: int = 1) -> list[SensitivityRow]:
    """Relative unknown-mass reduction of FELIX(iterations) vs FELIX(1) per candidate count."""
    if any(n < k for n in n_values):
        raise ValueError("every candidate count must be >= k")
    rows = []
    for d in dists:
        for n in n_values:
            jobs = [_Job(d, n, k, iterations, lam, seed, KINDS.index(d.kind), q)
                    for q in range(m_queries)]
            traces = _run(jobs, threads)
            mean, used, skipped, infeasible = _reduction(traces, iterations)
            log.info("%s n=%d: %.2f%% over %d queries", d.kind, n, mean, used)
            rows.append(SensitivityRow(d.kind, n, mean, used, skipped, infeasible))
    return rows


def sensitivity_iterations(dists, iter_values, n: int = 100, m_queries: int = 100,
                           k: int = 10, seed: int = 42, lam: float = 2.5,
                           threads: int = 1) -> list[SensitivityRow]:
    """Same statistic against the iteration count at fixed n.

    Per-iteration seeds make a run with T iterations a prefix of one with more,
    so a single run at ``max(iter_values)`` yields every point.
    """
    if any(t < 1 for t in iter_values):
        raise ValueError("iteration counts must be >= 1")
    top = max(iter_values)
    rows = []
    for d in dists:
        jobs = [_Job(d, n, k, top, lam, seed, KINDS.index(d.kind), q)
                for q in range(m_queries)]
        traces = _run(jobs, threads)
        for t in iter_values:
            mean, used, skipped, infeasible = _reduction(traces, t)
            rows.append(SensitivityRow(d.kind, t, mean, used, skipped, infeasible))
    return rows


def sample_pl_ranking(catalog: ItemCatalog, k: int, rng: np.random.Generator) -> tuple:
    """Plackett-Luce draw of k items without replacement, weights = merits."""
    w = catalog.merits.astype(float)
    if k > len(w):
        raise ValueError(f"k={k} exceeds n={len(w)}")
    out = []
    for _ in range(k):
        i = int(rng.choice(len(w), p=w / w.sum()))
        out.append(i)
        w[i] = 0.0
    return tuple(out)


def sample_pl_rankings(merits, k: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Vectorized Plackett-Luce via the Gumbel trick; rows are rankings."""
    logw = np.log(np.asarray(merits, dtype=float))
    keys = logw[None, :] + rng.gumbel(size=(size, len(logw)))
    return np.argsort(-keys, axis=1)[:, :k]
