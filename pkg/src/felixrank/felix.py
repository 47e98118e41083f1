"""Iterative re-sampling that moves policy mass away from rankings whose
exposure distribution cannot be trusted (here: rankings with a visual outlier).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bvn import decompose
from .core import ItemCatalog, Ranking, StochasticPolicy, as_matrix, reconstruct

DEFAULT_LAMBDA = 2.5
DEFAULT_ITERATIONS = 20


def zscores(values) -> np.ndarray:
    """Z-scores with the population standard deviation; all zero if it vanishes."""
    g = np.asarray(values, dtype=float)
    if g.size == 0:
        raise ValueError("zscores of an empty list")
    s = g.std()
    if s == 0:
        return np.zeros_like(g)
    return (g - g.mean()) / s


@dataclass(frozen=True)
class ZScoreOutlierPredicate:
    """Exposure is known unless the ranking's context holds a |z| > lam outlier.

    The context is the first ``context_size`` ranked items (all of them when
    ``None``).
    """

    lam: float = DEFAULT_LAMBDA
    context_size: int | None = None

    def context(self, ranking: Ranking, catalog: ItemCatalog) -> np.ndarray:
        top = ranking if self.context_size is None else ranking[:self.context_size]
        return catalog.features[list(top)]

    def outlier_scores(self, ranking: Ranking, catalog: ItemCatalog) -> np.ndarray:
        """|z| of each context item that counts as an outlier (others are 0)."""
        z = np.abs(zscores(self.context(ranking, catalog)))
        return np.where(z > self.lam, z, 0.0)

    def __call__(self, ranking: Ranking, catalog: ItemCatalog) -> bool:
        z = zscores(self.context(ranking, catalog))
        return not bool(np.any(np.abs(z) > self.lam))


ExposurePredicate = Callable[[Ranking, ItemCatalog], bool]


def is_known_exposure(ranking: Ranking, catalog: ItemCatalog,
                      pred: ZScoreOutlierPredicate = ZScoreOutlierPredicate()) -> bool:
    return pred(tuple(ranking), catalog)


@dataclass(frozen=True)
class FelixConfig:
    iterations: int = DEFAULT_ITERATIONS
    seed: int | None = None

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


@dataclass(frozen=True)
class FelixPolicy(StochasticPolicy):
    """Policy plus the unknown mass left after each iteration."""

    iterations: int = 1
    seed: int | None = None
    unknown_mass_trace: tuple[float, ...] = field(default=())


def iteration_seed(seed: int | None, t: int) -> int | None:
    """Seed for the t-th decomposition; iteration 0 reuses ``seed`` itself."""
    if seed is None:
        return None
    if t == 0:
        return seed
    return int(np.random.SeedSequence([seed, t]).generate_state(1)[0])


def run_felix(P, catalog: ItemCatalog, pred: ExposurePredicate,
              cfg: FelixConfig = FelixConfig()) -> FelixPolicy:
    """Decompose, keep rankings with known exposure, re-decompose the rest.

    The mass of unknown rankings is aggregated into a (scaled) MRP matrix and
    decomposed again with a fresh seed, ``cfg.iterations`` times in total;
    whatever is still unknown at the end is committed as is, so the marginals
    of the result equal ``P``.
    """
    a = as_matrix(P)
    n, k = a.shape
    if catalog.n != n:
        raise ValueError(f"catalog has {catalog.n} items, matrix has {n} rows")

    committed: dict[Ranking, float] = {}
    verdicts: dict[Ranking, bool] = {}
    working, mass = a, 1.0
    unknown: list[tuple[float, Ranking]] = []
    trace = []
    for t in range(cfg.iterations):
        dec = decompose(working, seed=iteration_seed(cfg.seed, t))
        unknown = []
        for p, r in dec:
            known = verdicts.get(r)
            if known is None:
                known = verdicts[r] = bool(pred(r, catalog))
            if known:
                committed[r] = committed.get(r, 0.0) + p * mass
            else:
                unknown.append((p * mass, r))
        mass = math.fsum(p for p, _ in unknown)
        trace.append(mass)
        if not unknown:
            break
        working = _aggregate(unknown, n, k) / mass

    trace += [trace[-1]] * (cfg.iterations - len(trace))
    for p, r in unknown:
        committed[r] = committed.get(r, 0.0) + p
    return FelixPolicy(tuple((p, r) for r, p in committed.items()), n, k,
                       catalog.query_id, iterations=cfg.iterations, seed=cfg.seed,
                       unknown_mass_trace=tuple(trace))


def _aggregate(entries, n, k):
    out = np.zeros((n, k))
    cols = np.arange(k)
    for p, r in entries:
        out[list(r), cols] += p
    return out


def sample(policy: StochasticPolicy, rng: np.random.Generator) -> Ranking:
    """Draw one ranking with probability equal to its policy weight."""
    return policy.entries[_choose(policy, rng, None)][1]


def sample_many(policy: StochasticPolicy, size: int, rng: np.random.Generator) -> np.ndarray:
    """Indices into ``policy.entries`` for ``size`` independent draws."""
    return _choose(policy, rng, size)


def _choose(policy, rng, size):
    p = policy.probs
    return rng.choice(len(p), size=size, p=p / p.sum())


__all__ = ["zscores", "ZScoreOutlierPredicate", "ExposurePredicate", "is_known_exposure",
           "FelixConfig", "FelixPolicy", "iteration_seed", "run_felix", "sample",
           "sample_many", "reconstruct", "DEFAULT_LAMBDA", "DEFAULT_ITERATIONS"]
