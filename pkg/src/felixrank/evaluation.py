"""Policy metrics: exposure loss, NDCG, unknown-exposure probability, outlierness."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (ExposureModel, ItemCatalog, StochasticPolicy, as_matrix,
                   expected_exposure, reconstruct)
from .felix import ExposurePredicate, ZScoreOutlierPredicate


@dataclass(frozen=True)
class EvalReport:
    ee_l: float
    ndcg_at: dict = field(default_factory=dict)
    prob_unknown: float = 0.0
    outlierness_at: float = 0.0
    utility: float = 0.0
    epsilon_total: float = 0.0


def target_exposure(catalog: ItemCatalog, model: ExposureModel) -> np.ndarray:
    """Total exposure of the k slots shared out in proportion to merit."""
    u = catalog.merits
    return model.total * u / u.sum()


def _marginals(policy_or_mrp) -> np.ndarray:
    if isinstance(policy_or_mrp, StochasticPolicy):
        return reconstruct(policy_or_mrp)
    return as_matrix(policy_or_mrp)


def ee_loss(policy_or_mrp, catalog: ItemCatalog, model: ExposureModel) -> float:
    """Squared L2 distance between expected and target exposure."""
    eps = expected_exposure(_marginals(policy_or_mrp), model)
    d = eps - target_exposure(catalog, model)
    return float(d @ d)


def expected_utility(policy_or_mrp, catalog: ItemCatalog, model: ExposureModel) -> float:
    return float(catalog.merits @ expected_exposure(_marginals(policy_or_mrp), model))


def dcg(gains) -> float:
    g = np.asarray(gains, dtype=float)
    return float(g @ (1.0 / np.log2(np.arange(2, len(g) + 2))))


def ndcg_at(policy: StochasticPolicy, catalog: ItemCatalog, cutoff: int) -> float:
    """Expected NDCG@cutoff with raw merit as gain."""
    if cutoff > policy.k:
        raise ValueError(f"cutoff {cutoff} exceeds ranking length {policy.k}")
    u = catalog.merits
    ideal = dcg(np.sort(u)[::-1][:cutoff])
    if ideal == 0:
        return 0.0
    return float(sum(p * dcg(u[list(r[:cutoff])]) for p, r in policy) / ideal)


def prob_unknown(policy: StochasticPolicy, catalog: ItemCatalog,
                 pred: ExposurePredicate) -> float:
    return float(sum(p for p, r in policy if not pred(r, catalog)))


def outlierness_at(policy: StochasticPolicy, catalog: ItemCatalog, cutoff: int,
                   lam: float = 2.5) -> float:
    """Expected sum of |z| over the outliers within the top ``cutoff``."""
    if cutoff > policy.k:
        raise ValueError(f"cutoff {cutoff} exceeds ranking length {policy.k}")
    pred = ZScoreOutlierPredicate(lam, cutoff)
    return float(sum(p * pred.outlier_scores(r, catalog).sum() for p, r in policy))


def evaluate(policy: StochasticPolicy, catalog: ItemCatalog, model: ExposureModel,
             lam: float = 2.5, cutoffs=(5, 10)) -> EvalReport:
    """All metrics for one query; NDCG cutoffs above k are clipped to k."""
    pred = ZScoreOutlierPredicate(lam, policy.k)
    return EvalReport(
        ee_l=ee_loss(policy, catalog, model),
        ndcg_at={c: ndcg_at(policy, catalog, min(c, policy.k)) for c in cutoffs},
        prob_unknown=prob_unknown(policy, catalog, pred),
        outlierness_at=outlierness_at(policy, catalog, policy.k, lam),
        utility=expected_utility(policy, catalog, model),
        epsilon_total=model.total,
    )


def mean_report(reports: list[EvalReport]) -> EvalReport:
    """Unweighted mean over queries."""
    if not reports:
        raise ValueError("no reports to average")
    cut = reports[0].ndcg_at.keys()
    return EvalReport(
        ee_l=float(np.mean([r.ee_l for r in reports])),
        ndcg_at={c: float(np.mean([r.ndcg_at[c] for r in reports])) for c in cut},
        prob_unknown=float(np.mean([r.prob_unknown for r in reports])),
        outlierness_at=float(np.mean([r.outlierness_at for r in reports])),
        utility=float(np.mean([r.utility for r in reports])),
        epsilon_total=float(np.mean([r.epsilon_total for r in reports])),
    )
