"""Fair stochastic top-k ranking with outlier-aware re-sampling."""

__version__ = "0.1.0"

from .core import (ExposureModel, Item, ItemCatalog, MrpMatrix, StochasticPolicy,
                   Violation, expected_exposure, normalize_scores, position_bias,
                   reconstruct, validate_mrp)
from .lp import LpProblem, SolveReport, build_fairness_lp, fair_mrp, solve_mrp
from .bvn import decompose, decompose_square, extend_matrix, find_assignment
from .felix import (FelixConfig, FelixPolicy, ZScoreOutlierPredicate, is_known_exposure,
                    run_felix, sample, zscores)
from .evaluation import (EvalReport, ee_loss, evaluate, ndcg_at, outlierness_at,
                         prob_unknown, target_exposure)

__all__ = [
    "ExposureModel", "Item", "ItemCatalog", "MrpMatrix", "StochasticPolicy", "Violation",
    "expected_exposure", "normalize_scores", "position_bias", "reconstruct", "validate_mrp",
    "LpProblem", "SolveReport", "build_fairness_lp", "fair_mrp", "solve_mrp",
    "decompose", "decompose_square", "extend_matrix", "find_assignment",
    "FelixConfig", "FelixPolicy", "ZScoreOutlierPredicate", "is_known_exposure",
    "run_felix", "sample", "zscores",
    "EvalReport", "ee_loss", "evaluate", "ndcg_at", "outlierness_at", "prob_unknown",
    "target_exposure",
]
