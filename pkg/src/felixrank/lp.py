"""Fairness-constrained linear program for the marginal rank probability matrix.

Variables are the entries of the n x k matrix P in row-major order. Fairness of
exposure (exposure proportional to merit) is written as a chain of n - 1
equalities between consecutive items.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .core import (TOLERANCE, ExposureModel, ItemCatalog, MrpMatrix,
                   expected_exposure, validate_mrp)

log = logging.getLogger(__name__)

STRICT = "strict"
SLACK = "slack"

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class SolverError(RuntimeError):
    def __init__(self, message, iterations=None):
        super().__init__(f"{message} (after {iterations} iterations)")
        self.iterations = iterations


@dataclass(frozen=True)
class LpProblem:
    n: int
    k: int
    mode: str
    merits: np.ndarray
    biases: np.ndarray
    c: np.ndarray          # objective, maximized
    A_eq: np.ndarray
    b_eq: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    n_column: int
    n_fair: int
    n_row: int
    query_id: str = ""

    @property
    def n_vars(self) -> int:
        return self.n * self.k


@dataclass(frozen=True)
class SolveReport:
    status: str
    mrp: MrpMatrix | None = None
    objective_value: float = float("nan")
    fairness_residual: float = float("nan")
    slack_total: float = 0.0
    note: str = ""
    query_id: str = ""


def build_fairness_lp(catalog: ItemCatalog, model: ExposureModel,
                      mode: str = STRICT) -> LpProblem:
    u = catalog.merits
    v = model.v
    n, k = len(u), len(v)
    if k > n:
        raise ValueError(f"k={k} exceeds the number of items n={n}")
    if np.any(u <= 0):
        raise ValueError("merits must be strictly positive")
    if mode not in (STRICT, SLACK):
        raise ValueError(f"unknown mode {mode!r}")

    nv = n * k
    c = np.outer(u, v).ravel()

    cols = np.zeros((k, nv))
    for j in range(k):
        cols[j, j::k] = 1.0

    fair = np.zeros((n - 1, nv))
    for i in range(n - 1):
        fair[i, i * k:(i + 1) * k] = v / u[i]
        fair[i, (i + 1) * k:(i + 2) * k] = -v / u[i + 1]

    rows = np.zeros((n, nv))
    for i in range(n):
        rows[i, i * k:(i + 1) * k] = 1.0

    if k == n:
        A_eq = np.vstack([cols, fair, rows])
        b_eq = np.concatenate([np.ones(k), np.zeros(n - 1), np.ones(n)])
        A_ub = np.zeros((0, nv))
        b_ub = np.zeros(0)
    else:
        A_eq = np.vstack([cols, fair])
        b_eq = np.concatenate([np.ones(k), np.zeros(n - 1)])
        A_ub = rows
        b_ub = np.ones(n)
    return LpProblem(n, k, mode, u, v, c, A_eq, b_eq, A_ub, b_ub,
                     k, n - 1, n, catalog.query_id)


def fairness_residual(P, merits, model: ExposureModel) -> float:
    """Largest pairwise gap of exposure-per-merit across items."""
    r = expected_exposure(P, model) / np.asarray(merits)
    return float(r.max() - r.min())


def majorization_gap(merits, model: ExposureModel, n: int | None = None) -> float:
    """How far proportional exposure lies outside the reachable exposure set.

    Exposure vectors reachable by top-k policies are the permutohedron of v
    padded with zeros; the merit-proportional target is reachable iff it is
    majorized by that vector. Returns the largest prefix-sum excess (<= 0 when
    reachable).
    """
    u = np.asarray(merits, dtype=float)
    v = np.asarray(model.v)
    n = len(u) if n is None else n
    target = np.sort(v.sum() * u / u.sum())[::-1]
    padded = np.zeros(n)
    padded[:len(v)] = np.sort(v)[::-1]
    return float(np.max(np.cumsum(target) - np.cumsum(padded)))


_HIGHS = {"primal_feasibility_tolerance": 1e-10,
          "dual_feasibility_tolerance": 1e-10,
          "presolve": True}


def _linprog(c, A_ub, b_ub, A_eq, b_eq, bounds):
    res = linprog(c, A_ub=A_ub if len(b_ub) else None,
                  b_ub=b_ub if len(b_ub) else None,
                  A_eq=A_eq, b_eq=b_eq, bounds=bounds,
                  method="highs-ds", options=_HIGHS)
    log.debug("linprog status=%s nit=%s", res.status, res.nit)
    return res


def _clean(x, n, k):
    """Snap solver output onto the MRP constraint set (sub-tolerance moves only)."""
    P = np.clip(x[:n * k].reshape(n, k), 0.0, 1.0)
    P[P < 1e-12] = 0.0
    P /= P.sum(axis=0, keepdims=True)
    if k == n:
        # alternate row/column scaling; residuals are already near machine precision
        for _ in range(5):
            P /= P.sum(axis=1, keepdims=True)
            P /= P.sum(axis=0, keepdims=True)
    return P


def solve_mrp(problem: LpProblem, tol: float = TOLERANCE) -> SolveReport:
    n, k = problem.n, problem.k
    nv = problem.n_vars
    model = ExposureModel(tuple(problem.biases))

    if problem.mode == STRICT:
        res = _linprog(-problem.c, problem.A_ub, problem.b_ub,
                       problem.A_eq, problem.b_eq, [(0.0, 1.0)] * nv)
        if res.status == 2:
            gap = majorization_gap(problem.merits, model, n)
            return SolveReport(
                INFEASIBLE,
                note=(f"merit-proportional exposure is unreachable: target prefix "
                      f"sum exceeds achievable exposure by {gap:.6g}"),
                query_id=problem.query_id)
        if res.status == 3:
            return SolveReport(UNBOUNDED, query_id=problem.query_id)
        if res.status != 0:
            raise SolverError(f"LP solve failed: {res.message}", res.nit)
        P = _clean(res.x, n, k)
        slack = 0.0
    else:
        P, slack = _solve_slack(problem)

    violations = validate_mrp(P, tol)
    if violations:
        raise SolverError(f"solver returned an invalid MRP matrix: {violations[0]}", None)
    u = problem.merits
    return SolveReport(
        OPTIMAL, MrpMatrix(P),
        objective_value=float(u @ P @ problem.biases),
        fairness_residual=fairness_residual(P, u, model),
        slack_total=slack, query_id=problem.query_id)


def _solve_slack(problem: LpProblem):
    """Minimize total fairness violation, then maximize utility at that violation."""
    n, k, nv = problem.n, problem.k, problem.n_vars
    nf = problem.n_fair
    fair = slice(problem.n_column, problem.n_column + nf)

    # slack variables s+ and s- per fairness row
    A_eq = np.hstack([problem.A_eq, np.zeros((problem.A_eq.shape[0], 2 * nf))])
    A_eq[fair, nv:nv + nf] = np.eye(nf)
    A_eq[fair, nv + nf:] = -np.eye(nf)
    A_ub = np.hstack([problem.A_ub, np.zeros((problem.A_ub.shape[0], 2 * nf))])
    bounds = [(0.0, 1.0)] * nv + [(0.0, None)] * (2 * nf)

    phase1 = np.concatenate([np.zeros(nv), np.ones(2 * nf)])
    res = _linprog(phase1, A_ub, problem.b_ub, A_eq, problem.b_eq, bounds)
    if res.status != 0:
        raise SolverError(f"slack phase 1 failed: {res.message}", res.nit)
    best = float(res.fun)

    cap = best + max(1e-9 * best, 1e-12)
    A_ub2 = np.vstack([A_ub, phase1])
    b_ub2 = np.concatenate([problem.b_ub, [cap]])
    c2 = np.concatenate([-problem.c, np.zeros(2 * nf)])
    res2 = _linprog(c2, A_ub2, b_ub2, A_eq, problem.b_eq, bounds)
    if res2.status != 0:
        raise SolverError(f"slack phase 2 failed: {res2.message}", res2.nit)
    slack = float(res2.x[nv:].sum())
    if slack <= 1e-10:
        slack = 0.0
    return _clean(res2.x, n, k), slack


def fair_mrp(catalog: ItemCatalog, model: ExposureModel,
             mode: str = STRICT) -> SolveReport:
    """Build and solve in one call."""
    return solve_mrp(build_fairness_lp(catalog, model, mode))
