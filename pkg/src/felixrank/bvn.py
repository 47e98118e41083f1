"""Birkhoff-von Neumann decomposition for top-k marginal rank matrices.

The n x k matrix is extended by one aggregate column holding each item's
probability of not being shown. Each step finds a perfect matching in which
every rank column takes one item and the aggregate column takes n - k items,
peels off the largest feasible multiple of it, and repeats.
"""

from __future__ import annotations

import math

import numpy as np

from .core import TOLERANCE, StochasticPolicy, as_matrix, reconstruct
from .matching import CapacitatedMatcher

ZERO = 1e-12

Decomposition = StochasticPolicy

__all__ = ["DecompositionError", "Decomposition", "extend_matrix", "find_assignment",
           "decompose", "decompose_square", "reconstruct", "ZERO"]


class DecompositionError(RuntimeError):
    pass


def extend_matrix(P, tol: float = TOLERANCE) -> np.ndarray:
    """Append the column ``1 - row sum`` so that every row sums to one."""
    a = as_matrix(P)
    n, k = a.shape
    if k > n:
        raise ValueError(f"cannot extend a {n}x{k} matrix with k > n")
    rest = 1.0 - a.sum(axis=1)
    if np.any(rest < -tol):
        i = int(np.argmin(rest))
        raise ValueError(f"row {i} sums to {1 - rest[i]!r} > 1")
    rest[np.abs(rest) <= tol] = 0.0
    rest[np.abs(rest - 1) <= tol] = 1.0
    return np.hstack([a, rest[:, None]])


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _adjacency(E, rows, col_order, zero):
    return [[j for j in col_order[i] if E[i, j] > zero] for i in rows]


def find_assignment(E, seed=None, zero: float = ZERO) -> dict[int, int]:
    """Perfect matching on the support of an extended matrix.

    Returns ``{row: column}``; column ``k`` (the last) is the aggregate
    "not shown" column and is used exactly n - k times.
    """
    E = np.asarray(E, dtype=float)
    n, k1 = E.shape
    k = k1 - 1
    rng = _rng(seed)
    col_order = [rng.permutation(k1).tolist() for _ in range(n)]
    matcher = CapacitatedMatcher(_adjacency(E, range(n), col_order, zero),
                                 [1] * k + [n - k])
    if matcher.run(rng.permutation(n).tolist()) < n:
        raise DecompositionError("decomposition stuck: no perfect matching on the support")
    return dict(enumerate(matcher.match))


def _matching_to_ranking(match, k):
    ranking = [-1] * k
    for i, j in enumerate(match):
        if j < k:
            ranking[j] = i
    return tuple(ranking)


def _peel(E, caps, seed, zero, max_steps, tol=TOLERANCE):
    """Greedy decomposition of ``E`` (rows sum to one) under column capacities."""
    W = np.array(E, dtype=float)
    W[W < zero] = 0.0
    n, m = W.shape
    rng = _rng(seed)
    col_order = [rng.permutation(m).tolist() for _ in range(n)]
    left_order = rng.permutation(n).tolist()
    matcher = CapacitatedMatcher(_adjacency(W, range(n), col_order, zero), caps)
    rows = np.arange(n)
    out = []
    while True:
        if not W.any():
            break
        if len(out) > max_steps:
            raise DecompositionError(f"no convergence after {len(out)} steps")
        if matcher.run(left_order) < n:
            # leftover rounding dust cannot always be matched
            if W.max() <= tol:
                break
            raise DecompositionError("decomposition stuck: no perfect matching on the support")
        cols = np.array(matcher.match)
        alpha = float(W[rows, cols].min())
        out.append((alpha, cols.copy()))
        W[rows, cols] -= alpha
        dead = rows[W[rows, cols] < zero]
        W[dead, cols[dead]] = 0.0
        for i in dead.tolist():
            matcher.unmatch(i)
            matcher.adj[i] = [j for j in col_order[i] if W[i, j] > 0.0]
    return out


def decompose(P, seed=None, zero: float = ZERO, query_id: str = "") -> StochasticPolicy:
    """Write ``P`` as a convex combination of top-k rankings.

    ``seed`` fixes the vertex visiting order of the matcher; different seeds
    generally give different (equally valid) decompositions.
    """
    a = as_matrix(P)
    n, k = a.shape
    E = extend_matrix(a)
    steps = _peel(E, [1] * k + [n - k], seed, zero, max_steps=k * n + n + 10)
    return _as_policy(steps, n, k, query_id)


def decompose_square(P, seed=None, zero: float = ZERO, query_id: str = "") -> StochasticPolicy:
    """Reference path: extend to a full n x n doubly stochastic matrix.

    The n - k padding columns share the leftover row mass equally; every
    column has unit capacity. Rankings are read off the first k columns.
    """
    a = as_matrix(P)
    n, k = a.shape
    rest = extend_matrix(a)[:, k]
    if n > k:
        full = np.hstack([a, np.repeat(rest[:, None] / (n - k), n - k, axis=1)])
    else:
        full = a.copy()
    steps = _peel(full, [1] * n, seed, zero, max_steps=n * n + 10)
    return _as_policy(steps, n, k, query_id)


def _as_policy(steps, n, k, query_id):
    total = math.fsum(alpha for alpha, _ in steps)
    if abs(total - 1) > 1e-6:
        raise DecompositionError(f"coefficients sum to {total!r}, expected 1")
    weights = [(alpha / total, _matching_to_ranking(cols, k)) for alpha, cols in steps]
    return StochasticPolicy.from_weights(weights, n, k, query_id)
