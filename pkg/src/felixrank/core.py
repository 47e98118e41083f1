"""Domain types shared across the package and the position-based exposure model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

TOLERANCE = 1e-9
MERIT_FLOOR = 1e-4

Ranking = tuple  # tuple[int, ...]; position j holds the item at rank j + 1


@dataclass(frozen=True)
class Item:
    doc_id: str
    merit: float
    feature: float


@dataclass(frozen=True)
class ItemCatalog:
    """Candidate items for one query.

    Merits must already lie in ``[merit_floor, 1]``; use :func:`normalize_scores`
    on raw model scores first.
    """

    query_id: str
    items: tuple[Item, ...]
    merit_floor: float = MERIT_FLOOR

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if not self.items:
            raise ValueError(f"query {self.query_id!r}: catalog needs at least one item")
        ids = [it.doc_id for it in self.items]
        if len(set(ids)) != len(ids):
            raise ValueError(f"query {self.query_id!r}: duplicate doc_id")
        for it in self.items:
            if not (self.merit_floor - 1e-12 <= it.merit <= 1 + 1e-12):
                raise ValueError(
                    f"query {self.query_id!r}: merit {it.merit} of {it.doc_id!r} "
                    f"outside [{self.merit_floor}, 1]"
                )

    @classmethod
    def from_arrays(cls, query_id, merits, features=None, doc_ids=None,
                    merit_floor=MERIT_FLOOR):
        merits = np.asarray(merits, dtype=float)
        if features is None:
            features = np.zeros_like(merits)
        if doc_ids is None:
            doc_ids = [f"d{i}" for i in range(len(merits))]
        items = tuple(Item(str(d), float(u), float(g))
                      for d, u, g in zip(doc_ids, merits, features))
        return cls(str(query_id), items, merit_floor)

    @property
    def n(self) -> int:
        return len(self.items)

    @property
    def merits(self) -> np.ndarray:
        return np.array([it.merit for it in self.items])

    @property
    def features(self) -> np.ndarray:
        return np.array([it.feature for it in self.items])

    @property
    def doc_ids(self) -> list[str]:
        return [it.doc_id for it in self.items]


def normalize_scores(scores, floor: float = MERIT_FLOOR) -> np.ndarray:
    """Affinely map raw scores onto ``[floor, 1]``; constant input maps to 1."""
    s = np.asarray(scores, dtype=float)
    lo, hi = s.min(), s.max()
    if hi - lo <= 0:
        return np.ones_like(s)
    return floor + (s - lo) * (1.0 - floor) / (hi - lo)


@dataclass(frozen=True)
class ExposureModel:
    """Position-based model: ``biases[j]`` is the examination weight of rank j+1."""

    biases: tuple[float, ...]

    def __post_init__(self):
        b = tuple(float(x) for x in self.biases)
        object.__setattr__(self, "biases", b)
        if not b:
            raise ValueError("exposure model needs k >= 1")
        if b[-1] <= 0 or any(x < y for x, y in zip(b, b[1:])):
            raise ValueError("position biases must be positive and non-increasing")

    @classmethod
    def log_discount(cls, k: int, base: float = 2.0) -> "ExposureModel":
        """v(j) = 1 / log_base(1 + j) for j = 1..k."""
        if k < 1:
            raise ValueError("k must be positive")
        return cls(tuple(1.0 / math.log(1 + j, base) for j in range(1, k + 1)))

    @property
    def k(self) -> int:
        return len(self.biases)

    @property
    def v(self) -> np.ndarray:
        return np.array(self.biases)

    @property
    def total(self) -> float:
        return math.fsum(self.biases)

    def truncate(self, k: int) -> "ExposureModel":
        return ExposureModel(self.biases[:k])


def position_bias(j: int, model: ExposureModel) -> float:
    """Exposure of rank ``j`` (1-based)."""
    if not 1 <= j <= model.k:
        raise IndexError(f"rank {j} outside 1..{model.k}")
    return model.biases[j - 1]


@dataclass(frozen=True)
class MrpMatrix:
    """Marginal rank probabilities, ``entries[i, j] = Pr(item i at rank j+1)``."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2:
            raise ValueError("MRP matrix must be two-dimensional")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def k(self) -> int:
        return self.entries.shape[1]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def as_matrix(P) -> np.ndarray:
    if isinstance(P, MrpMatrix):
        return P.entries
    return np.asarray(P, dtype=float)


@dataclass(frozen=True)
class Violation:
    kind: str  # "entry", "column", "row"
    index: tuple
    residual: float

    def __str__(self):
        return f"{self.kind} {self.index}: residual {self.residual:.3g}"


def validate_mrp(P, tol: float = TOLERANCE) -> list[Violation]:
    """List every broken MRP invariant; an empty list means valid."""
    a = as_matrix(P)
    out = []
    n, k = a.shape
    if k > n:
        out.append(Violation("shape", (n, k), float(k - n)))
    for i, j in zip(*np.nonzero(a < -tol)):
        out.append(Violation("entry", (int(i), int(j)), float(-a[i, j])))
    for i, j in zip(*np.nonzero(a > 1 + tol)):
        out.append(Violation("entry", (int(i), int(j)), float(a[i, j] - 1)))
    for j, s in enumerate(a.sum(axis=0)):
        if abs(s - 1) > tol:
            out.append(Violation("column", (j,), float(s - 1)))
    rows = a.sum(axis=1)
    for i, s in enumerate(rows):
        if s > 1 + tol or (k == n and s < 1 - tol):
            out.append(Violation("row", (i,), float(s - 1)))
    return out


def expected_exposure(P, model: ExposureModel) -> np.ndarray:
    """Per-item exposure ``P @ v``; items never shown get zero."""
    a = as_matrix(P)
    if a.shape[1] != model.k:
        raise ValueError(f"matrix has {a.shape[1]} ranks, model has {model.k}")
    return a @ model.v


def check_ranking(ranking: Sequence[int], n: int) -> Ranking:
    r = tuple(int(i) for i in ranking)
    if len(set(r)) != len(r):
        raise ValueError(f"ranking {r} repeats an item")
    if any(i < 0 or i >= n for i in r):
        raise ValueError(f"ranking {r} has index outside [0, {n})")
    return r


def ranking_matrix(ranking: Sequence[int], n: int) -> np.ndarray:
    """The n x k 0/1 placement matrix of a ranking."""
    m = np.zeros((n, len(ranking)))
    m[list(ranking), np.arange(len(ranking))] = 1.0
    return m


@dataclass(frozen=True)
class StochasticPolicy:
    """A finite distribution over top-k rankings of n items."""

    entries: tuple[tuple[float, Ranking], ...]
    n: int
    k: int
    query_id: str = ""
    tol: float = field(default=TOLERANCE, repr=False, compare=False)

    def __post_init__(self):
        cleaned = []
        for p, r in self.entries:
            r = check_ranking(r, self.n)
            if len(r) != self.k:
                raise ValueError(f"ranking {r} has length {len(r)}, expected {self.k}")
            if p < 0:
                raise ValueError(f"negative probability {p}")
            if p > 0:
                cleaned.append((float(p), r))
        object.__setattr__(self, "entries", tuple(cleaned))
        total = math.fsum(p for p, _ in cleaned)
        if abs(total - 1) > self.tol:
            raise ValueError(f"policy probabilities sum to {total!r}")

    @classmethod
    def deterministic(cls, ranking, n, query_id=""):
        return cls(((1.0, tuple(ranking)),), n, len(ranking), query_id)

    @classmethod
    def from_weights(cls, weights: Iterable, n: int, k: int, query_id=""):
        """Merge duplicate rankings, summing their weight."""
        merged: dict = {}
        for p, r in weights:
            r = tuple(int(i) for i in r)
            merged[r] = merged.get(r, 0.0) + p
        return cls(tuple((p, r) for r, p in merged.items()), n, k, query_id)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def probs(self) -> np.ndarray:
        return np.array([p for p, _ in self.entries])

    @property
    def rankings(self) -> list[Ranking]:
        return [r for _, r in self.entries]

    def as_dict(self) -> dict:
        return {r: p for p, r in self.entries}

    def marginals(self) -> np.ndarray:
        return reconstruct(self)


def reconstruct(policy: Iterable) -> np.ndarray:
    """Entrywise sum of ``prob * placement matrix`` over the policy entries."""
    entries = list(policy)
    n, k = policy.n, policy.k
    out = np.zeros((n, k))
    cols = np.arange(k)
    for p, r in entries:
        out[list(r), cols] += p
    return out
