import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from felixrank.bvn import (DecompositionError, decompose, decompose_square, extend_matrix,
                           find_assignment)
from felixrank.core import reconstruct, validate_mrp
from felixrank.matching import CapacitatedMatcher

from conftest import mixture_mrp, random_mrp, sinkhorn_mrp


def brute_force_assignments(E, zero=1e-12):
    """Every matching of an extended matrix: ordered choice of k items for the
    rank columns, remaining items on the aggregate column."""
    n, k1 = E.shape
    k = k1 - 1
    out = []
    for top in itertools.permutations(range(n), k):
        if all(E[i, j] > zero for j, i in enumerate(top)):
            rest = set(range(n)) - set(top)
            if all(E[i, k] > zero for i in rest):
                out.append(top)
    return out


def test_extend_examples():
    np.testing.assert_array_equal(extend_matrix(np.eye(2))[:, 2], [0, 0])
    E = extend_matrix([[1 / 3]] * 3)
    np.testing.assert_allclose(E[:, 1], [2 / 3] * 3)
    assert E[:, 1].sum() == pytest.approx(2)
    E = extend_matrix([[0.5, 0.5], [0.5, 0.25], [0, 0.25]])
    np.testing.assert_allclose(E[:, 2], [0, 0.25, 0.75])


def test_extend_rejects_overfull_row():
    with pytest.raises(ValueError):
        extend_matrix([[0.7, 0.4], [0.3, 0.6]])


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 20), data=st.data())
def test_extension_invariants(n, data):
    k = data.draw(st.integers(1, n))
    P = random_mrp(n, k, np.random.default_rng(data.draw(st.integers(0, 2**31))))
    E = extend_matrix(P)
    np.testing.assert_array_equal(E[:, :k], P)
    np.testing.assert_allclose(E.sum(axis=1), 1, atol=1e-9)
    np.testing.assert_allclose(E[:, :k].sum(axis=0), 1, atol=1e-9)
    assert E[:, k].sum() == pytest.approx(n - k, abs=1e-9)


def test_assignment_identity():
    assert find_assignment(extend_matrix(np.eye(2))) == {0: 0, 1: 1}


def test_assignment_single_rank():
    m = find_assignment(extend_matrix([[1 / 3]] * 3), seed=5)
    assert sorted(m.values()) == [0, 1, 1]


def test_assignment_forced_by_zero():
    E = np.array([[0.5, 0.5, 0.0], [0.0, 1.0, 0.0]])
    options = brute_force_assignments(E)
    assert options == [(0, 1)]
    assert find_assignment(E) == {0: 0, 1: 1}


def test_assignment_deterministic_per_seed(rng):
    E = extend_matrix(sinkhorn_mrp(12, 4, rng))
    assert find_assignment(E, seed=3) == find_assignment(E, seed=3)


def test_assignment_stuck_raises():
    E = np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    with pytest.raises(DecompositionError):
        find_assignment(E)


def test_matcher_repairs_after_edge_removal():
    adj = [[0, 1], [0, 1]]
    m = CapacitatedMatcher(adj, [1, 1])
    assert m.run() == 2
    u = m.match.index(0)
    m.unmatch(u)
    m.adj[u] = [1]
    assert m.run() == 2
    assert m.match[u] == 1


def test_matcher_capacity():
    adj = [[0, 1], [1], [1], [0]]
    m = CapacitatedMatcher(adj, [1, 3])
    assert m.run() == 4
    assert sorted(m.match) == [0, 1, 1, 1]


def test_decompose_identity():
    d = decompose(np.eye(2))
    assert d.entries == ((1.0, (0, 1)),)


def test_decompose_uniform():
    d = decompose(np.full((2, 2), 0.5), seed=1)
    assert d.as_dict() == pytest.approx({(0, 1): 0.5, (1, 0): 0.5})


def test_decompose_single_rank():
    d = decompose([[1 / 3]] * 3, seed=2)
    assert sorted(d.rankings) == [(0,), (1,), (2,)]
    np.testing.assert_allclose(d.probs, [1 / 3] * 3)


def test_decompose_random_20x5(rng):
    P = sinkhorn_mrp(20, 5, rng)
    d = decompose(P, seed=11)
    assert np.abs(reconstruct(d) - P).max() <= 1e-9
    assert len(d) <= 100


def test_reconstruct_passes_validation(rng):
    P = mixture_mrp(15, 6, rng)
    assert validate_mrp(reconstruct(decompose(P, seed=0))) == []


@settings(max_examples=80, deadline=None)
@given(n=st.integers(1, 30), data=st.data())
def test_round_trip_property(n, data):
    k = data.draw(st.integers(1, min(n, 10)))
    seed = data.draw(st.integers(0, 2**31))
    P = random_mrp(n, k, np.random.default_rng(seed))
    d = decompose(P, seed=seed)
    assert np.abs(reconstruct(d) - P).max() <= 1e-9
    assert abs(d.probs.sum() - 1) <= 1e-12
    assert np.all(d.probs > 0)
    assert len(d) <= k * n


def test_square_path_agrees_in_marginals(rng):
    for n in (4, 7, 12):
        P = sinkhorn_mrp(n, n, rng)
        a = decompose(P, seed=1)
        b = decompose_square(P, seed=1)
        assert np.abs(reconstruct(a) - P).max() <= 1e-9
        assert np.abs(reconstruct(b) - P).max() <= 1e-9
        assert len(a) <= n * n - 2 * n + 2


def test_square_path_on_top_k(rng):
    P = sinkhorn_mrp(9, 3, rng)
    b = decompose_square(P, seed=4)
    assert np.abs(reconstruct(b) - P).max() <= 1e-9


def test_seeds_diversify(rng):
    P = sinkhorn_mrp(15, 5, rng)
    seen = {frozenset(decompose(P, seed=s).rankings) for s in range(6)}
    assert len(seen) > 1
