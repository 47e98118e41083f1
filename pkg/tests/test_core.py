import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from felixrank.core import (ExposureModel, ItemCatalog, MrpMatrix, StochasticPolicy,
                            expected_exposure, normalize_scores, position_bias,
                            ranking_matrix, reconstruct, validate_mrp)

from conftest import random_mrp

V2 = 1 / math.log2(3)


@pytest.mark.parametrize("j, expected", [(1, 1.0), (3, 0.5), (7, 1 / 3)])
def test_position_bias_values(j, expected):
    assert position_bias(j, ExposureModel.log_discount(10)) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("j", [0, 11, -1])
def test_position_bias_out_of_range(j):
    with pytest.raises(IndexError):
        position_bias(j, ExposureModel.log_discount(10))


def test_position_bias_strictly_decreasing():
    v = ExposureModel.log_discount(200).v
    assert np.all(np.diff(v) < 0)


def test_log_base_is_configurable():
    m = ExposureModel.log_discount(3, base=math.e)
    assert m.biases[0] == pytest.approx(1 / math.log(2))


def test_exposure_model_rejects_increasing():
    with pytest.raises(ValueError):
        ExposureModel((0.5, 1.0))
    with pytest.raises(ValueError):
        ExposureModel((1.0, 0.0))


def test_validate_doubly_stochastic_ok():
    assert validate_mrp([[0.5, 0.5], [0.5, 0.5]]) == []


def test_validate_column_violation():
    bad = validate_mrp([[0.6, 0.5], [0.5, 0.5]])
    cols = [v for v in bad if v.kind == "column"]
    assert len(cols) == 1
    assert cols[0].index == (0,)
    assert cols[0].residual == pytest.approx(0.1)


def test_validate_single_column_ok():
    assert validate_mrp([[1 / 3], [1 / 3], [1 / 3]]) == []


def test_validate_row_and_entry():
    bad = validate_mrp([[1.2, 0.0], [-0.2, 1.0], [0.0, 0.0]])
    kinds = {v.kind for v in bad}
    assert {"entry", "row"} <= kinds


def test_validate_square_rows_must_be_full():
    P = np.array([[0.5, 0.5], [0.5, 0.5]])
    P[0] = [0.4, 0.4]
    P[1] = [0.6, 0.6]
    assert any(v.kind == "row" for v in validate_mrp(P))


def test_expected_exposure_examples():
    m = ExposureModel((1.0, V2))
    np.testing.assert_allclose(expected_exposure([[1, 0], [0, 1]], m), [1, V2])
    np.testing.assert_allclose(expected_exposure([[0.5, 0.5], [0.5, 0.5]], m),
                               [0.8154648767857288] * 2, atol=1e-12)
    np.testing.assert_allclose(expected_exposure([[1 / 3]] * 3, ExposureModel((1.0,))),
                               [1 / 3] * 3)


def test_expected_exposure_dimension_mismatch():
    with pytest.raises(ValueError):
        expected_exposure(np.eye(3), ExposureModel.log_discount(2))


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 25), data=st.data())
def test_total_exposure_conserved(n, data):
    k = data.draw(st.integers(1, n))
    rng = np.random.default_rng(data.draw(st.integers(0, 2**31)))
    P = random_mrp(n, k, rng)
    m = ExposureModel.log_discount(k)
    assert expected_exposure(P, m).sum() == pytest.approx(m.total, abs=1e-9)


def test_catalog_invariants():
    with pytest.raises(ValueError):
        ItemCatalog.from_arrays("q", [0.5, 0.5], doc_ids=["a", "a"])
    with pytest.raises(ValueError):
        ItemCatalog.from_arrays("q", [0.0, 0.5])
    with pytest.raises(ValueError):
        ItemCatalog.from_arrays("q", [])
    cat = ItemCatalog.from_arrays("q", [0.2, 1.0], [3.0, 4.0])
    assert cat.n == 2
    np.testing.assert_array_equal(cat.features, [3.0, 4.0])


def test_normalize_scores():
    s = normalize_scores([-3.0, 1.0, 5.0])
    assert s.min() == pytest.approx(1e-4)
    assert s.max() == pytest.approx(1.0)
    assert s[1] == pytest.approx(1e-4 + 0.5 * (1 - 1e-4))
    np.testing.assert_array_equal(normalize_scores([2.0, 2.0]), [1.0, 1.0])


def test_policy_invariants():
    with pytest.raises(ValueError):
        StochasticPolicy(((0.5, (0, 1)), (0.4, (1, 0))), 2, 2)
    with pytest.raises(ValueError):
        StochasticPolicy(((1.0, (0, 0)),), 2, 2)
    pol = StochasticPolicy(((0.5, (0, 1)), (0.0, (1, 0)), (0.5, (1, 0))), 2, 2)
    assert len(pol) == 2


def test_policy_merges_duplicates():
    pol = StochasticPolicy.from_weights([(0.25, (0,)), (0.5, (1,)), (0.25, (0,))], 2, 1)
    assert pol.as_dict() == {(0,): 0.5, (1,): 0.5}


def test_reconstruct_examples():
    np.testing.assert_array_equal(
        reconstruct(StochasticPolicy.deterministic((0, 1), 2)), np.eye(2))
    pol = StochasticPolicy(((0.5, (0, 1)), (0.5, (1, 0))), 2, 2)
    np.testing.assert_array_equal(reconstruct(pol), np.full((2, 2), 0.5))


def test_ranking_matrix():
    np.testing.assert_array_equal(ranking_matrix((2, 0), 3), [[0, 1], [0, 0], [1, 0]])


def test_mrp_matrix_is_read_only():
    P = MrpMatrix(np.eye(2))
    with pytest.raises(ValueError):
        P.entries[0, 0] = 3.0
    assert (P.n, P.k) == (2, 2)
