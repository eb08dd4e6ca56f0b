from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from blockrmt.eta import (PatternMask, detect_pattern, eta_alpha_apply, eta_apply, eta_norm,
                          eta_operator, _power_norm)
from blockrmt.model import CovarianceTensor, DimensionProfile
from blockrmt.presets import get_preset
from blockrmt.wishart import embedded

from conftest import random_cov_model


def toeplitz_D(f, g, h):
    return np.array([[f, 0, h], [0, g, 0], [h, 0, f]], dtype=complex)


def test_toeplitz_identity(toeplitz3):
    out = eta_apply(toeplitz3.cov, np.eye(3))
    np.testing.assert_allclose(out, np.array([[3, 0, 1], [0, 3, 0], [1, 0, 3]]) / 3, atol=1e-15)


def test_toeplitz_offdiagonal(toeplitz3):
    out = eta_apply(toeplitz3.cov, toeplitz_D(0, 0, 1))
    np.testing.assert_allclose(out, np.array([[0, 0, 2], [0, 2, 0], [2, 0, 0]]) / 3, atol=1e-15)


@given(st.complex_numbers(max_magnitude=10), st.complex_numbers(max_magnitude=10),
       st.complex_numbers(max_magnitude=10))
def test_toeplitz_general_action(f, g, h):
    # hand-expanded action on the f/g/h pattern
    spec = get_preset("toeplitz3").spec
    a = (2 * f + g) / 3
    b = (g + 2 * h) / 3
    c = (2 * f + g + 2 * h) / 3
    expected = np.array([[a, 0, b], [0, c, 0], [b, 0, a]])
    np.testing.assert_allclose(eta_apply(spec.cov, toeplitz_D(f, g, h)), expected, atol=1e-12)


def test_scalar_case(semicircle):
    assert eta_apply(semicircle.cov, np.array([[2.5 - 1j]]))[0, 0] == 2.5 - 1j


def test_mp_embedding_swaps_diagonal():
    emb = embedded(get_preset("mp:1").spec)[1]
    out = eta_alpha_apply(emb.cov, emb.dims, np.diag([2.0, 4.0]))
    np.testing.assert_allclose(out, np.diag([2.0, 1.0]), atol=1e-15)


@pytest.mark.parametrize("lam", ["2", "3", "1/2"])
def test_mp_embedding_weights(lam):
    w = get_preset(f"mp:{lam}").spec
    emb = embedded(w)[1]
    a1, a2 = emb.dims.weights
    out = eta_alpha_apply(emb.cov, emb.dims, np.diag([3.0, 5.0]))
    np.testing.assert_allclose(out, np.diag([a2 * 5.0, a1 * 3.0]), atol=1e-14)


def test_alpha_mapping_rejects_entries_outside_square_blocks():
    emb = embedded(get_preset("mp:2").spec)[1]
    with pytest.raises(ValueError, match=r"\(1,2\)"):
        eta_alpha_apply(emb.cov, emb.dims, np.array([[1, 1], [0, 1]]))


def test_alpha_mapping_equals_square_mapping_for_equal_blocks(toeplitz3):
    D = np.random.default_rng(0).standard_normal((3, 3))
    np.testing.assert_array_equal(eta_alpha_apply(toeplitz3.cov, toeplitz3.dims, D),
                                  eta_apply(toeplitz3.cov, D))


def test_dimension_mismatch(toeplitz3):
    with pytest.raises(ValueError):
        eta_apply(toeplitz3.cov, np.eye(2))


def test_norm_scalar_and_zero(semicircle):
    assert eta_norm(semicircle.cov) == pytest.approx(1.01, abs=1e-12)
    assert eta_norm(CovarianceTensor.zeros(3)) == 0.0


def test_norm_dominates_identity_image(toeplitz3):
    # eta(I) has spectrum {4/3, 1, 2/3}
    top = np.linalg.eigvalsh(eta_apply(toeplitz3.cov, np.eye(3)).real).max()
    assert top == pytest.approx(4 / 3)
    assert eta_norm(toeplitz3.cov, toeplitz3.dims) >= 1.01 * top - 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_power_iteration_matches_dense_svd(seed):
    spec = random_cov_model(seed)
    L = eta_operator(spec.cov, spec.dims.weights)
    assert _power_norm(L) == pytest.approx(np.linalg.norm(L, 2), rel=1e-9)


def test_toeplitz_pattern(toeplitz3):
    pat = detect_pattern(toeplitz3).one_based()
    assert pat["zeros"] == [(1, 2), (2, 1), (2, 3), (3, 2)]
    assert sorted(pat["classes"]) == [[(1, 1), (3, 3)], [(1, 3), (3, 1)], [(2, 2)]]


def test_mimo_pattern_is_symmetric_diagonal():
    emb = embedded(get_preset("mimo:4,4,1").spec)[1]
    pat = detect_pattern(emb).one_based()
    assert len(pat["zeros"]) == 11 * 11 - 11
    classes = sorted(sorted(c) for c in pat["classes"])
    K, L = 4, 4
    expected = set()
    for j in range(1, K + 1):
        expected.add(tuple(sorted({(j, j), (K + 1 - j, K + 1 - j)})))
    for j in range(1, K + L):
        a, b = K + j, K + (K + L - j)
        expected.add(tuple(sorted({(a, a), (b, b)})))
    assert {tuple(c) for c in classes} == expected


def test_scalar_pattern(semicircle):
    pat = detect_pattern(semicircle)
    assert pat.zero_set == frozenset() and pat.classes == (((0, 0),),)


def test_pattern_mask_must_partition():
    with pytest.raises(ValueError):
        PatternMask(2, frozenset({(0, 1)}), (((0, 0),), ((1, 1),)))
    with pytest.raises(ValueError):
        PatternMask(1, frozenset({(0, 0)}), (((0, 0),),))


def test_mask_reduce_expand_roundtrip(toeplitz3):
    pat = detect_pattern(toeplitz3)
    G = toeplitz_D(1 + 2j, -3j, 0.5)
    np.testing.assert_allclose(pat.expand(pat.reduce(G)), G)
    assert pat.violation(G) == 0.0


def test_rectangular_alpha_weights():
    sigma = np.zeros((2, 2, 2, 2), complex)
    sigma[0, 0, 0, 0] = sigma[1, 1, 1, 1] = 1
    dims = DimensionProfile((Fraction(1, 4), Fraction(3, 4)), mode="rectangular")
    out = eta_alpha_apply(CovarianceTensor(sigma), dims, np.diag([4.0, 8.0]))
    np.testing.assert_allclose(out, np.diag([1.0, 6.0]))
