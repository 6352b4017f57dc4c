"""Tensor layout and algebra checks against loop-based oracles."""

import numpy as np
import pytest

from oracles import khatri_rao_loop, mode_product_loop, outer3_loop, unfold_loop
from ultra_unmix import (DimensionError, ParameterError, as_tensor3,
                         contract_mode3_ones, fold, frobenius_norm,
                         mode_k_product, multilinear_product, outer3, unfold)
from ultra_unmix.cpd import khatri_rao

SHAPES = [(2, 3, 4), (1, 1, 1), (5, 1, 3), (1, 4, 2), (4, 4, 4)]


def test_as_tensor3_coerces_dtype_and_layout():
    T = np.arange(24, dtype=np.int32).reshape(2, 3, 4)
    out = as_tensor3(T)
    assert out.dtype == np.float64
    assert out.flags["C_CONTIGUOUS"]
    assert np.array_equal(out, T)
    fort = np.asfortranarray(np.random.default_rng(0).standard_normal((3, 2, 2)))
    out = as_tensor3(fort)
    assert out.flags["C_CONTIGUOUS"]
    assert np.array_equal(out, fort)


def test_as_tensor3_rejects_wrong_rank():
    with pytest.raises(DimensionError):
        as_tensor3(np.zeros((3, 3)))
    with pytest.raises(DimensionError):
        as_tensor3(np.zeros(5))


@pytest.mark.parametrize("shape", SHAPES)
@pytest.mark.parametrize("mode", [1, 2, 3])
def test_unfold_matches_loop_oracle(shape, mode):
    rng = np.random.default_rng(hash((shape, mode)) % 2**32)
    T = rng.standard_normal(shape)
    assert np.array_equal(unfold(T, mode), unfold_loop(T, mode))


@pytest.mark.parametrize("shape", SHAPES)
@pytest.mark.parametrize("mode", [1, 2, 3])
def test_fold_unfold_roundtrip(shape, mode):
    rng = np.random.default_rng(3)
    T = rng.standard_normal(shape)
    assert np.array_equal(fold(unfold(T, mode), shape, mode), T)


def test_unfold_bad_mode():
    T = np.zeros((2, 2, 2))
    for mode in (0, 4, -1):
        with pytest.raises(ParameterError):
            unfold(T, mode)


def test_fold_shape_validation():
    M = np.zeros((2, 12))
    with pytest.raises(DimensionError):
        fold(M, (2, 3, 5), 1)
    with pytest.raises(DimensionError):
        fold(M, (3, 2, 4), 1)


def test_outer3_matches_loop():
    rng = np.random.default_rng(11)
    a, b, c = rng.standard_normal(3), rng.standard_normal(4), rng.standard_normal(2)
    assert np.allclose(outer3(a, b, c), outer3_loop(a, b, c), atol=1e-15)


def test_unfold_of_rank_one_is_outer_of_kron():
    # the layout contract: unfolding a rank-1 tensor gives vec outer
    # products with the LATER mode varying fastest
    rng = np.random.default_rng(5)
    a, b, c = rng.standard_normal(4), rng.standard_normal(3), rng.standard_normal(5)
    T = outer3(a, b, c)
    assert np.allclose(unfold(T, 1), np.outer(a, np.kron(b, c)), atol=1e-14)
    assert np.allclose(unfold(T, 2), np.outer(b, np.kron(a, c)), atol=1e-14)
    assert np.allclose(unfold(T, 3), np.outer(c, np.kron(a, b)), atol=1e-14)


def test_unfold_times_khatri_rao_recovers_factor_structure():
    rng = np.random.default_rng(9)
    z1 = rng.standard_normal((4, 2))
    z2 = rng.standard_normal((3, 2))
    z3 = rng.standard_normal((5, 2))
    T = sum(outer3(z1[:, r], z2[:, r], z3[:, r]) for r in range(2))
    assert np.allclose(unfold(T, 1), z1 @ khatri_rao(z2, z3).T, atol=1e-13)
    assert np.allclose(unfold(T, 2), z2 @ khatri_rao(z1, z3).T, atol=1e-13)
    assert np.allclose(unfold(T, 3), z3 @ khatri_rao(z1, z2).T, atol=1e-13)


def test_khatri_rao_matches_loop():
    rng = np.random.default_rng(2)
    A = rng.standard_normal((4, 3))
    B = rng.standard_normal((5, 3))
    assert np.array_equal(khatri_rao(A, B), khatri_rao_loop(A, B))
    with pytest.raises(DimensionError):
        khatri_rao(A, rng.standard_normal((5, 2)))


@pytest.mark.parametrize("mode", [1, 2, 3])
def test_mode_k_product_matches_loop(mode):
    rng = np.random.default_rng(mode)
    T = rng.standard_normal((3, 4, 5))
    B = rng.standard_normal((6, T.shape[mode - 1]))
    assert np.allclose(mode_k_product(T, B, mode), mode_product_loop(T, B, mode),
                       atol=1e-13)


def test_mode_k_product_conformability():
    T = np.zeros((3, 4, 5))
    with pytest.raises(DimensionError):
        mode_k_product(T, np.zeros((2, 3)), 2)


def test_multilinear_product_equals_successive_modes():
    rng = np.random.default_rng(8)
    T = rng.standard_normal((3, 4, 2))
    B1 = rng.standard_normal((5, 3))
    B2 = rng.standard_normal((6, 4))
    B3 = rng.standard_normal((2, 2))
    step = mode_k_product(mode_k_product(mode_k_product(T, B1, 1), B2, 2), B3, 3)
    assert np.allclose(multilinear_product(T, B1, B2, B3), step, atol=1e-13)


def test_contract_mode3_ones_is_fiber_sum():
    rng = np.random.default_rng(4)
    T = rng.standard_normal((4, 5, 3))
    ones_row = np.ones((1, 3))
    via_mode = mode_k_product(T, ones_row, 3)[:, :, 0]
    assert np.allclose(contract_mode3_ones(T), via_mode, atol=1e-14)
    assert np.allclose(contract_mode3_ones(T), T.sum(axis=2), atol=0)


def test_frobenius_norm():
    rng = np.random.default_rng(6)
    T = rng.standard_normal((3, 3, 3))
    assert frobenius_norm(T) == pytest.approx(np.sqrt((T ** 2).sum()), rel=1e-14)
    assert frobenius_norm(np.zeros((2, 2, 2))) == 0.0
