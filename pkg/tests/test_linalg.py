import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from threefunctor.linalg import (
    DimensionError,
    Tolerance,
    approx_eq,
    as_matrix,
    derive_seed,
    direct_sum,
    frobenius,
    kron,
    permutation_matrix,
    random_unitary,
    residual,
    unitarity_residual,
)


def test_kron_identities():
    assert np.array_equal(kron(np.eye(2), np.eye(3)), np.eye(6))


def test_kron_scalar_factor():
    assert np.array_equal(kron([[0, 1], [1, 0]], [[2]]), [[0, 2], [2, 0]])


def test_kron_entries_match_loop():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    b = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    k = kron(a, b)
    for i in range(2):
        for kk in range(2):
            for j in range(2):
                for ll in range(2):
                    assert abs(k[i * 2 + kk, j * 2 + ll] - a[i, j] * b[kk, ll]) < 1e-15


def test_direct_sum_examples():
    assert np.array_equal(direct_sum([np.eye(1), np.eye(2)]), np.eye(3))
    assert direct_sum([]).shape == (0, 0)
    assert np.array_equal(direct_sum([[[2]], [[3]]]), np.diag([2, 3]))


def test_direct_sum_rectangular_blocks():
    out = direct_sum([np.ones((1, 2)), np.ones((2, 1))])
    assert out.shape == (3, 3)
    assert out[0, 2] == 0 and out[1, 2] == 1


def test_unitarity_residual_examples():
    assert unitarity_residual(np.eye(5)) == 0
    assert unitarity_residual(np.diag([2, 1])) == pytest.approx(3.0)
    with pytest.raises(DimensionError):
        unitarity_residual(np.ones((2, 3)))


def test_random_unitary():
    assert random_unitary(0, 1).shape == (0, 0)
    u1 = random_unitary(1, 5)
    assert abs(abs(u1[0, 0]) - 1) < 1e-12
    assert unitarity_residual(random_unitary(6, 3)) < 1e-12
    assert np.array_equal(random_unitary(4, 11), random_unitary(4, 11))
    with pytest.raises(ValueError):
        random_unitary(-1, 0)


def test_as_matrix_rejects_bad_input():
    with pytest.raises(DimensionError):
        as_matrix(np.ones(3))
    with pytest.raises(ValueError):
        as_matrix([[np.nan]])


def test_residual_shape_mismatch():
    with pytest.raises(DimensionError):
        residual(np.ones((2, 2)), np.ones((2, 3)))


def test_permutation_matrix_sends_basis_vectors():
    p = permutation_matrix([2, 0, 1])
    for j, i in enumerate([2, 0, 1]):
        e = np.zeros(3)
        e[j] = 1
        assert np.array_equal(p @ e, np.eye(3)[i])


def test_tolerance():
    assert Tolerance(1e-9).accepts(1e-10)
    assert not Tolerance(1e-9).accepts(1e-8)
    assert Tolerance(1e-9, scale_mode=True).accepts(3e-9, (3, 3))
    with pytest.raises(ValueError):
        Tolerance(0)
    assert approx_eq(np.eye(2), np.eye(2) + 1e-12)
    assert not approx_eq(np.eye(2), np.eye(3))


def test_derive_seed_is_deterministic_and_separates_keys():
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
    assert derive_seed(1, 2, 3) != derive_seed(1, 3, 2)


@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_random_unitary_is_unitary(n, seed):
    assert unitarity_residual(random_unitary(n, seed)) < 1e-12


@given(st.integers(1, 3), st.integers(1, 3), st.integers(1, 3), st.integers(0, 1000))
def test_kron_mixed_product(n, m, p, seed):
    rng = np.random.default_rng(seed)
    a, c = rng.standard_normal((n, m)), rng.standard_normal((m, p))
    b, d = rng.standard_normal((p, n)), rng.standard_normal((n, m))
    assert frobenius(kron(a, b) @ kron(c, d) - kron(a @ c, b @ d)) < 1e-10
