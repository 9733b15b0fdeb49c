import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cvrd.errors import NotPSDError, ValidationError
from cvrd.risk_models import (
    HermitianCovariance,
    complex_covariance,
    sample_covariance,
    spectral_decomposition,
)
from cvrd.spectral import analytic_matrix


def random_hermitian_psd(rng, m, rank=None):
    rank = rank or m
    a = rng.normal(size=(m, rank)) + 1j * rng.normal(size=(m, rank))
    return HermitianCovariance(0.5 * (a @ a.conj().T + (a @ a.conj().T).conj().T), "complex", rank)


def test_identical_columns_give_constant_matrix(rng):
    x = rng.normal(size=20)
    c = sample_covariance(np.column_stack([x, x])).matrix
    assert np.all(c == c[0, 0])


def test_constant_columns_give_zero_matrix():
    c = sample_covariance(np.full((6, 3), 0.01)).matrix
    assert np.array_equal(c, np.zeros((3, 3)))


def test_three_observation_hand_computation():
    x = np.array([[0.01, 0.02], [-0.02, 0.00], [0.04, -0.01]])
    # means 0.01, 0.00333...; deviations computed by hand
    d1 = [0.0, -0.03, 0.03]
    d2 = [0.02 - 1 / 300, -1 / 300, -0.01 - 1 / 300]
    hand = np.array([
        [sum(a * a for a in d1) / 3, sum(a * b for a, b in zip(d1, d2)) / 3],
        [sum(a * b for a, b in zip(d1, d2)) / 3, sum(b * b for b in d2) / 3],
    ])
    np.testing.assert_allclose(sample_covariance(x).matrix, hand, rtol=0, atol=1e-12)


def test_complex_covariance_direct_summation(rng):
    z = rng.normal(size=(40, 3)) + 1j * rng.normal(size=(40, 3))
    oracle = sum(np.outer(row, row.conj()) for row in z) / len(z)
    np.testing.assert_allclose(complex_covariance(z).matrix, oracle, atol=1e-12)


def test_zero_imaginary_reduces_exactly(rng):
    x = rng.normal(size=(50, 4))
    xc = x - x.mean(axis=0)
    cz = complex_covariance(xc + 0j)
    cr = sample_covariance(x)
    assert np.max(np.abs(cz.matrix - cr.matrix)) <= 1e-12
    assert cz.sample_count == cr.sample_count


def test_quadrature_pair_off_diagonal():
    n = 256
    theta = 2 * np.pi * 5 * np.arange(n) / n + 0.3
    z = np.column_stack([np.exp(1j * theta), np.exp(1j * (theta + np.pi / 2))])
    c = complex_covariance(z).matrix
    assert abs(c[0, 0] - 1) <= 1e-9 and abs(c[1, 1] - 1) <= 1e-9
    # z1 conj(z2) = e^{-i pi/2} = -i at every t
    assert abs(c[0, 1] - (-1j) * abs(c[0, 0])) <= 1e-9
    assert abs(c[1, 0] - 1j * abs(c[0, 0])) <= 1e-9


def test_quadrature_pair_from_analytic_signals():
    n = 256
    t = np.arange(n)
    x = np.column_stack([np.cos(2 * np.pi * 5 * t / n), -np.sin(2 * np.pi * 5 * t / n)])
    c = complex_covariance(analytic_matrix(x)).matrix
    assert abs(abs(c[0, 1]) - c[0, 0].real) <= 1e-9
    assert abs(c[0, 1].real) <= 1e-9


def test_hermitian_and_psd(rng):
    for _ in range(20):
        c = complex_covariance(analytic_matrix(rng.normal(size=(64, 8)))).matrix
        assert np.max(np.abs(c - c.conj().T)) <= 1e-12
        lam = np.linalg.eigvalsh(c)
        assert lam[0] >= -1e-10 * lam[-1]


def test_covariance_validation():
    with pytest.raises(ValidationError):
        HermitianCovariance(np.array([[1.0, 0.5], [0.4, 1.0]]), "real", 2)
    with pytest.raises(ValidationError):
        HermitianCovariance(np.array([[-1.0]]), "real", 2)
    with pytest.raises(ValidationError):
        HermitianCovariance(np.eye(2), "quaternion", 2)
    with pytest.raises(NotPSDError):
        spectral_decomposition(HermitianCovariance(np.array([[1.0, 2.0], [2.0, 1.0]]), "real", 2))


def test_identity_eigenvalues():
    d = spectral_decomposition(HermitianCovariance(np.eye(3), "real", 10))
    np.testing.assert_array_equal(d.eigenvalues, [1.0, 1.0, 1.0])


def test_diagonal_example():
    d = spectral_decomposition(HermitianCovariance(np.diag([3.0, 1.0]), "real", 10))
    np.testing.assert_array_equal(d.eigenvalues, [3.0, 1.0])
    np.testing.assert_allclose(d.eigenvectors[0], [1.0, 0.0], atol=1e-15)


def test_random_reconstruction(rng):
    cov = random_hermitian_psd(rng, 6)
    d = spectral_decomposition(cov)
    assert np.max(np.abs(d.reconstruct() - cov.matrix)) <= 1e-9 * np.abs(cov.matrix).max()
    U = d.eigenvectors
    np.testing.assert_allclose(U @ U.conj().T, np.eye(6), atol=1e-12)
    assert np.all(np.diff(d.eigenvalues) <= 0)


def test_rank_deficient_clamps_to_zero(rng):
    d = spectral_decomposition(random_hermitian_psd(rng, 5, rank=2))
    assert np.all(d.eigenvalues >= 0)
    assert np.all(d.eigenvalues[2:] <= 1e-10 * d.eigenvalues[0])


def test_phase_convention(rng):
    d = spectral_decomposition(random_hermitian_psd(rng, 5))
    for row in d.eigenvectors:
        j = np.argmax(np.abs(row))
        assert row[j].imag == 0 and row[j].real > 0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 8))
def test_trace_preservation(seed, m):
    rng = np.random.default_rng(seed)
    cov = random_hermitian_psd(rng, m)
    d = spectral_decomposition(cov)
    tr = np.trace(cov.matrix).real
    assert abs(d.eigenvalues.sum() - tr) <= 1e-9 * tr


def test_real_kind_eigenvectors_are_real(rng):
    x = rng.normal(size=(30, 5))
    d = spectral_decomposition(sample_covariance(x))
    assert np.max(np.abs(np.imag(d.eigenvectors))) < 1e-10


def test_permutation_equivariance(rng):
    cov = random_hermitian_psd(rng, 5)
    perm = rng.permutation(5)
    d = spectral_decomposition(cov)
    dp = spectral_decomposition(HermitianCovariance(cov.matrix[np.ix_(perm, perm)], "complex", 5))
    np.testing.assert_allclose(dp.eigenvalues, d.eigenvalues, atol=1e-10)
    # eigenvalues are distinct, so rows agree up to a unit phase
    for u, up in zip(d.eigenvectors, dp.eigenvectors):
        overlap = np.vdot(u[perm], up)
        assert abs(abs(overlap) - 1) <= 1e-10


def test_zero_imaginary_complex_takes_real_basis(rng):
    x = rng.normal(size=(40, 4))
    dr = spectral_decomposition(sample_covariance(x))
    dc = spectral_decomposition(complex_covariance((x - x.mean(axis=0)) + 0j))
    assert np.array_equal(dr.eigenvalues, dc.eigenvalues)
    assert np.array_equal(dr.eigenvectors, dc.eigenvectors.real)


def test_to_csv_layout(rng):
    cov = complex_covariance(analytic_matrix(rng.normal(size=(10, 2)), assets=["a", "b"]))
    assert cov.to_csv().splitlines()[0] == ",a_re,a_im,b_re,b_im"
