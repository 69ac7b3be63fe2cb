import itertools

import numpy as np
import pytest
from scipy import integrate

from onebit.gauss import (RealCovariance, complex_to_real_cov, normal_cdf, orthant_probability, orthant_table,
                          pattern_index, sample_complex_gaussian)


def _density_integral(x):
    # independent oracle for Phi(x): adaptive quadrature of the standard normal density
    f = lambda t: np.exp(-t * t / 2) / np.sqrt(2 * np.pi)
    val, _ = integrate.quad(f, -np.inf, x, epsabs=1e-14, epsrel=1e-14)
    return val


def test_normal_cdf_values():
    assert normal_cdf(0.0) == 0.5
    assert abs(normal_cdf(40.0) - 1.0) <= 1e-15
    assert abs(normal_cdf(1.0) - _density_integral(1.0)) <= 1e-12


def test_normal_cdf_symmetry_and_monotone():
    x = np.linspace(-12, 12, 10_000)
    v = normal_cdf(x)
    assert np.all(np.diff(v) >= 0)
    assert np.max(np.abs(v + normal_cdf(-x) - 1)) <= 1e-15


def test_real_embedding_identity_and_zero():
    np.testing.assert_array_equal(complex_to_real_cov(np.eye(1)).matrix, np.diag([0.5, 0.5]))
    np.testing.assert_array_equal(complex_to_real_cov(np.zeros((2, 2))).matrix, np.zeros((4, 4)))


def test_real_embedding_blocks_and_psd():
    C = np.array([[2, 1j], [-1j, 2]])
    m = complex_to_real_cov(C).matrix
    np.testing.assert_allclose(m[:2, :2], 0.5 * C.real)
    np.testing.assert_allclose(m[:2, 2:], -0.5 * C.imag)
    np.testing.assert_allclose(m[2:, :2], 0.5 * C.imag)
    assert np.linalg.eigvalsh(m)[0] >= 0
    # sampled complex vectors reproduce C, and their real parts the embedding
    z = sample_complex_gaussian(C, 400_000, seed=5)
    np.testing.assert_allclose(z.T @ z.conj() / len(z), C, atol=0.03)
    r = np.hstack([z.real, z.imag])
    np.testing.assert_allclose(r.T @ r / len(r), m, atol=0.015)


def test_real_embedding_rejects_non_hermitian():
    with pytest.raises(ValueError):
        complex_to_real_cov(np.array([[1, 1], [0, 1]]))


def test_real_covariance_invariants():
    with pytest.raises(ValueError):
        RealCovariance(np.eye(3))
    with pytest.raises(ValueError):
        RealCovariance(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_orthant_independent_components():
    cov = RealCovariance(np.diag([0.5, 0.5]))
    est = orthant_probability(cov, [1, 1], 1000, seed=1)
    assert est.value == 0.25 and est.std_error == 0.0


@pytest.mark.parametrize("corr", [-0.8, -0.3, 0.4, 0.9])
def test_orthant_bivariate_arcsine(corr):
    cov = RealCovariance(np.array([[1.0, corr], [corr, 1.0]]))
    exact = 0.25 + np.arcsin(corr) / (2 * np.pi)
    est = orthant_probability(cov, [1, 1], 400_000, seed=11)
    assert abs(est.value - exact) <= 3 * est.std_error
    q = orthant_probability(cov, [1, 1], 1 << 14, seed=11, method="qmc")
    assert abs(q.value - exact) <= max(3 * q.std_error, 1e-6)


def test_orthant_six_dim_identity():
    cov = complex_to_real_cov(np.eye(3))
    for signs in ([1] * 6, [1, -1, 1, -1, -1, 1]):
        est = orthant_probability(cov, signs, 10_000, seed=3)
        assert abs(est.value - 1 / 64) <= 3 * est.std_error + 1e-15


def _random_cov(N, rng):
    A = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    return complex_to_real_cov(np.eye(N) + A @ A.conj().T)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_orthant_mass_sums_to_one(N):
    rng = np.random.default_rng(N)
    cov = _random_cov(N, rng)
    total, err = 0.0, 0.0
    for k, signs in enumerate(itertools.product([1, -1], repeat=2 * N)):
        est = orthant_probability(cov, signs, 20_000, seed=100 + k)
        total += est.value
        err += est.std_error
    assert abs(total - 1) <= 4 * err


def test_sign_flip_equivalence():
    rng = np.random.default_rng(8)
    cov = _random_cov(2, rng)
    s = np.array([1, -1, -1, 1])
    flipped = RealCovariance(cov.matrix * np.outer(s, s))
    a = orthant_probability(cov, s, 300_000, seed=1)
    b = orthant_probability(flipped, np.ones(4), 300_000, seed=2)
    assert abs(a.value - b.value) <= 3 * np.hypot(a.std_error, b.std_error)


def test_orthant_table_matches_single_and_is_deterministic():
    cov = _random_cov(2, np.random.default_rng(2))
    p, err = orthant_table(cov, 50_000, seed=9)
    s = [1, -1, 1, 1]
    single = orthant_probability(cov, s, 50_000, seed=9)
    assert p[pattern_index(s)] == single.value
    assert p.sum() == pytest.approx(1.0, abs=1e-12)
    p2, _ = orthant_table(cov, 50_000, seed=9)
    np.testing.assert_array_equal(p, p2)


def test_qmc_agrees_with_mc_in_six_dims():
    cov = _random_cov(3, np.random.default_rng(4))
    s = [1, 1, -1, 1, -1, -1]
    a = orthant_probability(cov, s, 1_000_000, seed=1)
    b = orthant_probability(cov, s, 1 << 15, seed=1, method="qmc")
    assert abs(a.value - b.value) <= 3 * np.hypot(a.std_error, b.std_error)


def test_singular_covariance_is_clipped_not_fatal():
    v = np.array([1.0, 1j])
    cov = complex_to_real_cov(np.outer(v, v.conj()))
    est = orthant_probability(cov, [1, 1, 1, 1], 10_000, seed=0)
    assert 0 <= est.value <= 1


def test_sampler_cases():
    assert not np.any(sample_complex_gaussian(np.zeros((3, 3)), 10, seed=1))
    z = sample_complex_gaussian(np.eye(2), 1_000_000, seed=2)
    np.testing.assert_allclose(z.T @ z.conj() / len(z), np.eye(2), atol=5e-3)
    v = np.array([1.0, 2 - 1j, 0.5j])
    z = sample_complex_gaussian(np.outer(v, v.conj()), 50, seed=3)
    coef = z @ v.conj() / np.vdot(v, v)
    np.testing.assert_allclose(z, np.outer(coef, v), atol=1e-7)
    np.testing.assert_array_equal(sample_complex_gaussian(np.eye(2), 5, seed=4),
                                  sample_complex_gaussian(np.eye(2), 5, seed=4))


def test_sampler_rejects_indefinite():
    with pytest.raises(ValueError):
        sample_complex_gaussian(np.diag([1.0, -0.5]), 3, seed=0)
