import numpy as np
import pytest
from scipy.stats import ks_2samp

from quditbell import (
    derive_rng,
    expm_i_hermitian,
    haar_unitary,
    tensor_product,
    uniform_sphere_state,
)


def random_hermitian_gaussian(d, rng):
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (z + z.conj().T) / 2


def test_expm_diagonal_case():
    h = np.diag([0.0, 1.0]).astype(complex)
    theta = 0.7234
    u = expm_i_hermitian(h, theta)
    assert np.allclose(u, np.diag([1.0, np.exp(1j * theta)]), atol=1e-14)


def test_expm_zero_angle_is_identity():
    rng = np.random.default_rng(3)
    h = random_hermitian_gaussian(4, rng)
    assert np.allclose(expm_i_hermitian(h, 0.0), np.eye(4), atol=1e-14)


def test_expm_unitarity_by_explicit_multiplication():
    rng = np.random.default_rng(4)
    h = random_hermitian_gaussian(5, rng)
    u = expm_i_hermitian(h, 0.3)
    assert np.linalg.norm(u.conj().T @ u - np.eye(5)) < 1e-10


def test_expm_inverse_and_group_property():
    rng = np.random.default_rng(5)
    h = random_hermitian_gaussian(6, rng)
    u_plus = expm_i_hermitian(h, 0.4)
    u_minus = expm_i_hermitian(h, -0.4)
    assert np.linalg.norm(u_plus @ u_minus - np.eye(6)) < 1e-9
    u_sum = expm_i_hermitian(h, 0.9)
    assert np.linalg.norm(u_sum - expm_i_hermitian(h, 0.5) @ u_plus) < 1e-9


def test_expm_rejects_bad_input():
    with pytest.raises(ValueError):
        expm_i_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]), 1.0)  # not Hermitian
    with pytest.raises(ValueError):
        expm_i_hermitian(np.array([[np.nan, 0.0], [0.0, 0.0]]), 1.0)
    with pytest.raises(ValueError):
        expm_i_hermitian(np.eye(2), np.inf)


def test_expm_supports_stacks():
    rng = np.random.default_rng(6)
    h = np.stack([random_hermitian_gaussian(3, rng) for _ in range(4)])
    stacked = expm_i_hermitian(h, 0.2)
    for i in range(4):
        assert np.allclose(stacked[i], expm_i_hermitian(h[i], 0.2), atol=1e-13)


def test_tensor_product_identities_and_shape():
    assert np.array_equal(tensor_product(np.eye(2), np.eye(3)), np.eye(6))
    m = np.arange(4).reshape(2, 2).astype(complex)
    n = np.arange(9).reshape(3, 3).astype(complex)
    assert tensor_product(m, n).shape == (6, 6)


def test_tensor_product_index_convention():
    e0 = np.array([1.0, 0.0])
    e1 = np.array([0.0, 1.0])
    combined = tensor_product(e0, e1)
    expected = np.zeros(4)
    expected[0 * 2 + 1] = 1.0  # i_A * d_B + i_B
    assert np.array_equal(combined, expected)


def test_tensor_product_bilinear():
    rng = np.random.default_rng(7)
    m = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    n = rng.standard_normal((3, 3))
    assert np.allclose(tensor_product(2.5j * m, n), 2.5j * tensor_product(m, n))


def test_haar_unitary_d1_is_phase():
    u = haar_unitary(1, np.random.default_rng(8))
    assert abs(abs(u[0, 0]) - 1.0) < 1e-12


def test_haar_unitary_is_unitary():
    for d in (2, 3, 5):
        u = haar_unitary(d, np.random.default_rng(d))
        assert np.linalg.norm(u.conj().T @ u - np.eye(d)) < 1e-10


def test_haar_unitary_rejects_zero_dim():
    with pytest.raises(ValueError):
        haar_unitary(0, np.random.default_rng(0))


def test_haar_moment_matches_uniform_measure():
    # E|U_ij|^2 = 1/d for Haar-distributed U
    rng = np.random.default_rng(9)
    n = 10_000
    samples = np.array([abs(haar_unitary(2, rng)[0, 0]) ** 2 for _ in range(n)])
    se = samples.std(ddof=1) / np.sqrt(n)
    assert abs(samples.mean() - 0.5) < 3 * se


def test_uniform_sphere_state_norm_and_errors():
    v = uniform_sphere_state(4, np.random.default_rng(10))
    assert abs(np.linalg.norm(v) - 1.0) < 1e-12
    with pytest.raises(ValueError):
        uniform_sphere_state(0, np.random.default_rng(0))


def test_uniform_sphere_state_moments():
    rng = np.random.default_rng(11)
    n = 10_000
    samples = np.array([uniform_sphere_state(4, rng) for _ in range(n)])
    # component means vanish by symmetry
    for part in (samples.real, samples.imag):
        means = part.mean(axis=0)
        ses = part.std(axis=0, ddof=1) / np.sqrt(n)
        assert np.all(np.abs(means) < 3 * ses + 1e-12)
    # E|c_0|^2 = 1/4 on the 4-dimensional sphere
    weights = np.abs(samples[:, 0]) ** 2
    se = weights.std(ddof=1) / np.sqrt(n)
    assert abs(weights.mean() - 0.25) < 3 * se


def test_uniform_sphere_state_rotation_invariance():
    # |c_0|^2 has the same law before and after a fixed unitary rotation
    rng = np.random.default_rng(12)
    fixed = haar_unitary(4, np.random.default_rng(99))
    n = 10_000
    plain = np.empty(n)
    rotated = np.empty(n)
    for i in range(n):
        v = uniform_sphere_state(4, rng)
        plain[i] = abs(v[0]) ** 2
        rotated[i] = abs((fixed @ v)[0]) ** 2
    assert ks_2samp(plain, rotated).pvalue > 0.01


def test_derive_rng_streams_are_stable_and_distinct():
    a1 = derive_rng(5, 0).standard_normal(4)
    a2 = derive_rng(5, 0).standard_normal(4)
    b = derive_rng(5, 1).standard_normal(4)
    assert np.array_equal(a1, a2)
    assert not np.array_equal(a1, b)
