import numpy as np
import pytest
from scipy.stats import ks_2samp

from helpers import haar_settings, rotate_basis, schmidt_coefficients
from quditbell import (
    BellKind,
    MeasurementSettings,
    PerturbationConfig,
    PerturbationKind,
    apply_bilocal,
    apply_global,
    bell_state,
    evaluate_I,
    expm_i_hermitian,
    random_hermitian,
    sample_distribution,
)


def test_random_hermitian_exact_hermiticity_and_bound():
    rng = np.random.default_rng(0)
    for _ in range(50):
        h = random_hermitian(4, rng)
        assert np.array_equal(h, h.conj().T)
        assert np.max(np.abs(h)) <= 1.0


def test_random_hermitian_real_eigenvalues():
    rng = np.random.default_rng(1)
    h = random_hermitian(6, rng)
    w = np.linalg.eigvals(h)
    assert np.max(np.abs(w.imag)) < 1e-12


def test_random_hermitian_modes():
    rng = np.random.default_rng(2)
    real = random_hermitian(4, rng, mode="real")
    assert np.max(np.abs(real.imag)) == 0.0
    rect = random_hermitian(4, rng, mode="rectangular")
    assert np.array_equal(rect, rect.conj().T)
    assert np.max(np.abs(rect.real)) <= 1.0 and np.max(np.abs(rect.imag)) <= 1.0
    with pytest.raises(ValueError):
        random_hermitian(4, rng, mode="bogus")


def test_apply_bilocal_zero_strength_is_identity():
    state = bell_state(3)
    out = apply_bilocal(state, 0.0, np.random.default_rng(3))
    assert np.allclose(out.amplitudes, state.amplitudes, atol=1e-14)


def test_apply_bilocal_preserves_norm_and_schmidt_spectrum():
    rng = np.random.default_rng(4)
    state = bell_state(3)
    before = schmidt_coefficients(state)
    for _ in range(20):
        out = apply_bilocal(state, 0.7, rng)
        assert abs(np.linalg.norm(out.amplitudes) - 1.0) < 1e-12
        assert np.max(np.abs(schmidt_coefficients(out) - before)) < 1e-10


def test_apply_global_zero_strength_is_identity():
    state = bell_state(3)
    out = apply_global(state, 0.0, np.random.default_rng(5))
    assert np.allclose(out.amplitudes, state.amplitudes, atol=1e-14)


def test_apply_global_moves_schmidt_spectrum():
    rng = np.random.default_rng(6)
    state = bell_state(3)
    before = schmidt_coefficients(state)
    moved = 0
    trials = 200
    for _ in range(trials):
        out = apply_global(state, 0.5, rng)
        assert abs(np.linalg.norm(out.amplitudes) - 1.0) < 1e-12
        if np.max(np.abs(schmidt_coefficients(out) - before)) > 1e-6:
            moved += 1
    assert moved > trials / 2


def test_repeated_perturbations_preserve_norm():
    rng = np.random.default_rng(7)
    state = bell_state(2)
    for apply in (apply_bilocal, apply_global):
        out = apply(apply(state, 0.3, rng), 1.1, rng)
        assert abs(np.linalg.norm(out.amplitudes) - 1.0) < 1e-12


def test_bilocal_covariance_against_counter_rotated_settings():
    # measuring the rotated state with ideal settings == measuring the ideal
    # state with settings rotated the opposite way
    d = 3
    state = bell_state(d)
    settings = haar_settings(d, np.random.default_rng(8))
    rng = np.random.default_rng(9)
    ha = random_hermitian(d, rng)
    hb = random_hermitian(d, rng)
    perturbed = apply_bilocal(state, 0.4, np.random.default_rng(9))
    ua = expm_i_hermitian(ha, 0.4)
    ub = expm_i_hermitian(hb, 0.4)
    counter = MeasurementSettings(
        rotate_basis(settings.a1, ua.conj().T),
        rotate_basis(settings.a2, ua.conj().T),
        rotate_basis(settings.b1, ub.conj().T),
        rotate_basis(settings.b2, ub.conj().T),
    )
    assert abs(evaluate_I(perturbed, settings).value - evaluate_I(state, counter).value) < 1e-10


def test_sign_of_strength_does_not_change_the_value_distribution():
    n = 10_000
    plus = sample_distribution(BellKind.I, 2, 0.3, PerturbationKind.BILOCAL, n, 13).values
    minus = sample_distribution(BellKind.I, 2, -0.3, PerturbationKind.BILOCAL, n, 14).values
    assert ks_2samp(plus, minus).pvalue > 0.01


def test_perturbation_config_validation_and_apply():
    with pytest.raises(ValueError):
        PerturbationConfig(-0.1, PerturbationKind.BILOCAL, 0)
    with pytest.raises(ValueError):
        PerturbationConfig(0.1, PerturbationKind.BILOCAL, 0, hermitian_mode="bogus")
    config = PerturbationConfig(0.25, PerturbationKind.GLOBAL, 21)
    state = bell_state(2)
    out1 = config.apply(state, 5)
    out2 = config.apply(state, 5)
    assert np.array_equal(out1.amplitudes, out2.amplitudes)
