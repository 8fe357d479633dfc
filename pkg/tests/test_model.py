import math

import numpy as np
import pytest

from gdnls.model import ModelParams, abs_power, lipschitz_probe, nonlinearity, rhs_mollified, rhs_nonlinear_part
from gdnls.spectral import Cutoff, SpectralField, grid_size, hs_norm, random_field


def conv_series(a, b):
    """Coefficients of the product of two centered Fourier series (exact)."""
    return np.convolve(a, b)


def exact_nonlinearity_integer(c, sigma):
    """|u|^{2 sigma} u_x by repeated exact convolution, truncated to N modes."""
    n = (c.size - 1) // 2
    k = np.arange(-n, n + 1)
    conj = np.conj(c[::-1])
    prod = 1j * k * c
    for _ in range(sigma):
        prod = conv_series(conv_series(prod, c), conj)
    m = (prod.size - 1) // 2
    return prod[m - n : m + n + 1]


def direct_strong_form(c, sigma, m):
    """-|u|^{2s} u_x + i u_xx by explicit trigonometric sums on m points."""
    n = (c.size - 1) // 2
    k = np.arange(-n, n + 1)
    x = 2 * np.pi * np.arange(m) / m
    e = np.exp(1j * np.outer(x, k))
    u, ux = e @ c, e @ (1j * k * c)
    g = (np.abs(u) ** 2) ** sigma * ux
    ghat = e.conj().T @ g / m
    return -ghat - 1j * k**2 * c


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(0.5)
    with pytest.raises(ValueError):
        ModelParams(1.0, oversample=9)
    assert ModelParams(1.5, 4).cutoff == Cutoff(4)


def test_abs_power_guard():
    out = abs_power(np.array([0.0, 1e-320, 4.0]), 1.5)
    np.testing.assert_array_equal(out[:2], 0.0)
    assert out[2] == pytest.approx(8.0)


def test_constant_has_zero_nonlinearity():
    f = SpectralField.from_modes(6, {0: 0.9 - 0.3j})
    assert np.max(np.abs(nonlinearity(f, ModelParams(1.5)).coeffs)) < 1e-15


@pytest.mark.parametrize("sigma", [1.0, 1.5, 2.0, 2.7])
@pytest.mark.parametrize("k", [-3, 1, 4])
def test_plane_wave_nonlinearity(sigma, k):
    a = 0.7 * np.exp(0.4j)
    g = nonlinearity(SpectralField.from_modes(8, {k: a}), ModelParams(sigma))
    expected = SpectralField.from_modes(8, {k: abs(a) ** (2 * sigma) * 1j * k * a})
    np.testing.assert_allclose(g.coeffs, expected.coeffs, atol=1e-14)


def test_two_mode_convolution_sigma_one():
    a, b = 0.8 - 0.1j, 0.3 + 0.5j
    f = SpectralField.from_modes(8, {1: a, 2: b})
    got = nonlinearity(f, ModelParams(1.0, oversample=2)).coeffs
    np.testing.assert_allclose(got, exact_nonlinearity_integer(f.coeffs, 1), atol=1e-14)


@pytest.mark.parametrize("sigma", [1, 2, 3])
def test_integer_sigma_alias_free(rng, sigma):
    for _ in range(5):
        f = random_field(rng, 8, decay=0.5, scale=0.4)
        got = nonlinearity(f, ModelParams(float(sigma), oversample=sigma + 1)).coeffs
        exact = exact_nonlinearity_integer(f.coeffs, sigma)
        assert np.max(np.abs(got - exact)) <= 1e-12 * max(1.0, np.max(np.abs(exact)))


def test_rhs_vanishes_above_cutoff_input():
    f = SpectralField.from_modes(8, {5: 1.0, -6: 0.5j})
    out = rhs_mollified(f, ModelParams(1.5, Cutoff(4)))
    np.testing.assert_array_equal(out.coeffs, 0.0)


@pytest.mark.parametrize("sigma", [1.0, 1.5, 2.5])
def test_rhs_strong_form_without_cutoff(rng, sigma):
    f = random_field(rng, 10, decay=2.0, scale=0.5)
    p = ModelParams(sigma, oversample=4)
    got = rhs_mollified(f, p).coeffs
    m = grid_size(10, 4)
    np.testing.assert_allclose(got, direct_strong_form(f.coeffs, sigma, m), atol=1e-12)


@pytest.mark.parametrize("k,K", [(2, None), (2, 4), (-3, 3)])
def test_rhs_plane_wave(k, K):
    a, sigma = 0.6 + 0.2j, 1.5
    f = SpectralField.from_modes(6, {k: a})
    out = rhs_mollified(f, ModelParams(sigma, Cutoff(K)))
    expected = -1j * (k * k + k * abs(a) ** (2 * sigma)) * a
    assert out.mode(k) == pytest.approx(expected, abs=1e-14)
    assert np.max(np.abs(np.delete(out.coeffs, k + 6))) < 1e-14


def test_rhs_range_in_cutoff_span(rng):
    f = random_field(rng, 16)
    out = rhs_mollified(f, ModelParams(1.3, Cutoff(5)))
    assert np.all(out.coeffs[np.abs(f.k) > 5] == 0)


def test_rhs_phase_and_translation_covariance(rng):
    f = random_field(rng, 12, decay=1.5)
    p = ModelParams(2.0, Cutoff(9), oversample=3)
    base = rhs_mollified(f, p)
    theta, x0 = 0.83, 1.21
    np.testing.assert_allclose(rhs_mollified(f.phase(theta), p).coeffs, base.phase(theta).coeffs, atol=1e-13)
    np.testing.assert_allclose(rhs_mollified(f.translate(x0), p).coeffs, base.translate(x0).coeffs, atol=1e-13)


def test_fractional_sigma_translation_by_grid_step(rng):
    f = random_field(rng, 12, decay=1.5)
    p = ModelParams(1.7, Cutoff(9))
    x0 = 5 * 2 * np.pi / grid_size(12, p.oversample)
    base = rhs_mollified(f, p)
    np.testing.assert_allclose(rhs_mollified(f.translate(x0), p).coeffs, base.translate(x0).coeffs, atol=1e-13)


def test_nonlinear_hook():
    f = SpectralField.from_modes(4, {1: 1.0})
    assert np.all(rhs_nonlinear_part(f, ModelParams(1.0, nonlinear=False)).coeffs == 0)


# --- Lipschitz probe --------------------------------------------------------------


def ball_field(rng, n, radius, band=None):
    f = random_field(rng, n, band=band)
    return f * (radius * rng.uniform(0.2, 1.0) / hs_norm(f, 1))


def test_lipschitz_requires_distinct():
    f = SpectralField.from_modes(4, {1: 1.0})
    with pytest.raises(ValueError):
        lipschitz_probe(f, f, ModelParams(1.0, Cutoff(2)))


def test_lipschitz_difference_above_cutoff_is_invisible(rng):
    f = ball_field(rng, 16, 1.0)
    g = f + SpectralField.from_modes(16, {12: 0.01, -11: 0.02j})
    s = lipschitz_probe(f, g, ModelParams(1.5, Cutoff(8)))
    assert s.ratio == 0.0 and s.nonlinear_ratio == 0.0


def test_lipschitz_scaling_in_cutoff(rng):
    """Nonlinear part grows at most linearly in K; linear part is bounded by K^2."""
    n = 32
    slope = {}
    for K in (4, 8, 16):
        pairs = [(ball_field(rng, n, 1.0, K), ball_field(rng, n, 1.0, K)) for _ in range(40)]
        p = ModelParams(1.5, Cutoff(K))
        samples = [lipschitz_probe(f, g, p) for f, g in pairs]
        assert max(s.linear_ratio for s in samples) <= K * K * (1 + 1e-12)
        slope[K] = max(s.nonlinear_ratio for s in samples) / K
    assert slope[16] <= 1.5 * slope[4]
    assert slope[8] <= 1.5 * slope[4]


def test_lipschitz_near_diagonal_bounded(rng):
    f = ball_field(rng, 16, 1.0)
    d = random_field(rng, 16)
    p = ModelParams(1.5, Cutoff(8))
    ratios = [lipschitz_probe(f, f + d * h, p).nonlinear_ratio for h in (1e-4, 1e-5, 1e-6)]
    assert all(math.isfinite(r) for r in ratios)
    assert max(ratios) <= 1.05 * min(ratios)
