import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import PI, eval_direct, gauss_grid
from nlsattractor.nonlinearity import (
    QuarticPotential,
    apply_nonlinearity,
    condition_constants,
    f_jacobian,
    f_second,
    f_value,
    potential_energy,
    potential_value,
    verify_condition_constants,
)
from nlsattractor.spectral import SpectralField, build_domain, random_field, sobolev_norm


def _random_psi(rng, n, rmax=10.0):
    r = rmax * np.sqrt(rng.random(n))
    return r * np.exp(2j * PI * rng.random(n))


def test_potential_examples():
    assert potential_value(QuarticPotential(1), 1 + 0j) == 1
    assert potential_value(QuarticPotential(2, 3, 0.7), 0j) == 0.7
    assert potential_value(QuarticPotential(1, -1, 0.25), 1j) == pytest.approx(0.25, abs=1e-15)


def test_reject_focusing():
    with pytest.raises(ValueError, match="defocusing requires a2>0"):
        QuarticPotential(-1.0)
    with pytest.raises(ValueError, match="defocusing requires a2>0"):
        condition_constants(QuarticPotential(0.0, 1.0))


def test_f_examples():
    p = QuarticPotential(1)
    assert f_value(p, 1 + 0j) == 4
    assert f_value(QuarticPotential(0.3, -2, 1), 0j) == 0
    assert f_value(p, 1 + 1j) == pytest.approx(8 + 8j, abs=1e-14)


def test_gradient_matches_finite_differences(rng):
    p = QuarticPotential(1.3, -0.7, 0.4)
    psi = _random_psi(rng, 1000)
    h = 1e-5
    dx = (potential_value(p, psi + h) - potential_value(p, psi - h)) / (2 * h)
    dy = (potential_value(p, psi + 1j * h) - potential_value(p, psi - 1j * h)) / (2 * h)
    fd = dx + 1j * dy
    f = f_value(p, psi)
    assert np.max(np.abs(fd - f) / np.maximum(1.0, np.abs(f))) < 1e-6


def test_jacobian_examples():
    p = QuarticPotential(1, 0.5, 0)
    np.testing.assert_array_equal(f_jacobian(p, 0j), np.diag([1.0, 1.0]))
    np.testing.assert_allclose(f_jacobian(QuarticPotential(1), 1 + 0j), [[12, 0], [0, 4]])


def test_jacobian_symmetric_and_matches_fd(rng):
    p = QuarticPotential(0.8, 1.1, -0.3)
    psi = _random_psi(rng, 1000)
    J = f_jacobian(p, psi)
    assert np.array_equal(J, np.swapaxes(J, -1, -2))
    h = 1e-5
    col_x = (f_value(p, psi + h) - f_value(p, psi - h)) / (2 * h)
    col_y = (f_value(p, psi + 1j * h) - f_value(p, psi - 1j * h)) / (2 * h)
    fd = np.stack([np.stack([col_x.real, col_y.real], -1), np.stack([col_x.imag, col_y.imag], -1)], -2)
    scale = np.maximum(1.0, np.abs(J).max(axis=(-2, -1)))[:, None, None]
    assert np.max(np.abs(fd - J) / scale) < 1e-6


def test_third_derivative_matches_fd(rng):
    p = QuarticPotential(1.5, -1, 0)
    psi = _random_psi(rng, 200, 5.0)
    T = f_second(p, psi)
    h = 1e-5
    dJx = (f_jacobian(p, psi + h) - f_jacobian(p, psi - h)) / (2 * h)
    dJy = (f_jacobian(p, psi + 1j * h) - f_jacobian(p, psi - 1j * h)) / (2 * h)
    fd = np.stack([dJx, dJy], axis=-1)  # [..., i, j, k] = d_k J_ij
    assert np.max(np.abs(fd - T)) < 1e-6 * max(1.0, np.abs(T).max())
    rho = np.abs(psi)
    assert np.allclose(np.sqrt(np.sum(T**2, axis=(-3, -2, -1))), 16 * math.sqrt(3) * 1.5 * rho, rtol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 50), st.floats(-2 * PI, 2 * PI), st.floats(-8, 8), st.floats(-8, 8),
       st.floats(0.1, 3), st.floats(-3, 3))
def test_gauge_covariance_and_orthogonality(r, theta, x, y, a2, a1):
    p = QuarticPotential(a2, a1, 0.0)
    psi = complex(x, y)
    rot = np.exp(1j * theta)
    lhs, rhs = f_value(p, rot * psi), rot * f_value(p, psi)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))
    f = f_value(p, psi)
    # Re <f(psi), i psi> = Re(f conj(i psi)) vanishes: f is a real multiple of psi
    assert abs((f * np.conj(1j * psi)).real) <= 1e-12 * max(1.0, abs(f) * abs(psi))


def test_condition_constants_examples():
    c = condition_constants(QuarticPotential(1, 0, 0))
    assert (c.kappa2, c.b2) == (4.0, 0.0)
    assert c.kappa3 == 4.0
    c11 = condition_constants(QuarticPotential(1, 1, 0))
    assert c11.b3 == 0.0
    # eigenvalue scan for (1,1,0): the smallest eigenvalue of f' is 4|psi|^2 + 2 >= 2
    r = np.linspace(0, 1e3, 20001)
    lam_min = np.linalg.eigvalsh(f_jacobian(QuarticPotential(1, 1, 0), r + 0j))[:, 0]
    assert lam_min.min() >= 2 - 1e-12


@pytest.mark.parametrize(
    "a", [(1, 0, 0), (1, 1, 0), (1, -1, 0.25), (0.5, 2, -3), (2, -3, 1), (1e-2, 5, 5), (3, 0, -1)]
)
def test_condition_constants_sampled(a):
    p = QuarticPotential(*a)
    c = condition_constants(p)
    for v in (c.kappa1, c.kappa2, c.kappa3, c.kappa4, c.kappa5, c.upper_C):
        assert v > 0
    excess = verify_condition_constants(p, c)
    assert all(v <= 0 for v in excess.values()), excess


def test_verifier_detects_bad_constants():
    p = QuarticPotential(1, 0, 0)
    c = condition_constants(p)
    bad = type(c)(**{**c.__dict__, "kappa3": 3.0})
    assert verify_condition_constants(p, bad)["U3"] > 0


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 5), st.floats(-5, 5), st.floats(-5, 5))
def test_condition_constants_property(a2, a1, a0):
    p = QuarticPotential(a2, a1, a0)
    excess = verify_condition_constants(p, condition_constants(p), n_radii=801, n_angles=4)
    assert all(v <= 0 for v in excess.values()), excess


def test_nonlinearity_zero_and_linear(rng, mid_square):
    zero = SpectralField.zeros(mid_square)
    assert np.all(apply_nonlinearity(zero, QuarticPotential(1, 2, 3)).coeffs == 0)
    f = random_field(mid_square, rng, 2.0)
    # a2 = 0: f = 2 a1 psi and projection commutes with scaling
    out = apply_nonlinearity(f, QuarticPotential(0.0, 0.75))
    np.testing.assert_allclose(out.coeffs, 1.5 * f.coeffs, atol=1e-13 * np.abs(f.coeffs).max())


@pytest.mark.parametrize("modes", [{(1, 1): 1.0}, {(2, 3): 0.4 - 0.9j}, "random"])
def test_nonlinearity_matches_gauss_quadrature(modes, rng):
    d = build_domain(PI, 2.0, 8, 8, 3, 3)
    f = random_field(d, rng, 2.0) if modes == "random" else SpectralField.from_modes(d, modes)
    p = QuarticPotential(1.0, -0.3)
    x, y, w = gauss_grid(PI, 2.0, 64)
    psi = eval_direct(d, f.coeffs, x, y)
    fpsi = (4 * p.a2 * np.abs(psi) ** 2 + 2 * p.a1) * psi
    ref = np.zeros(d.shape, dtype=complex)
    for j in range(1, 4):
        for k in range(1, 4):
            basis = eval_direct(d, np.eye(3)[j - 1][:, None] * np.eye(3)[k - 1][None, :], x, y).real
            ref[j - 1, k - 1] = np.sum(w * fpsi * basis)
    np.testing.assert_allclose(apply_nonlinearity(f, p).coeffs, ref, atol=1e-12 * max(1.0, np.abs(ref).max()))


def test_potential_energy_examples():
    d = build_domain(PI, PI, 16, 16, 5, 5)
    zero = SpectralField.zeros(d)
    assert potential_energy(zero, QuarticPotential(1)) == 0
    assert potential_energy(zero, QuarticPotential(1, 0, 2.5)) == pytest.approx(2.5 * PI**2, rel=1e-14)
    one = SpectralField.from_modes(d, {(1, 1): 1})
    closed = (16 / PI**4) * (3 * PI / 8) ** 2
    assert closed == pytest.approx(9 / (4 * PI**2), rel=1e-15)
    assert potential_energy(one, QuarticPotential(1)) == pytest.approx(closed, rel=1e-13)


def test_potential_energy_gauss_oracle(rng):
    d = build_domain(1.5, 0.8, 12, 10, 6, 5)
    f = random_field(d, rng, 3.0)
    p = QuarticPotential(0.7, -1.2, 0.4)
    x, y, w = gauss_grid(1.5, 0.8, 64)
    ref = np.sum(w * potential_value(p, eval_direct(d, f.coeffs, x, y)))
    assert potential_energy(f, p) == pytest.approx(ref, rel=1e-12)


def test_potential_lipschitz_on_bounded_sets(rng):
    # |U(a) - U(b)| <= C (1 + |a|^3 + |b|^3) |a - b| in H^{1/2}; C fitted on one batch,
    # then confirmed on fresh pairs
    d = build_domain(PI, PI, 32, 32, 10, 10)
    p = QuarticPotential(1.0, -0.5, 0.0)

    def ratios(n):
        out = []
        for _ in range(n):
            a = random_field(d, rng, 5 * rng.random())
            b = a + random_field(d, rng, 2 * rng.random())
            na, nb, nd = (sobolev_norm(g, 0.5) for g in (a, b, a - b))
            out.append(abs(potential_energy(a, p) - potential_energy(b, p)) / ((1 + na**3 + nb**3) * nd))
        return np.array(out)

    C = ratios(100).max()
    assert np.isfinite(C) and C > 0
    assert ratios(100).max() <= 2 * C
