import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import PI, standard_pump
from nlsattractor.pumping import (
    PumpMode,
    QuasiPeriodicPump,
    envelope_profile,
    pump_derivative,
    pump_eval,
    pump_sup_norm,
    pump_translate,
    zero_pump,
)
from nlsattractor.spectral import SpectralField, build_domain, random_field, sobolev_norm


@pytest.fixture
def dom():
    return build_domain(PI, PI, 16, 16, 5, 5)


def _random_pump(d, rng, n=3):
    return QuasiPeriodicPump(
        d, tuple(PumpMode(random_field(d, rng, rng.random() + 0.1), rng.normal() * 3, rng.random() * 2 * PI)
                 for _ in range(n))
    )


def test_empty_pump(dom):
    p = zero_pump(dom)
    for t in (0.0, 1.7, -40.0):
        assert np.all(pump_eval(p, t).coeffs == 0)
    assert pump_sup_norm(p) == 0


def test_autonomous_and_half_period(dom, rng):
    q = random_field(dom, rng, 1.0)
    const = QuasiPeriodicPump(dom, (PumpMode(q),))
    for t in (0.0, 3.3, -12.0):
        np.testing.assert_array_equal(pump_eval(const, t).coeffs, q.coeffs)
    osc = QuasiPeriodicPump(dom, (PumpMode(q, 1.0, 0.0),))
    np.testing.assert_allclose(pump_eval(osc, PI).coeffs, -q.coeffs, atol=1e-15)


def test_profile_must_share_domain(dom):
    other = build_domain(PI, PI, 16, 16, 4, 4)
    with pytest.raises(ValueError):
        QuasiPeriodicPump(dom, (PumpMode(SpectralField.zeros(other)),))


def test_sup_norm_single_mode(dom, rng):
    q = random_field(dom, rng, 2.5)
    p = QuasiPeriodicPump(dom, (PumpMode(q, 0.7, 0.1),))
    assert pump_sup_norm(p) == pytest.approx(2.5, rel=1e-14)
    ts = np.linspace(0, 20, 101)
    assert max(sobolev_norm(pump_eval(p, t), 1) for t in ts) == pytest.approx(2.5, rel=1e-12)


def test_sup_norm_bounds_dense_sampling(dom):
    # orthogonal profiles, incommensurate frequencies, t in [0, 1e4]
    q1 = SpectralField.from_modes(dom, {(1, 1): 1.0, (2, 2): 0.3j})
    q2 = SpectralField.from_modes(dom, {(1, 2): 0.5, (3, 1): -0.2})
    p = QuasiPeriodicPump(dom, (PumpMode(q1, 1.0, 0.0), PumpMode(q2, math.sqrt(2), 0.4)))
    ts = np.linspace(0, 1e4, 200001)
    f = np.exp(1j * (np.outer(ts, p.omegas) + p.phases))
    coeffs = np.tensordot(f, p.profiles, axes=1)
    sampled = np.sqrt(np.sum(dom.lam * np.abs(coeffs) ** 2, axis=(-2, -1))).max()
    bound = pump_sup_norm(p)
    assert bound - sampled >= 0
    # orthogonal profiles: ||p(t)||_E is constant, so the bound is not attained
    assert sampled < bound


def test_translate_identity(dom, rng):
    p = _random_pump(dom, rng)
    assert pump_translate(p, 0.0) == p
    for _ in range(100):
        tau, t = rng.uniform(-50, 50, 2)
        lhs = pump_eval(pump_translate(p, tau), t).coeffs
        rhs = pump_eval(p, t + tau).coeffs
        assert np.max(np.abs(lhs - rhs)) <= 1e-14 * max(1.0, np.abs(rhs).max())


def test_translate_period(dom, rng):
    p = QuasiPeriodicPump(dom, (PumpMode(random_field(dom, rng, 1.0), 1.0, 0.2),))
    shifted = pump_translate(p, 2 * PI)
    for t in np.linspace(-5, 5, 11):
        np.testing.assert_allclose(pump_eval(shifted, t).coeffs, pump_eval(p, t).coeffs, atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.floats(-100, 100), st.floats(-100, 100), st.floats(-10, 10))
def test_translate_group_law(a, b, t):
    d = build_domain(PI, PI, 8, 8, 3, 3)
    p = _random_pump(d, np.random.default_rng(5))
    two = pump_translate(pump_translate(p, a), b)
    one = pump_translate(p, a + b)
    # phase arithmetic agrees modulo 2 pi up to round-off
    diff = np.angle(np.exp(1j * (two.phases - one.phases)))
    assert np.max(np.abs(diff)) <= 1e-12 * (1 + abs(a) + abs(b)) * (1 + np.abs(p.omegas).max())
    np.testing.assert_allclose(pump_eval(two, t).coeffs, pump_eval(one, t).coeffs, atol=1e-11)


def test_translates_controlled_by_phase_distance(dom):
    # phase-close pairs t_k, t_k': every omega_j (t_k - t_k') is close to a multiple of 2 pi
    q1 = SpectralField.from_modes(dom, {(1, 1): 1.0})
    q2 = SpectralField.from_modes(dom, {(2, 1): 0.5j})
    p = QuasiPeriodicPump(dom, (PumpMode(q1, 1.0, 0.0), PumpMode(q2, 2.0, 0.3)))
    grid = np.linspace(0, 10, 201)
    for tk, tk2 in [(0.0, 2 * PI + 1e-3), (1.0, 1.0 + 10 * PI - 1e-4), (5.0, 5.0 + 4 * PI + 1e-6)]:
        a, b = pump_translate(p, tk), pump_translate(p, tk2)
        sup = max(sobolev_norm(pump_eval(a, t) - pump_eval(b, t), 1.0) for t in grid)
        bound = sum(
            sobolev_norm(m.profile, 1.0) * abs(np.exp(1j * m.omega * tk) - np.exp(1j * m.omega * tk2))
            for m in p.modes
        )
        assert sup <= bound * (1 + 1e-9) + 1e-14
        assert bound < 1e-2


def test_derivative_matches_fd(dom, rng):
    p = _random_pump(dom, rng)
    h = 1e-6
    for t in (0.0, 1.3, -7.2):
        fd = (pump_eval(p, t + h).coeffs - pump_eval(p, t - h).coeffs) / (2 * h)
        np.testing.assert_allclose(pump_derivative(p, t).coeffs, fd, atol=1e-7)


def test_envelope_profile_bounds_pump(dom, rng):
    p = _random_pump(dom, rng)
    env = envelope_profile(p)
    for t in rng.uniform(-20, 20, 25):
        vals = dom.synthesize(pump_eval(p, t).coeffs, padded=True)
        assert np.all(np.abs(vals) <= env + 1e-12)
    assert envelope_profile(zero_pump(dom)).shape == env.shape


def test_restricted_is_projection(std_domain):
    p = standard_pump(std_domain)
    small = std_domain.with_modes(1, 1)
    r = p.restricted(small)
    np.testing.assert_array_equal(r.profiles[:, 0, 0], p.profiles[:, 0, 0])
    assert r.profiles.shape == (2, 1, 1)
    np.testing.assert_array_equal(r.omegas, p.omegas)
