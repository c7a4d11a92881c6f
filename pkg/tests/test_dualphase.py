import numpy as np
import pytest

from nonflat.curves import make_curve
from nonflat.dualphase import (
    R_profile,
    RProfile,
    make_dual,
    mean_value_factor,
    phi_pair,
    second_derivative_ratio,
)
from nonflat.errors import DegenerateError, DomainError, MonotonicityError


def test_make_dual_square_closed_form():
    pair = make_dual(lambda t: t ** 2, lambda t: 2.0 * t, (0.0, 10.0))
    xi = np.array([0.5, 2.0, 10.0, 19.0])
    assert np.max(np.abs(pair.psi_prime(xi) - xi / 2.0)) < 1e-10
    assert np.max(np.abs(pair.psi(xi) - xi ** 2 / 4.0)) < 1e-9
    assert pair.dual_interval == pytest.approx((0.0, 20.0))


def test_make_dual_scaled_square():
    pair = make_dual(lambda t: 3.0 * t ** 2, lambda t: 6.0 * t, (0.0, 10.0))
    xi = np.array([1.0, 7.5, 30.0])
    assert np.max(np.abs(pair.psi(xi) - xi ** 2 / 12.0)) < 1e-9


def test_make_dual_cubic_matches_sup_oracle():
    pair = make_dual(lambda t: t ** 3, lambda t: 3.0 * t ** 2, (0.1, 10.0))
    ts = np.linspace(0.1, 10.0, 400001)
    cubes = ts ** 3
    for xi in (0.04, 1.0, 7.0, 100.0):
        sup = np.max(ts * xi - cubes)
        got = pair.psi(xi)
        assert got == pytest.approx(sup, rel=1e-6, abs=1e-9)
    t = np.linspace(0.1, 10.0, 57)
    back = pair.psi_prime(3.0 * t ** 2)
    assert np.max(np.abs(back - t) / np.maximum(np.abs(t), 1.0)) < 1e-8


def test_make_dual_rejects_non_monotone():
    with pytest.raises(MonotonicityError):
        make_dual(lambda t: np.sin(t), lambda t: np.cos(t), (0.0, 6.0))


def test_psi_prime_domain_guard():
    pair = make_dual(lambda t: t ** 2, lambda t: 2.0 * t, (1.0, 2.0))
    with pytest.raises(DomainError):
        pair.psi_prime(10.0)


def test_R_profile_closed_forms():
    c2 = make_curve("monomial:2")
    c3 = make_curve("monomial:3")
    assert R_profile(c2, 0, 2.0) == pytest.approx(1.5, abs=1e-12)
    assert R_profile(c3, 0, 4.0) == pytest.approx(14.0 / 3.0, rel=1e-12)
    # below the anchor the integral is negative
    assert R_profile(c2, 0, 0.5) == pytest.approx((0.25 - 1.0) / 2.0, abs=1e-12)


def test_R_profile_laurent_frozen_oracle():
    # independent QUADPACK integration of the scale-8 profile froze this value
    curve = make_curve("laurent:1@2,1@4")
    assert R_profile(curve, 8, 1.5) == pytest.approx(
        0.62498808107153514, rel=1e-10)


def test_R_profile_additivity():
    curve = make_curve("laurent:1@2,1@4")
    full = R_profile(curve, 8, 1.8)
    split = R_profile(curve, 8, 1.3) + R_profile(curve, 8, 1.8, lower=1.3)
    assert abs(full - split) < 1e-10


def test_rprofile_engine_accuracy():
    c2 = make_curve("monomial:2")
    c3 = make_curve("monomial:3")
    e2 = RProfile(c2, j=0)
    e3 = RProfile(c3, j=0)
    assert e2.fit_error < 1e-9 and e3.fit_error < 1e-9
    x = np.linspace(0.25, 4.4, 120)
    assert np.max(np.abs(e3.r(x) - np.sqrt(x))) < 1e-10
    assert np.max(np.abs(e3.R(x) - (2.0 / 3.0) * (x ** 1.5 - 1.0))) < 1e-10
    assert np.max(np.abs(e2.r(-x) + x)) < 1e-10
    assert np.max(np.abs(e2.R(-x) - (x ** 2 - 1.0) / 2.0)) < 1e-10


def test_rprofile_no_negative_branch_for_even_slope():
    engine = RProfile(make_curve("monomial:3"), j=0)
    with pytest.raises(DomainError):
        engine.r(-1.0)


def test_phi_pair_square_closed_form():
    c2 = make_curve("monomial:2")
    p, pp = 17, 21
    pair = phi_pair(p, pp, c2, 0)
    t = np.linspace(pair.interval[0], pair.interval[1], 9)
    exact = t ** 2 / 2.0 * (1.0 / p - 1.0 / pp) + (pp - p) / 2.0
    assert np.max(np.abs(pair.phi(t) - exact)) < 1e-10
    assert np.max(np.abs(pair.phi_prime(t) - t * (1.0 / p - 1.0 / pp))) < 1e-10


def test_phi_pair_rejects_equal_frequencies():
    with pytest.raises(DegenerateError):
        phi_pair(64, 64, make_curve("monomial:2"), 0)
    with pytest.raises(DegenerateError):
        mean_value_factor(64, 64, 100.0, make_curve("monomial:2"), 0)


def test_phi_pair_cubic_derivative_consistency():
    pair = phi_pair(256, 260, make_curve("monomial:3"), 0)
    t0, h = 300.0, 1e-3
    fd = (pair.phi(t0 + h) - pair.phi(t0 - h)) / (2.0 * h)
    assert pair.phi_prime(t0) == pytest.approx(fd, rel=1e-6)
    dd = pair.meta["phi_dprime"]
    fd2 = (pair.phi_prime(t0 + h) - pair.phi_prime(t0 - h)) / (2.0 * h)
    assert dd(t0) == pytest.approx(fd2, rel=1e-6)


def test_mean_value_factor_values():
    c2 = make_curve("monomial:2")
    assert mean_value_factor(17, 21, 5.0, c2, 0) == pytest.approx(1.0, rel=1e-9)
    c3 = make_curve("monomial:3")
    t0 = 300.0
    mv = mean_value_factor(256, 260, t0, c3, 0)
    s = np.linspace(t0 / 260.0, t0 / 256.0, 4000)
    rdd = 0.5 * s ** -0.5
    assert rdd.min() - 1e-12 <= mv <= rdd.max() + 1e-12
    # near the small end of the domain the factor tracks R'' there
    t1 = 260.0 * 0.21
    mv_small = mean_value_factor(256, 260, t1, c3, 0)
    s1 = np.linspace(t1 / 260.0, t1 / 256.0, 4000)
    rdd1 = 0.5 * s1 ** -0.5
    assert rdd1.min() - 1e-12 <= mv_small <= rdd1.max() + 1e-12


def test_curvature_lower_bound_samples():
    # |Phi''(x)| >= 0.5 c |x|^-1 |Phi'(x)| on sampled pairs, c from the
    # certification (1 for the parabola, 1/16 for the cubic)
    cases = [("monomial:2", 0.5 * 1.0), ("monomial:3", 0.5 * 0.0625)]
    rng = np.random.default_rng(7)
    for spec, bound in cases:
        curve = make_curve(spec)
        m = 6
        for _ in range(12):
            p, pp = rng.choice(np.arange(2 ** m, 2 ** (m + 1) + 1), size=2,
                               replace=False)
            pair = phi_pair(int(p), int(pp), curve, 0)
            xs = np.linspace(pair.interval[0], pair.interval[1], 257)
            assert second_derivative_ratio(pair, xs) >= bound


def test_remainder_form_keeps_lower_bound():
    curve = make_curve("laurent:1@2,1@4")
    for flag in (False, True):
        pair = phi_pair(80, 95, curve, 10, include_remainder=flag)
        xs = np.linspace(pair.interval[0], pair.interval[1], 257)
        assert second_derivative_ratio(pair, xs) >= 0.25
    lim = phi_pair(80, 95, curve, 10, include_remainder=False)
    rem = phi_pair(80, 95, curve, 10, include_remainder=True)
    t = np.linspace(lim.interval[0], lim.interval[1], 33)
    rel = np.max(np.abs(rem.phi_prime(t) - lim.phi_prime(t)) /
                 np.maximum(np.abs(lim.phi_prime(t)), 1e-30))
    assert rel < 1e-3
