import numpy as np
import pytest
from scipy.integrate import quad

from nonflat import bumps


def test_smoothstep_reflection_identity():
    u = np.linspace(-0.5, 1.5, 401)
    s = bumps.smoothstep(u) + bumps.smoothstep(1.0 - u)
    assert np.max(np.abs(s - 1.0)) < 1e-15
    s2 = bumps.smoothstep(u, order=2) + bumps.smoothstep(1.0 - u, order=2)
    assert np.max(np.abs(s2 - 1.0)) < 1e-15


def test_smoothstep_endpoints_and_monotone():
    assert bumps.smoothstep(-1.0) == 0.0
    assert bumps.smoothstep(0.0) == 0.0
    assert bumps.smoothstep(1.0) == 1.0
    assert bumps.smoothstep(2.0) == 1.0
    u = np.linspace(0, 1, 1001)
    s = bumps.smoothstep(u)
    assert np.all(np.diff(s) >= 0)


def test_partition_of_unity_pointwise():
    # partition identity to 1e-14 at dense and random points
    rng = np.random.default_rng(7)
    x = np.concatenate([np.linspace(-5, 5, 4001), rng.uniform(-20, 20, 500)])
    total = bumps.nu0(x) + bumps.nu1(x) + bumps.nu2(x)
    assert np.max(np.abs(total - 1.0)) < 1e-14


def test_partition_supports():
    x = np.linspace(-5, 5, 10001)
    n0, n1, n2 = bumps.nu0(x), bumps.nu1(x), bumps.nu2(x)
    assert np.all(n0[np.abs(x) >= 0.9] == 0.0)
    assert np.all(n0[np.abs(x) <= 0.5] == 1.0)
    assert np.all(np.abs(n1[(np.abs(x) <= 0.5) | (np.abs(x) >= 2.0)]) < 1e-15)
    assert np.all(n2[np.abs(x) <= 1.5] == 0.0)
    assert np.all(n2[np.abs(x) >= 2.0] == 1.0)
    # n1 is actually alive on its annulus
    assert n1[np.argmin(np.abs(x - 1.2))] == pytest.approx(1.0)


def test_phi_window_support_and_plateau():
    x = np.linspace(-12, 12, 24001)
    p = bumps.phi_window(x)
    assert np.all(p[np.abs(x) <= 1.5] == 0.0)
    assert np.all(p[np.abs(x) >= 4.0] == 0.0)
    inside = (np.abs(x) >= 2.0) & (np.abs(x) <= 3.0)
    assert np.max(np.abs(p[inside] - 1.0)) < 1e-15
    assert np.all(p >= -1e-15)
    # inside the declared envelope {1/10 < |x| < 10}
    assert np.all(p[(np.abs(x) < 0.1) | (np.abs(x) > 10.0)] == 0.0)


def test_phi_window_telescopes_to_nu2():
    x = np.linspace(-40, 40, 8001)
    acc = np.zeros_like(x)
    for m in range(0, 6):
        acc += bumps.phi_window(x / 2.0**m)
    # 2^(M+1) = 64 > 2|x|/3 for |x| <= 40, so the tail cutoff is gone
    assert np.max(np.abs(acc - bumps.nu2(x))) < 1e-14


def test_rho_odd_and_support():
    t = np.linspace(-2, 2, 4001)
    r = bumps.rho(t)
    assert np.array_equal(r, -bumps.rho(-t))
    outside = (np.abs(t) <= 0.25) | (np.abs(t) >= 1.0)
    assert np.all(r[outside] == 0.0)
    assert np.max(r) > 0.5  # alive on the positive lobe


def test_rho_normalization_against_frozen_oracle():
    # positive-lobe mass of the unnormalized bump, mpmath quad at 30 digits
    oracle = 0.0052723938049572421794
    assert bumps._rho_norm() == pytest.approx(oracle, abs=1e-14)
    # independent quadrature of the normalized bump
    mass, err = quad(lambda s: float(bumps.rho(s)), 0.25, 1.0, limit=200)
    assert mass == pytest.approx(1.0, abs=1e-9)


def test_packet_window_transform_support_and_tiling():
    w = bumps.default_packet_window()
    v = np.linspace(-3, 5, 4001)
    f = w.transform(v)
    assert np.all(f[(v <= 0.0) | (v >= 2.0)] == 0.0)
    assert np.all(f >= 0.0)
    # integer-shift tiling of |w_hat|^2 is exact
    g = np.linspace(0.0, 1.0, 1001)
    tile = w.transform_sq(g) + w.transform_sq(g + 1.0)
    assert np.max(np.abs(tile - 1.0 / (2 * np.pi))) < 1e-15


def test_packet_window_unit_l2_norm():
    w = bumps.default_packet_window()
    # frequency side: 2 pi * int |w_hat|^2 = int_0^2 T(v) dv = 1 exactly
    mass, err = quad(lambda v: 2 * np.pi * float(w.transform_sq(v)), 0, 2, limit=200)
    assert mass == pytest.approx(1.0, abs=1e-10)
    # time side: trapezoid across the truncation window
    g = np.linspace(-w.trunc_radius, w.trunc_radius, 800_001)
    l2 = np.trapezoid(np.abs(w(g)) ** 2, g)
    assert l2 == pytest.approx(1.0, abs=1e-7)


def test_packet_window_spline_matches_direct_quadrature():
    w = bumps.default_packet_window()
    rng = np.random.default_rng(3)
    u = rng.uniform(-180, 180, 300)
    assert np.max(np.abs(w(u) - w.exact(u))) < 1e-7


def test_packet_window_truncation_tail_is_small():
    w = bumps.default_packet_window()
    assert abs(w.exact(np.array([w.trunc_radius]))[0]) < 1e-10
    assert w(w.trunc_radius + 1.0) == 0.0
