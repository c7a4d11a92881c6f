import numpy as np
import pytest

from nonflat import curves
from nonflat.curves import (check_convtr, check_nonflat, check_variation,
                            compute_profile_pair, invert_gamma_prime,
                            make_curve, profile_Q, profile_r)
from nonflat.errors import DomainError, MonotonicityError, RangeError


def five_point_d1(f, t, h):
    return (-f(t + 2 * h) + 8 * f(t + h) - 8 * f(t - h) + f(t - 2 * h)) / (12 * h)


@pytest.mark.parametrize("spec", [
    "monomial:2", "monomial:3", "monomial:4",
    "laurent:1@2,1@-2", "powerlog:1.5:0", "powerlog:0.5:1", "exp",
])
def test_derivative_consistency(spec):
    # d1 vs central difference of eval, d2 vs central difference of d1
    curve = make_curve(spec)
    for side in curve.side_validity:
        lo, hi = curve.side_validity[side]
        lo_c = max(lo, hi * 1e-6, 1e-7)
        hi_c = min(hi, max(lo_c * 100.0, 50.0))
        taus = np.geomspace(lo_c * 2, hi_c / 2, 7)
        for sign in (1.0, -1.0):
            for tau in taus:
                t = sign * tau
                h = 1e-5 * abs(t)
                d1_fd = five_point_d1(curve.eval, t, h)
                d1 = float(curve.d1(t))
                assert d1 == pytest.approx(d1_fd, rel=1e-6, abs=1e-10)
                d2_fd = five_point_d1(curve.d1, t, h)
                assert float(curve.d2(t)) == pytest.approx(d2_fd, rel=1e-6,
                                                           abs=1e-10)
                assert abs(d1) > 0


def test_invert_gamma_prime_monomials():
    c2 = make_curve("monomial:2")
    assert invert_gamma_prime(c2, 3.0) == pytest.approx(1.5, abs=1e-10)
    c3 = make_curve("monomial:3")
    assert invert_gamma_prime(c3, 12.0) == pytest.approx(2.0, abs=1e-10)


def test_invert_gamma_prime_laurent_roundtrip():
    curve = make_curve("laurent:1@2,1@-2")
    s = -73.474074074074074074  # gamma'(0.3) frozen from a 40-digit oracle
    t = invert_gamma_prime(curve, s)
    assert t == pytest.approx(0.3, abs=1e-10)
    # round trip across a sweep of points on both branches
    for t0 in [0.05, 0.11, 0.31, 0.49]:
        sv = float(curve.d1(t0))
        assert invert_gamma_prime(curve, sv) == pytest.approx(t0, rel=1e-10)
        sv = float(curve.d1(-t0))
        assert invert_gamma_prime(curve, sv, branch=-1) == pytest.approx(
            -t0, rel=1e-10)


def test_invert_gamma_prime_errors():
    c2 = make_curve("monomial:2")
    with pytest.raises(RangeError):
        invert_gamma_prime(c2, 1.0, window=(1.0, 2.0))  # range [2, 4]
    lin = make_curve("linear")
    with pytest.raises(MonotonicityError):
        invert_gamma_prime(lin, 0.5)


def test_profile_Q_monomials_j_independent():
    t = np.array([-4.0, -1.0, -0.25, 0.25, 1.0, 2.0, 4.0])
    for d in (2, 3, 4):
        curve = make_curve(f"monomial:{d}")
        for j in (-3, 0, 2, 7):
            vals = profile_Q(curve, j, t)
            assert np.allclose(vals, t**d / d, rtol=1e-12)
    assert profile_Q(make_curve("monomial:2"), 5, 1.0) == pytest.approx(0.5)
    assert profile_Q(make_curve("monomial:3"), 5, 2.0) == pytest.approx(8 / 3)


def test_profile_Q_domain_errors():
    curve = make_curve("monomial:2")
    with pytest.raises(DomainError):
        profile_Q(curve, 0, 0.1)
    with pytest.raises(DomainError):
        profile_Q(curve, 0, 5.0)
    with pytest.raises(DomainError):
        profile_Q(make_curve("exp"), 10, 1.0)  # scale point outside validity


def test_profile_Q_laurent_oracle():
    # gamma = t^2 + t^4, j=6, t=1: frozen 40-digit value of the quotient
    curve = make_curve("laurent:1@2,1@4")
    assert profile_Q(curve, 6, 1.0) == pytest.approx(0.49987798926305514885,
                                                     abs=1e-14)


def test_profile_r_monomials():
    c2 = make_curve("monomial:2")
    assert profile_r(c2, 3, 0.7) == pytest.approx(0.7, abs=1e-9)
    c3 = make_curve("monomial:3")
    assert profile_r(c3, 3, 4.0) == pytest.approx(2.0, abs=1e-9)
    # signed branch: even curve has odd inverse profile
    assert profile_r(c2, 5, -0.7) == pytest.approx(-0.7, abs=1e-9)
    c4 = make_curve("monomial:4")
    s = np.array([-8.0, -1.0, 1.0, 8.0])
    assert np.allclose(profile_r(c4, 2, s), np.sign(s) * np.abs(s) ** (1 / 3),
                       rtol=1e-9)


def test_profile_r_laurent_oracle():
    curve = make_curve("laurent:1@2,1@4")
    assert profile_r(curve, 8, 1.3) == pytest.approx(1.2999726299671369956,
                                                     rel=1e-10)


def test_profile_inverse_pair_property():
    # Q' composed with r is the identity on J (Observation-style invariant)
    for spec, side in [("monomial:2", "origin"), ("monomial:3", "origin"),
                       ("laurent:1@2,1@-2", "infinity")]:
        curve = make_curve(spec)
        pair, I_grids, J_grids, _, _ = compute_profile_pair(
            curve, side, (4, 8), grid_density=200)
        t = np.linspace(0.3, 3.9, 41)
        h = 1e-5
        qp = (pair.Q(t + h) - pair.Q(t - h)) / (2 * h)
        back = np.asarray(pair.r(qp), dtype=float)
        assert np.max(np.abs(back - t) / np.abs(t)) < 1e-5


def test_check_variation_monomials():
    assert check_variation(make_curve("monomial:2"), 20) == 1
    assert check_variation(make_curve("monomial:3"), 20) == 1
    assert check_variation(make_curve("laurent:1@2,1@-2"), 20,
                           side="infinity") == 1


def test_check_convtr_closed_forms():
    # t gamma''/gamma' is d-1 for monomials, 1/2 for |t|^(3/2)
    assert check_convtr(make_curve("monomial:2"), "origin") == pytest.approx(
        1.0, abs=1e-8)
    assert check_convtr(make_curve("monomial:4"), "infinity") == pytest.approx(
        3.0, abs=1e-8)
    assert check_convtr(make_curve("powerlog:1.5:0"), "origin") == pytest.approx(
        0.5, abs=1e-8)


def test_check_nonflat_square():
    report = check_nonflat(make_curve("monomial:2"), "origin", (4, 10))
    assert report.passes
    assert report.c_gamma == pytest.approx(1.0, abs=1e-6)
    assert report.convtr_inf == pytest.approx(1.0, abs=1e-8)
    assert report.variation_max == 1


def test_check_nonflat_linear_fails_via_flat_Q():
    report = check_nonflat(make_curve("linear"), "origin", (4, 10))
    assert not report.passes
    assert report.components["inf_Qdd"] == pytest.approx(0.0, abs=1e-9)
    assert not report.flags["c_gamma"]


def test_check_nonflat_exp_fails_via_aj():
    report = check_nonflat(make_curve("exp"), "infinity", (1, 6),
                           grid_density=150)
    assert not report.passes
    assert not report.flags["aj_decay"]
    # the remainder table does not decay toward zero
    js = sorted(report.a_j_table)[:-1]
    seq = [report.a_j_table[j]["a"] for j in js]
    assert seq[-1] > 0.5 * seq[0]


def test_check_nonflat_laurent_infinity_passes():
    report = check_nonflat(make_curve("laurent:1@2,1@-2"), "infinity", (4, 10))
    assert report.passes
    assert report.c_gamma >= 0.9


def test_check_nonflat_powerlog_passes_both_sides():
    curve = make_curve("powerlog:1.5:0")
    for side in ("origin", "infinity"):
        report = check_nonflat(curve, side, (4, 10))
        assert report.passes, report.flags
        # Q'' = 0.5|t|^-0.5 bottoms out at |t|=4, r' = 2|s| bottoms at 1/2,
        # pairwise quotient bottoms at the sign-mixed pair (1/2, -1/2)
        assert report.c_gamma == pytest.approx(0.25, abs=0.01)


def test_monomial4_curvature_below_threshold():
    # inf_J |r'| = 1/48 and the pairwise quotient is 1/144 for t^4; the
    # certification reports the honest value below the 0.05 gate
    report = check_nonflat(make_curve("monomial:4"), "origin", (4, 10))
    assert report.components["inf_rd"] == pytest.approx(1 / 48, rel=0.02)
    assert report.components["pair_quotient"] == pytest.approx(1 / 144, rel=0.05)
    assert not report.passes


def test_laurent_origin_curvature_tiny():
    report = check_nonflat(make_curve("laurent:1@2,1@-2"), "origin", (4, 10))
    assert report.c_gamma < 0.01
    assert not report.flags["c_gamma"]


def test_powerlog_with_log_factor_certifies():
    # alpha=0.5, beta=1 has genuinely j-dependent profiles; remainders decay
    curve = make_curve("powerlog:0.5:1")
    report = check_nonflat(curve, "origin", (8, 18), grid_density=150)
    assert report.flags["aj_decay"], report.a_j_table
    js = sorted(report.a_j_table)[:-1]
    seq = [report.a_j_table[j]["a"] for j in js]
    assert seq[-1] < seq[0]
