"""Multiplier symbols for the curve kernel and their stationary-phase models.

The kernel at scale index j produces the symbol
m_j(xi, eta) = int e^{-i (xi/2^j) t} e^{i eta gamma(t/2^j)} rho(t) dt
over the odd bump rho. The nine cutoff pieces, the dyadic (m, n) pieces of
the (2,2) corner, the leading stationary-phase term, and the decay checks
used by the acceptance harness all live here.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .bumps import default_kit
from .curves import invert_gamma_prime
from .errors import (
    DegenerateError,
    DomainError,
    MonotonicityError,
    NoStationaryPointError,
    NotStationaryError,
    PreconditionError,
    RangeError,
)
from .fitting import fit_decay
from .quadrature import SymbolSample, integrate_oscillatory

__all__ = [
    "compute_mj",
    "compute_mj_kl",
    "compute_m22_piece",
    "stationary_phase_model",
    "main_term_m22",
    "offdiagonal_decay_check",
    "diagonal_mainterm_check",
    "stationary_phase_decay_check",
    "SymbolDerivativeReport",
    "check_hm_symbol",
]

_RHO_LOBES = ((0.25, 1.0), (-1.0, -0.25))


def _scaled_sample(sample, factor):
    mag = abs(factor)
    return SymbolSample(value=sample.value * factor,
                        est_error=sample.est_error * mag,
                        panels=sample.panels, tol_met=sample.tol_met)


def compute_mj(curve, j, xi, eta, tol=1e-10, kit=None):
    """Symbol m_j(xi, eta) integrated over both lobes of rho."""
    kit = kit or default_kit()
    tau = 2.0 ** (-j)
    # both lobes must sit inside the curve's validity window
    curve.window_containing(tau * 0.3)
    curve.window_containing(tau * 0.9)
    xi = float(xi)
    eta = float(eta)

    def phase(t):
        return -(xi * tau) * t + eta * np.asarray(
            curve.eval(tau * t), dtype=float)

    def phase_deriv(t):
        return -(xi * tau) + eta * tau * np.asarray(
            curve.d1(tau * t), dtype=float)

    value = 0.0 + 0.0j
    err = 0.0
    panels = 0
    ok = True
    for lo, hi in _RHO_LOBES:
        part = integrate_oscillatory(phase, phase_deriv, kit.rho, (lo, hi),
                                     tol=tol / 2.0)
        value += part.value
        err += part.est_error
        panels += part.panels
        ok = ok and part.tol_met
    return SymbolSample(value=value, est_error=err, panels=panels, tol_met=ok)


def _nu(kit, k):
    return (kit.nu0, kit.nu1, kit.nu2)[k]


def compute_mj_kl(curve, j, k, l, xi, eta, tol=1e-10, kit=None):
    """Cutoff piece m_j(xi, eta) nu_k(xi/2^j) nu_l(2^-j gamma'(2^-j) eta).

    Returns exactly zero, with no quadrature spent, when either cutoff
    vanishes at the point.
    """
    if k not in (0, 1, 2) or l not in (0, 1, 2):
        raise DomainError("cutoff indices must lie in {0, 1, 2}")
    kit = kit or default_kit()
    tau = 2.0 ** (-j)
    wx = float(_nu(kit, k)(float(xi) * tau))
    wy = float(_nu(kit, l)(tau * float(curve.d1(tau)) * float(eta)))
    factor = wx * wy
    if factor == 0.0:
        return SymbolSample(value=0.0 + 0.0j, est_error=0.0, panels=0)
    return _scaled_sample(compute_mj(curve, j, xi, eta, tol=tol, kit=kit),
                          factor)


def compute_m22_piece(curve, j, m, n, xi, eta, tol=1e-10, kit=None):
    """Dyadic (m, n) piece of the (2,2) corner of the symbol.

    The telescoping window phi is applied at scales m and n, so the sum
    over m, n >= 0 reassembles m_j^{22} pointwise.
    """
    if m < 0 or n < 0:
        raise DomainError("dyadic indices must be nonnegative")
    kit = kit or default_kit()
    tau = 2.0 ** (-j)
    wx = float(kit.phi_window(float(xi) * tau / 2.0 ** m))
    wy = float(kit.phi_window(
        float(eta) * tau * float(curve.d1(tau)) / 2.0 ** n))
    factor = wx * wy
    if factor == 0.0:
        return SymbolSample(value=0.0 + 0.0j, est_error=0.0, panels=0)
    return _scaled_sample(compute_mj(curve, j, xi, eta, tol=tol, kit=kit),
                          factor)


# ---------------------------------------------------------------------------
# stationary phase


def stationary_phase_model(omega, omega_d2, a, lam, p):
    """Leading term of int a(x) e^{-i pi lam omega(x)} dx at the critical point.

    The Fresnel constant sqrt(2) e^{-i sign(omega'') pi/4} carries the sign
    of the second derivative. Raises NotStationaryError when p fails
    |omega'(p)| <= 1e-8 (derivative measured by central differences) and
    DegenerateError when the second derivative vanishes.
    """
    p = float(p)
    lam = float(lam)
    h = 1e-5 * max(1.0, abs(p))
    d1 = (float(omega(p + h)) - float(omega(p - h))) / (2.0 * h)
    if abs(d1) > 1e-8:
        raise NotStationaryError(
            f"omega'({p:g}) = {d1:.3g} is not a critical point")
    w2 = float(omega_d2(p))
    if w2 == 0.0:
        raise DegenerateError("second derivative vanishes at the critical point")
    c = math.sqrt(2.0) * np.exp(-1j * math.copysign(math.pi / 4.0, w2))
    return (c * np.exp(-1j * math.pi * lam * float(omega(p)))
            * lam ** -0.5 * abs(w2) ** -0.5 * float(a(p)))


def _stationary_points(curve, j, xi, eta):
    if eta == 0.0:
        return []
    tau = 2.0 ** (-j)
    ratio = float(xi) / float(eta)
    pts = []
    for branch in (1, -1):
        try:
            s = invert_gamma_prime(curve, ratio, branch=branch)
        except (RangeError, MonotonicityError, DomainError):
            continue
        t_m = float(np.atleast_1d(s)[0]) / tau
        if 0.25 < abs(t_m) < 1.0 and not any(
                abs(t_m - q) < 1e-12 for q in pts):
            pts.append(t_m)
    return pts


def main_term_m22(curve, j, m, xi, eta, kit=None):
    """Stationary-phase main term of the diagonal (m, m) piece.

    Sums the measured leading contribution over every critical point of the
    phase inside the support of rho, scaled by both telescoping windows at
    index m. Raises NoStationaryPointError when no critical point lands in
    the support.
    """
    kit = kit or default_kit()
    tau = 2.0 ** (-j)
    xi = float(xi)
    eta = float(eta)
    pts = _stationary_points(curve, j, xi, eta)
    if not pts:
        raise NoStationaryPointError(
            "no critical point of the phase inside the support of rho")
    wx = float(kit.phi_window(xi * tau / 2.0 ** m))
    wy = float(kit.phi_window(eta * tau * float(curve.d1(tau)) / 2.0 ** m))
    total = 0.0 + 0.0j
    for t_m in pts:
        theta = -(xi * tau) * t_m + eta * float(curve.eval(tau * t_m))
        theta2 = eta * tau * tau * float(curve.d2(tau * t_m))
        if theta2 == 0.0:
            raise NoStationaryPointError("degenerate critical point")
        fresnel = math.sqrt(2.0 * math.pi / abs(theta2)) * np.exp(
            1j * math.copysign(math.pi / 4.0, theta2))
        total += float(kit.rho(t_m)) * np.exp(1j * theta) * fresnel
    return total * wx * wy


# ---------------------------------------------------------------------------
# decay checks


def _support_samples(curve, j, m, n, count, rng, kit):
    """Points (xi, eta) spread over the (m, n) window supports, both signs."""
    tau = 2.0 ** (-j)
    g = float(curve.d1(tau))
    xs = rng.uniform(1.6, 3.9, size=count)
    ys = rng.uniform(1.6, 3.9, size=count)
    sx = rng.choice([-1.0, 1.0], size=count)
    sy = rng.choice([-1.0, 1.0], size=count)
    xi = sx * xs * 2.0 ** m / tau
    eta = sy * ys * 2.0 ** n / (tau * g)
    return xi, eta


def offdiagonal_decay_check(curve, j, m_values, offset=5, samples=12,
                            tol=1e-8, min_gap=3, seed=0, kit=None):
    """Decay of sup |m^{22}_{j,m,n}| along n = m + offset.

    Requires |offset| > min_gap; the fit reports log2 of the sampled sup
    against max(m, n), which the integration-by-parts bound predicts to
    fall at least one unit per step.
    """
    if abs(offset) <= min_gap:
        raise PreconditionError(
            f"dyadic separation |m-n| = {abs(offset)} is not above {min_gap}")
    kit = kit or default_kit()
    rng = np.random.default_rng(seed)
    points = []
    for m in m_values:
        n = m + offset
        if n < 0 or m < 0:
            raise DomainError("dyadic indices must stay nonnegative")
        xi, eta = _support_samples(curve, j, m, n, samples, rng, kit)
        sup = 0.0
        for x, y in zip(xi, eta):
            piece = compute_m22_piece(curve, j, m, n, x, y, tol=tol, kit=kit)
            sup = max(sup, abs(piece.value))
        points.append((max(m, n), sup))
    return fit_decay(points)


def diagonal_mainterm_check(curve, j, m_values, samples=10, tol=None,
                            seed=3, kit=None):
    """Decay of sup |piece(m, m) - main term| over stationary samples."""
    kit = kit or default_kit()
    rng = np.random.default_rng(seed)
    points = []
    for m in m_values:
        quad_tol = tol if tol is not None else min(1e-9, 2.0 ** (-m) * 1e-6)
        sup = 0.0
        found = 0
        guard = 0
        while found < samples and guard < 20 * samples:
            guard += 1
            xi, eta = _support_samples(curve, j, m, m, 1, rng, kit)
            x, y = float(xi[0]), float(eta[0])
            try:
                main = main_term_m22(curve, j, m, x, y, kit=kit)
            except NoStationaryPointError:
                continue
            piece = compute_m22_piece(curve, j, m, m, x, y, tol=quad_tol,
                                      kit=kit)
            if piece.panels == 0:
                continue
            sup = max(sup, abs(piece.value - main))
            found += 1
        if found == 0:
            raise DomainError(
                f"no stationary sample found at dyadic index {m}")
        points.append((m, sup))
    return fit_decay(points)


def stationary_phase_decay_check(omega, omega_d1, omega_d2, a, p, lams,
                                 interval, tol=1e-12):
    """Fit of |oscillatory integral - model main term| against lambda."""
    points = []
    for lam in lams:
        lam = float(lam)
        phase = lambda t: -math.pi * lam * np.asarray(omega(t), dtype=float)
        phase_deriv = lambda t: -math.pi * lam * np.asarray(
            omega_d1(t), dtype=float)
        got = integrate_oscillatory(phase, phase_deriv, a, interval, tol=tol)
        main = stationary_phase_model(omega, omega_d2, a, lam, p)
        points.append((math.log2(lam), abs(got.value - main)))
    return fit_decay(points)


# ---------------------------------------------------------------------------
# Hormander-Mikhlin style symbol diagnostics


@dataclass
class SymbolDerivativeReport:
    """Sampled scale-invariant derivative sizes of the summed symbol."""

    max_xi: float
    max_eta: float
    j_range: tuple
    points: int
    per_point: list = field(default_factory=list)


def _summed_symbol(curve, k, l, j_range, xi, eta, tol, kit):
    total = 0.0 + 0.0j
    for j in range(j_range[0], j_range[1] + 1):
        try:
            part = compute_mj_kl(curve, j, k, l, xi, eta, tol=tol, kit=kit)
        except DomainError:
            continue
        total += part.value
    return total


def check_hm_symbol(curve, k, l, j_range=(-8, 8), points=16, seed=1,
                    tol=1e-9, kit=None):
    """Sampled |xi d_xi S| and |eta d_eta S| for S the summed (k, l) piece.

    Diagnostic only: reports the maxima over random sample points, with the
    scale-invariant derivative taken by relative central differences.
    """
    if k not in (0, 1) or l not in (0, 1):
        raise DomainError("diagnostic covers cutoff indices 0 and 1 only")
    kit = kit or default_kit()
    rng = np.random.default_rng(seed)
    h = 1e-4
    max_xi = 0.0
    max_eta = 0.0
    per_point = []
    for _ in range(points):
        xi = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.7, 3.0))
        eta = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.7, 3.0))
        sp = _summed_symbol(curve, k, l, j_range, xi * (1 + h), eta, tol, kit)
        sm = _summed_symbol(curve, k, l, j_range, xi * (1 - h), eta, tol, kit)
        dx = abs(sp - sm) / (2.0 * h)
        sp = _summed_symbol(curve, k, l, j_range, xi, eta * (1 + h), tol, kit)
        sm = _summed_symbol(curve, k, l, j_range, xi, eta * (1 - h), tol, kit)
        dy = abs(sp - sm) / (2.0 * h)
        per_point.append((xi, eta, dx, dy))
        max_xi = max(max_xi, dx)
        max_eta = max(max_eta, dy)
    return SymbolDerivativeReport(max_xi=max_xi, max_eta=max_eta,
                                  j_range=tuple(j_range), points=points,
                                  per_point=per_point)
