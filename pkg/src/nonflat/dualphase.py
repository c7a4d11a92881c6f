"""Dual phases, running profile integrals, and pairwise phase construction.

A phase Phi with strictly monotone derivative has a dual phase Psi whose
derivative is the functional inverse of Phi'. This module builds such pairs
numerically, integrates the limiting inverse profile r of a curve into its
running integral R, and assembles the two-frequency phases
Phi(t) = p R(t/p) - p' R(t/p') together with their duals.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.chebyshev import Chebyshev
from scipy.integrate import quad

from .curves import curve_for_side, profile_r
from .errors import DegenerateError, DomainError, MonotonicityError, RangeError

__all__ = [
    "PhasePair",
    "make_dual",
    "R_profile",
    "RProfile",
    "phi_pair",
    "mean_value_factor",
    "second_derivative_ratio",
]


@dataclass(frozen=True)
class PhasePair:
    """A phase, its derivative, and the numerically constructed dual.

    psi_prime inverts phi_prime on `interval`; psi is the antiderivative of
    psi_prime anchored so that psi(phi_prime(t0)) = t0 phi_prime(t0) - phi(t0)
    at the left endpoint t0. dual_interval is the image of interval under
    phi_prime. meta may carry phi_dprime and construction details.
    """

    phi: object
    phi_prime: object
    psi: object
    psi_prime: object
    interval: tuple
    dual_interval: tuple
    meta: dict = field(default_factory=dict)


def _as_batch(x):
    scalar = np.ndim(x) == 0
    return scalar, np.atleast_1d(np.asarray(x, dtype=float))


def _invert_monotone(fun, interval, xi, increasing, newton_steps=3):
    """Solve fun(t) = xi for t in interval, fun strictly monotone.

    Bisection first (width below 1e-6 of the interval and far beyond), then
    a few Newton steps with a finite-difference slope to polish the residual.
    """
    t_lo = np.full(xi.shape, float(interval[0]))
    t_hi = np.full(xi.shape, float(interval[1]))
    for _ in range(64):
        mid = 0.5 * (t_lo + t_hi)
        fm = np.asarray(fun(mid), dtype=float)
        exact = fm == xi
        low = (fm < xi) if increasing else (fm > xi)
        t_lo = np.where(exact | low, mid, t_lo)
        t_hi = np.where(exact | ~low, mid, t_hi)
    t = 0.5 * (t_lo + t_hi)
    span = float(interval[1]) - float(interval[0])
    for _ in range(newton_steps):
        h = 1e-7 * np.maximum(np.abs(t), 1e-3 * span)
        a = np.clip(t - h, interval[0], interval[1])
        b = np.clip(t + h, interval[0], interval[1])
        fa = np.asarray(fun(a), dtype=float)
        fb = np.asarray(fun(b), dtype=float)
        slope = (fb - fa) / (b - a)
        resid = np.asarray(fun(t), dtype=float) - xi
        step = np.where(slope != 0, resid / np.where(slope == 0, 1.0, slope), 0.0)
        t = np.clip(t - step, interval[0], interval[1])
    return t


def make_dual(phi, phi_prime, interval, samples=2049):
    """Build the PhasePair of a phase with strictly monotone derivative.

    Raises MonotonicityError when phi_prime is not strictly monotone on the
    interval, and RangeError when the constructed inverse fails its round
    trip check psi_prime(phi_prime(t)) = t to relative 1e-8.
    """
    t_lo, t_hi = float(interval[0]), float(interval[1])
    if not t_hi > t_lo:
        raise DomainError("interval must have positive length")
    ts = np.linspace(t_lo, t_hi, samples)
    g = np.asarray(phi_prime(ts), dtype=float)
    if not np.all(np.isfinite(g)):
        raise DomainError("phi_prime is not finite on the interval")
    diffs = np.diff(g)
    if np.all(diffs > 0):
        increasing = True
    elif np.all(diffs < 0):
        increasing = False
    else:
        raise MonotonicityError("phi_prime is not strictly monotone")
    xi_lo, xi_hi = (g[0], g[-1]) if increasing else (g[-1], g[0])
    pad = 1e-9 * max(1.0, abs(xi_lo), abs(xi_hi))

    def psi_prime(xi):
        scalar, x = _as_batch(xi)
        if np.any(x < xi_lo - pad) or np.any(x > xi_hi + pad):
            raise DomainError("dual argument outside the image of phi_prime")
        t = _invert_monotone(phi_prime, (t_lo, t_hi), x, increasing)
        return float(t[0]) if scalar else t

    xi0 = float(g[0])
    psi0 = t_lo * xi0 - float(np.asarray(phi(t_lo), dtype=float))

    def psi(xi):
        scalar, x = _as_batch(xi)
        out = np.empty(x.shape)
        for i, v in enumerate(x):
            if v == xi0:
                out[i] = psi0
                continue
            val, _ = quad(lambda u: float(psi_prime(u)), xi0, v,
                          limit=200, epsabs=1e-12, epsrel=1e-11)
            out[i] = psi0 + val
        return float(out[0]) if scalar else out

    pair = PhasePair(
        phi=phi, phi_prime=phi_prime, psi=psi, psi_prime=psi_prime,
        interval=(t_lo, t_hi), dual_interval=(float(xi_lo), float(xi_hi)))

    probe = np.linspace(t_lo, t_hi, 33)
    back = _invert_monotone(phi_prime, (t_lo, t_hi),
                            np.asarray(phi_prime(probe), dtype=float),
                            increasing)
    err = np.max(np.abs(back - probe) / np.maximum(np.abs(probe), 1.0))
    if err > 1e-8:
        raise RangeError(f"dual round trip failed (relative error {err:.3g})")
    return pair


# ---------------------------------------------------------------------------
# running integral of the inverse profile


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


def _gl_panels(fun, a, b, panels):
    edges = np.linspace(a, b, panels + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1] - edges[0])
    pts = (mids[:, None] + half * _GL_NODES[None, :]).ravel()
    vals = np.asarray(fun(pts), dtype=float).reshape(panels, -1)
    return float(np.sum(vals @ _GL_WEIGHTS) * half)


def R_profile(curve, j, x, side="origin", lower=1.0, tol=1e-11):
    """Integral of the scale-j inverse profile from `lower` (default 1) to x.

    The integrand is profile_r at the literal scale index, so range and
    monotonicity failures propagate from the profile machinery.
    """
    base = curve_for_side(curve, side)
    jj = j if side == "origin" else -j
    a, b = float(lower), float(x)
    if a == b:
        return 0.0
    fun = lambda v: profile_r(base, jj, v)
    panels = 4
    prev = _gl_panels(fun, a, b, panels)
    for _ in range(6):
        panels *= 2
        cur = _gl_panels(fun, a, b, panels)
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    return prev


class RProfile:
    """Fast evaluator of the limiting inverse profile and its integral.

    Fits a Chebyshev model of r on the positive domain (and on the mirrored
    negative domain when the curve reaches the signed branch), then exposes
    r, r' and the running integral R(x) anchored at R(1) = 0. With
    include_remainder=True the finite-scale profile at index j is fitted
    instead, so R then carries the scale-j remainder on top of the limit.
    """

    def __init__(self, curve, j=None, side="origin", domain=(0.2, 4.5),
                 degree=120, include_remainder=False):
        base = curve_for_side(curve, side)
        jj = (j if side == "origin" else -j) if j is not None else None
        if include_remainder or base.r_limit is None:
            if jj is None:
                raise DomainError(
                    "a scale index j is required without a closed-form limit")
            rfun = lambda s: profile_r(base, jj, s)
            source = "finite-scale" if include_remainder else "sampled"
        else:
            rfun = base.r_limit
            source = "limit"
        lo, hi = float(domain[0]), float(domain[1])
        if not 0 < lo < hi:
            raise DomainError("domain must satisfy 0 < lo < hi")
        self.curve = base
        self.side = side
        self.j = jj
        self.source = source
        self.domain = (lo, hi)
        k = np.arange(2 * degree + 1)
        nodes = 0.5 * (lo + hi) + 0.5 * (hi - lo) * np.cos(
            np.pi * k / (2 * degree))
        self._pos = Chebyshev.fit(nodes, np.asarray(rfun(nodes), dtype=float),
                                  degree, domain=[lo, hi])
        self._pos_d = self._pos.deriv()
        self._pos_int = self._pos.integ(lbnd=1.0)
        mid = 0.5 * (nodes[1:] + nodes[:-1])
        ref = np.asarray(rfun(mid), dtype=float)
        scale = max(1.0, float(np.max(np.abs(ref))))
        self.fit_error = float(np.max(np.abs(self._pos(mid) - ref))) / scale
        self._neg = None
        try:
            neg_vals = np.asarray(rfun(-nodes), dtype=float)
            if np.all(np.isfinite(neg_vals)):
                self._neg = Chebyshev.fit(-nodes, neg_vals, degree,
                                          domain=[-hi, -lo])
        except (RangeError, MonotonicityError, DomainError):
            self._neg = None
        if self._neg is not None:
            self._neg_d = self._neg.deriv()
            self._neg_int = self._neg.integ(lbnd=-lo)
            gap, _ = quad(lambda v: float(np.asarray(rfun(v), dtype=float)),
                          -lo, lo, limit=200, epsabs=1e-12, epsrel=1e-11)
            # R(x<0) = R(lo) + int_{lo}^{-lo} r + int_{-lo}^{x} r
            self._neg_base = float(self._pos_int(lo)) - float(gap)

    def _split(self, x):
        lo, hi = self.domain
        pad = 1e-9 * hi
        pos = x >= 0
        if np.any(pos & ((x < lo - pad) | (x > hi + pad))):
            raise DomainError("argument outside the fitted positive domain")
        if np.any(~pos):
            if self._neg is None:
                raise DomainError("curve has no negative-branch profile")
            if np.any(~pos & ((x > -lo + pad) | (x < -hi - pad))):
                raise DomainError("argument outside the fitted negative domain")
        return pos

    def _eval(self, x, fpos, fneg, neg_offset=0.0):
        scalar, xv = _as_batch(x)
        pos = self._split(xv)
        out = np.empty(xv.shape)
        if np.any(pos):
            out[pos] = fpos(xv[pos])
        if np.any(~pos):
            out[~pos] = fneg(xv[~pos]) + neg_offset
        return float(out[0]) if scalar else out

    def r(self, x):
        return self._eval(x, self._pos, lambda v: self._neg(v))

    def r_prime(self, x):
        return self._eval(x, self._pos_d, lambda v: self._neg_d(v))

    def R(self, x):
        return self._eval(x, self._pos_int, lambda v: self._neg_int(v),
                          neg_offset=getattr(self, "_neg_base", 0.0))


_ENGINE_CACHE = {}


def profile_engine(curve, j, side="origin", include_remainder=False):
    """Shared RProfile engine, cached by curve name and scale index."""
    key = (curve.name, j, side, bool(include_remainder))
    eng = _ENGINE_CACHE.get(key)
    if eng is None:
        eng = RProfile(curve, j=j, side=side,
                       include_remainder=include_remainder)
        _ENGINE_CACHE[key] = eng
    return eng


def phi_pair(p, p_prime, curve, j, side="origin", engine=None,
             include_remainder=False, interval=None):
    """PhasePair of Phi(t) = p R(t/p) - p' R(t/p') for distinct integers.

    The validity interval defaults to the largest t range keeping both t/p
    and t/p' inside the engine's fitted domain; pass `interval` to override
    (for example to study the mirrored negative range).
    """
    if p == p_prime:
        raise DegenerateError("pairwise phase needs two distinct frequencies")
    eng = engine or profile_engine(curve, j, side, include_remainder)
    p = float(p)
    pp = float(p_prime)
    lo, hi = eng.domain
    if interval is None:
        interval = (lo * max(p, pp) * (1 + 1e-9), hi * min(p, pp) * (1 - 1e-9))
    if not interval[1] > interval[0]:
        raise DomainError("frequencies too far apart for the fitted domain")

    def phi(t):
        t = np.asarray(t, dtype=float)
        return p * eng.R(t / p) - pp * eng.R(t / pp)

    def phi_prime(t):
        t = np.asarray(t, dtype=float)
        return eng.r(t / p) - eng.r(t / pp)

    def phi_dprime(t):
        t = np.asarray(t, dtype=float)
        return eng.r_prime(t / p) / p - eng.r_prime(t / pp) / pp

    pair = make_dual(phi, phi_prime, interval)
    meta = dict(pair.meta)
    meta.update({"p": int(p), "p_prime": int(pp), "phi_dprime": phi_dprime,
                 "engine": eng})
    return PhasePair(phi=pair.phi, phi_prime=pair.phi_prime, psi=pair.psi,
                     psi_prime=pair.psi_prime, interval=pair.interval,
                     dual_interval=pair.dual_interval, meta=meta)


def mean_value_factor(p, p_prime, t, curve, j, side="origin", engine=None):
    """Second derivative of R implied by the mean value identity.

    Returns Phi'(t) / (t (1/p - 1/p')), which equals R'' at some point
    between t/p' and t/p; finite and bounded away from zero for curves that
    pass the curvature certification.
    """
    if p == p_prime:
        raise DegenerateError("mean value factor needs distinct frequencies")
    eng = engine or profile_engine(curve, j, side, False)
    scalar, tv = _as_batch(t)
    if np.any(tv == 0):
        raise DomainError("mean value factor is undefined at t = 0")
    num = eng.r(tv / float(p)) - eng.r(tv / float(p_prime))
    den = tv * (1.0 / float(p) - 1.0 / float(p_prime))
    out = num / den
    return float(out[0]) if scalar else out


def second_derivative_ratio(pair, xs):
    """Infimum of |Phi''(x)| |x| / |Phi'(x)| over the sample points.

    Needs a pair built by phi_pair (meta carries phi_dprime). Points where
    Phi' vanishes are skipped; returns inf if none remain.
    """
    dd = pair.meta.get("phi_dprime")
    if dd is None:
        raise DomainError("pair carries no second derivative")
    xs = np.asarray(xs, dtype=float)
    d1 = np.asarray(pair.phi_prime(xs), dtype=float)
    d2 = np.asarray(dd(xs), dtype=float)
    ok = d1 != 0
    if not np.any(ok):
        return math.inf
    return float(np.min(np.abs(d2[ok]) * np.abs(xs[ok]) / np.abs(d1[ok])))
