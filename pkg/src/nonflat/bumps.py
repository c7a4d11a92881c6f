"""Smooth compactly supported cutoffs used throughout the package.

Everything here is built from the classical mollifier exp(-1/x). The kit
provides: an odd annular bump rho with unit mass on its positive lobe, a
dyadic window phi_window whose dilates telescope back to the outer cutoff
nu2, a three-piece partition of unity nu0 + nu1 + nu2 = 1, and a band-limited
window for Gabor wave packets whose Fourier transform is supported in [0, 2].

All evaluators accept scalars or numpy arrays and return float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np


def _mollifier(u, order=1):
    """exp(-1/u^order) for u > 0, zero elsewhere. Smooth on all of R."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u > 0.0
    if np.any(pos):
        up = u[pos]
        with np.errstate(over="ignore", under="ignore"):
            out[pos] = np.exp(-1.0 / up**order)
    return out


def smoothstep(u, order=1):
    """Smooth transition from 0 (u <= 0) to 1 (u >= 1).

    S(u) = B(u) / (B(u) + B(1-u)) with B the mollifier. Satisfies the exact
    reflection identity S(u) + S(1-u) = 1, which the partition and the tight
    packet window both rely on.
    """
    u = np.asarray(u, dtype=float)
    a = _mollifier(u, order)
    b = _mollifier(1.0 - u, order)
    denom = a + b
    # denom vanishes only outside [0,1] where a or b alone decides the value
    safe = denom > 0.0
    out = np.where(u >= 1.0, 1.0, 0.0)
    out = np.where(safe, np.divide(a, denom, out=np.zeros_like(a), where=safe), out)
    return out


def nu0(x):
    """Inner cutoff: 1 on |x| <= 1/2, supported in (-9/10, 9/10)."""
    x = np.asarray(x, dtype=float)
    return 1.0 - smoothstep((np.abs(x) - 0.5) / 0.4)


def nu2(x):
    """Outer cutoff: 0 on |x| <= 3/2, 1 on |x| >= 2, supported in {|x| > 3/2}."""
    x = np.asarray(x, dtype=float)
    return smoothstep((np.abs(x) - 1.5) / 0.5)


def nu1(x):
    """Annular middle piece so that nu0 + nu1 + nu2 = 1 identically.

    Supported in {1/2 < |x| < 2}.
    """
    return 1.0 - nu0(x) - nu2(x)


def phi_window(x):
    """Dyadic frequency window: nu2(x) - nu2(x/2).

    Supported in {3/2 < |x| < 4}, identically 1 on 2 <= |x| <= 3, and its
    dilates telescope: sum over m >= 0 of phi_window(x / 2^m) equals
    nu2(x) - nu2(x / 2^(M+1)), which is exactly nu2(x) once 2^(M+1) > 2|x|/3.
    """
    x = np.asarray(x, dtype=float)
    return nu2(x) - nu2(x / 2.0)


@lru_cache(maxsize=8)
def _gauss_legendre(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _gl_nodes(a, b, n):
    """Gauss-Legendre nodes and weights on [a, b]."""
    x, w = _gauss_legendre(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


@lru_cache(maxsize=1)
def _rho_norm():
    """Normalizing constant so the positive lobe of rho has unit mass."""
    t, w = _gl_nodes(0.25, 1.0, 200)
    v = (t - 0.25) / 0.75
    core = np.exp(-1.0 / (v * (1.0 - v)))
    return float(np.dot(w, core))


def rho(t):
    """Odd annular bump, supported in {1/4 < |t| < 1}, with ∫_{1/4}^{1} rho = 1."""
    t = np.asarray(t, dtype=float)
    a = np.abs(t)
    v = (a - 0.25) / 0.75
    out = np.zeros_like(t)
    inside = (v > 0.0) & (v < 1.0)
    if np.any(inside):
        vi = v[inside]
        out[inside] = np.sign(t[inside]) * np.exp(-1.0 / (vi * (1.0 - vi)))
    return out / _rho_norm()


class PacketWindow:
    """Band-limited Gabor window with Fourier transform supported in [0, 2].

    The transform is w_hat(v) = sqrt(T(v)) / sqrt(2 pi) where
    T(v) = S(v) * S(2 - v) uses the order-2 smoothstep. The reflection
    identity S(v) + S(1 - v) = 1 gives the exact integer-shift tiling
    sum_k T(v - k) = 1, so the window has exactly unit L2 norm and the
    integer time-frequency lattice at density matching the band is tight.

    Time side uses the convention w(u) = ∫ w_hat(v) e^{i u v} dv. The order-2
    mollifier makes w_hat Gevrey-regular, so w decays like exp(-c |u|^(2/3));
    beyond |u| = trunc_radius the window is below 3e-11 and is treated as zero.
    """

    trunc_radius = 192.0

    def __init__(self, quad_nodes=512, table_points=32768):
        self._nodes, self._weights = _gl_nodes(0.0, 2.0, quad_nodes)
        self._fhat = self.transform(self._nodes)
        # spline table for bulk evaluation across the truncation window
        from scipy.interpolate import CubicSpline

        u = np.linspace(-self.trunc_radius, self.trunc_radius, table_points)
        vals = self._eval_direct(u)
        self._spline_re = CubicSpline(u, vals.real)
        self._spline_im = CubicSpline(u, vals.imag)

    @staticmethod
    def transform(v):
        """Fourier transform w_hat(v); real, nonnegative, supported in [0, 2]."""
        v = np.asarray(v, dtype=float)
        t = smoothstep(v, order=2) * smoothstep(2.0 - v, order=2)
        return np.sqrt(np.maximum(t, 0.0)) / np.sqrt(2.0 * np.pi)

    @staticmethod
    def transform_sq(v):
        """|w_hat(v)|^2, cheaper and exactly tiling: sum_k 2 pi T(v-k) = 1."""
        v = np.asarray(v, dtype=float)
        return smoothstep(v, order=2) * smoothstep(2.0 - v, order=2) / (2.0 * np.pi)

    def _eval_direct(self, u):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        # w(u) = ∫_0^2 w_hat(v) e^{iuv} dv via fixed Gauss-Legendre rule
        ph = np.exp(1j * np.outer(u, self._nodes))
        return ph @ (self._weights * self._fhat)

    def __call__(self, u):
        """Window values at times u (vectorized, spline-backed)."""
        u = np.asarray(u, dtype=float)
        scalar = u.ndim == 0
        u = np.atleast_1d(u)
        out = np.zeros(u.shape, dtype=complex)
        inside = np.abs(u) <= self.trunc_radius
        if np.any(inside):
            ui = u[inside]
            out[inside] = self._spline_re(ui) + 1j * self._spline_im(ui)
        return out[0] if scalar else out

    def exact(self, u):
        """Direct quadrature evaluation, used where the spline is not trusted."""
        u = np.asarray(u, dtype=float)
        scalar = u.ndim == 0
        vals = self._eval_direct(np.atleast_1d(u))
        return vals[0] if scalar else vals


@dataclass
class BumpKit:
    """The fixed cutoff family: rho, phi_window, nu partition, packet window."""

    rho: object = field(default=None)
    phi_window: object = field(default=None)
    nu0: object = field(default=None)
    nu1: object = field(default=None)
    nu2: object = field(default=None)
    packet_window: PacketWindow = field(default=None)

    def __post_init__(self):
        if self.rho is None:
            self.rho = rho
        if self.phi_window is None:
            self.phi_window = phi_window
        if self.nu0 is None:
            self.nu0 = nu0
        if self.nu1 is None:
            self.nu1 = nu1
        if self.nu2 is None:
            self.nu2 = nu2
        if self.packet_window is None:
            self.packet_window = default_packet_window()


@lru_cache(maxsize=1)
def default_packet_window():
    return PacketWindow()


@lru_cache(maxsize=1)
def default_kit():
    return BumpKit()
