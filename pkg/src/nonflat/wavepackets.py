"""Wave packet transforms on dyadic frequency bands.

Packets at scale m use the anchored form

    packet(x) = 2^(-m/2) w(u) exp(i p u),   u = 2^(-m) x - l,

with w the band-limited window from bumps (transform supported in
[0, 2]) and integer modulation p in [2^m, 2^(m+1)]. Anchoring the
modulation at the packet center makes a unit step in l an exact
translation by 2^m, which the lattice identities rely on.

Analysis folds the sample grid modulo the modulation period and reads
every p channel off one FFT per time slot. Synthesis assembles the
frequency content and divides by the frame multiplier, which is the
frame operator diagonalized by the Fourier transform; the window's
exact unit tiling makes the multiplier constant inside the covered
band, so the canonical dual is a scalar multiple of the window there.
"""

import csv
import struct

import numpy as np

from .bumps import default_kit, default_packet_window
from .dualphase import profile_engine
from .errors import (AliasingError, DomainError, FrameError,
                     PreconditionError)

_TWO_PI = 2.0 * np.pi


def _lattice_step(lattice):
    if lattice == "integer":
        return 1.0
    if lattice == "half":
        return 0.5
    raise DomainError("lattice must be 'integer' or 'half', got %r" % (lattice,))


class WavePacketIndex:
    """Scale, time slot, and modulation of one packet.

    m is the dyadic scale (nonnegative integer), l the time slot on an
    integer or half-integer lattice, and p the integer modulation,
    constrained to [2^m, 2^(m+1)] so the packet band sits inside the
    fixed frequency annulus after rescaling.
    """

    __slots__ = ("m", "l", "p")

    def __init__(self, m, l, p):
        m = int(m)
        if m < 0:
            raise DomainError("scale index m must be nonnegative, got %d" % m)
        l = float(l)
        if abs(2.0 * l - round(2.0 * l)) > 1e-12:
            raise DomainError("time slot l must lie on the half-integer lattice")
        if int(p) != p:
            raise DomainError("modulation p must be an integer")
        p = int(p)
        if not (2 ** m <= p <= 2 ** (m + 1)):
            raise DomainError(
                "modulation p=%d outside [2^%d, 2^%d]" % (p, m, m + 1))
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "l", l)
        object.__setattr__(self, "p", p)

    def __setattr__(self, name, value):
        raise AttributeError("WavePacketIndex is immutable")

    def __repr__(self):
        return "WavePacketIndex(m=%d, l=%g, p=%d)" % (self.m, self.l, self.p)

    def __eq__(self, other):
        return (isinstance(other, WavePacketIndex)
                and (self.m, self.l, self.p) == (other.m, other.l, other.p))

    def __hash__(self):
        return hash((self.m, self.l, self.p))


class SampledFunction:
    """Complex samples on a uniform grid x0 + k dx.

    band_limit, when declared, is the largest |frequency| present; the
    grid must then resolve it with step dx <= 1 / (4 band_limit), and
    construction fails otherwise. CSV output keeps only the samples;
    the binary format keeps the full metadata.
    """

    __slots__ = ("values", "x0", "dx", "band_limit")

    _MAGIC = b"NFSF"
    _VERSION = 1

    def __init__(self, values, x0, dx, band_limit=None):
        values = np.asarray(values, dtype=complex)
        if values.ndim != 1:
            raise DomainError("samples must form a one dimensional array")
        dx = float(dx)
        if dx <= 0.0:
            raise DomainError("grid step must be positive")
        if band_limit is not None:
            band_limit = float(band_limit)
            if band_limit <= 0.0:
                raise DomainError("band limit must be positive")
            if dx > 1.0 / (4.0 * band_limit):
                raise AliasingError(
                    "grid step %.6g exceeds 1/(4 band_limit) = %.6g"
                    % (dx, 1.0 / (4.0 * band_limit)))
        self.values = values
        self.x0 = float(x0)
        self.dx = dx
        self.band_limit = band_limit

    def __len__(self):
        return len(self.values)

    def x_grid(self):
        return self.x0 + self.dx * np.arange(len(self.values))

    def norm2(self):
        """L2 norm of the sampled function (rectangle rule)."""
        return float(np.sqrt(self.dx * np.sum(np.abs(self.values) ** 2)))

    def to_csv(self, path):
        x = self.x_grid()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "re", "im"])
            for xi, v in zip(x, self.values):
                writer.writerow(["%.17g" % xi, "%.17g" % v.real, "%.17g" % v.imag])

    @classmethod
    def from_csv(cls, path):
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        data = np.atleast_2d(data)
        x = data[:, 0]
        if len(x) > 1:
            steps = np.diff(x)
            dx = float(np.mean(steps))
            if np.max(np.abs(steps - dx)) > 1e-9 * max(abs(dx), 1.0):
                raise DomainError("CSV grid is not uniform")
        else:
            dx = 1.0
        return cls(data[:, 1] + 1j * data[:, 2], x0=float(x[0]), dx=dx)

    def to_binary(self, path):
        """Raw little-endian float64 dump with a fixed metadata header."""
        bl = np.nan if self.band_limit is None else self.band_limit
        header = self._MAGIC + struct.pack(
            "<IdddQ", self._VERSION, self.x0, self.dx, bl, len(self.values))
        inter = np.empty(2 * len(self.values), dtype="<f8")
        inter[0::2] = self.values.real
        inter[1::2] = self.values.imag
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(inter.tobytes())

    @classmethod
    def from_binary(cls, path):
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != cls._MAGIC:
                raise DomainError("not a sampled-function file")
            version, x0, dx, bl, n = struct.unpack("<IdddQ", fh.read(36))
            if version != cls._VERSION:
                raise DomainError("unsupported file version %d" % version)
            inter = np.frombuffer(fh.read(16 * n), dtype="<f8")
        values = inter[0::2] + 1j * inter[1::2]
        band_limit = None if np.isnan(bl) else bl
        return cls(values, x0=x0, dx=dx, band_limit=band_limit)


def spectrum(f):
    """DFT frequencies and spectral samples of f.

    Returns (xi, fhat) with fhat(xi_k) = dx sum_n f_n exp(-i xi_k x_n),
    the rectangle-rule Fourier transform, in fftfreq ordering.
    """
    n = len(f.values)
    xi = _TWO_PI * np.fft.fftfreq(n, d=f.dx)
    fhat = f.dx * np.exp(-1j * xi * f.x0) * np.fft.fft(f.values)
    return xi, fhat


def wavepacket(idx, window=None, grid=None, u_span=192.0):
    """Sample one packet on a uniform grid.

    The default grid covers the window's full truncation span around
    the packet center with step 2 pi / 64 in x at scale 0, scaled by
    2^m. Pass grid=(x0, dx, n) or a SampledFunction to override.
    """
    window = window or default_packet_window()
    scale = 2.0 ** idx.m
    if grid is None:
        dx = _TWO_PI / 64.0
        n = int(np.ceil(2.0 * u_span * scale / dx)) + 1
        x0 = scale * (idx.l - u_span)
    elif isinstance(grid, SampledFunction):
        x0, dx, n = grid.x0, grid.dx, len(grid)
    else:
        x0, dx, n = grid
        n = int(n)
    x = x0 + dx * np.arange(n)
    u = x / scale - idx.l
    vals = (scale ** -0.5) * window(u) * np.exp(1j * idx.p * u)
    band = (idx.p + 2.0) / scale
    return SampledFunction(vals, x0=x0, dx=dx, band_limit=band)


def packet_inner(idx1, idx2, window=None, nodes=2048):
    """Inner product <packet1, packet2> for packets at the same scale.

    Computed in frequency: with q = p2 - p1 and shift d = l1 - l2 the
    product is 2 pi exp(-i p2 d) * integral of what(v) what(v + q)
    exp(-i d (v + q)) dv, which vanishes for |q| >= 2 because the
    window transform is supported in [0, 2].
    """
    window = window or default_packet_window()
    if idx1.m != idx2.m:
        raise DomainError("packet_inner requires equal scales")
    q = idx2.p - idx1.p
    d = idx1.l - idx2.l
    if abs(q) >= 2:
        return 0.0 + 0.0j
    lo = max(0.0, -q)
    hi = min(2.0, 2.0 - q)
    t = np.linspace(lo, hi, nodes)
    # composite Simpson needs an odd point count
    if nodes % 2 == 0:
        t = np.linspace(lo, hi, nodes + 1)
    fvals = (window.transform(t) * window.transform(t + q)
             * np.exp(-1j * d * t))
    h = t[1] - t[0]
    wts = np.ones(len(t))
    wts[1:-1:2] = 4.0
    wts[2:-1:2] = 2.0
    integral = h / 3.0 * np.sum(wts * fvals)
    return _TWO_PI * np.exp(-1j * idx2.p * d) * integral


class CoefficientGrid:
    """Packet coefficients over a time-frequency lattice at one scale.

    data[i, k] is the coefficient for time slot ls[i] and modulation
    ps[k]. The analysis grid parameters are kept so synthesis can
    reconstruct onto the same grid. bessel is the measured ratio
    sum |c|^2 / ||g||^2 (None for zero input).
    """

    __slots__ = ("m", "data", "ls", "ps", "lattice", "step",
                 "grid_x0", "grid_dx", "grid_n", "bessel")

    def __init__(self, m, data, ls, ps, lattice, step,
                 grid_x0, grid_dx, grid_n, bessel=None):
        self.m = int(m)
        self.data = np.asarray(data, dtype=complex)
        self.ls = np.asarray(ls, dtype=float)
        self.ps = np.asarray(ps, dtype=int)
        self.lattice = lattice
        self.step = float(step)
        self.grid_x0 = float(grid_x0)
        self.grid_dx = float(grid_dx)
        self.grid_n = int(grid_n)
        self.bessel = bessel

    def scaled_copy(self, factor):
        return CoefficientGrid(self.m, factor * self.data, self.ls, self.ps,
                               self.lattice, self.step, self.grid_x0,
                               self.grid_dx, self.grid_n, bessel=None)


def _modulation_period(m, dx):
    """Samples per modulation period; the fold length of the analysis FFT."""
    n_float = _TWO_PI * (2.0 ** m) / dx
    n = int(round(n_float))
    if n < 1 or abs(n_float - n) > 1e-9 * n_float:
        raise PreconditionError(
            "grid step %.6g does not divide the scale-%d modulation period"
            % (dx, m))
    return n


def analyze(g, m, lattice="half", window=None, u_cut=144.0, p_range=None):
    """Packet coefficients of g at scale m.

    Coefficients are rectangle-rule inner products <g, packet>; one FFT
    of the fold of g * conj(window) modulo the modulation period gives
    every p channel for a fixed time slot. Time slots run over the
    lattice within u_cut of the sample support; the window is below
    1e-8 past that distance, so dropped slots carry no weight at the
    reconstruction tolerance.
    """
    window = window or default_packet_window()
    step = _lattice_step(lattice)
    m = int(m)
    scale = 2.0 ** m
    if g.band_limit is not None and g.dx > 1.0 / (4.0 * g.band_limit):
        raise AliasingError("sample grid too coarse for the declared band")
    period = _modulation_period(m, g.dx)
    if p_range is None:
        p_lo, p_hi = 2 ** m, 2 ** (m + 1)
    else:
        p_lo, p_hi = int(p_range[0]), int(p_range[1])
    if p_hi >= period:
        raise AliasingError(
            "modulation index %d is not resolved by the fold length %d"
            % (p_hi, period))
    ps = np.arange(p_lo, p_hi + 1)

    nx = len(g.values)
    u = g.x_grid() / scale
    lo = np.ceil((u[0] - u_cut) / step) * step
    hi = np.floor((u[-1] + u_cut) / step) * step
    ls = np.arange(lo, hi + 0.5 * step, step)

    pad = (-nx) % period
    u0 = g.x0 / scale
    # phase turning the fold FFT bin into the anchored inner product
    pref = (scale ** -0.5) * g.dx * np.exp(-1j * ps * u0)
    data = np.empty((len(ls), len(ps)), dtype=complex)
    chunk = 32
    for start in range(0, len(ls), chunk):
        lc = ls[start:start + chunk]
        z = g.values[None, :] * np.conj(window(u[None, :] - lc[:, None]))
        if pad:
            z = np.pad(z, ((0, 0), (0, pad)))
        folded = z.reshape(len(lc), -1, period).sum(axis=1)
        raw = np.fft.fft(folded, axis=1)[:, ps % period]
        data[start:start + chunk] = (np.exp(1j * np.outer(lc, ps))
                                     * pref[None, :] * raw)

    nrm = g.norm2()
    bessel = None
    if nrm > 0.0:
        bessel = float(np.sum(np.abs(data) ** 2)) / nrm ** 2
    return CoefficientGrid(m, data, ls, ps, lattice, step,
                           g.x0, g.dx, nx, bessel=bessel)


def _assemble(coeffs, window, invert):
    """Shared synthesis core.

    Builds the frequency content sum_p W(v - p) D_p(v) with W the
    standard-convention window transform and D_p the lattice sum of
    coefficients. With invert=True the result is divided by the frame
    multiplier M(v) = (1/step) sum_p W(v - p)^2, i.e. the canonical
    dual reconstruction; invert=False applies the frame operator.
    """
    window = window or default_packet_window()
    n = coeffs.grid_n
    dx = coeffs.grid_dx
    scale = 2.0 ** coeffs.m
    xi = _TWO_PI * np.fft.fftfreq(n, d=dx)
    v = scale * xi
    acc = np.zeros(n, dtype=complex)
    mult = np.zeros(n, dtype=float)
    wsq_scale = _TWO_PI ** 2 / coeffs.step
    for k, p in enumerate(coeffs.ps):
        mask = (v > p) & (v < p + 2.0)
        if not np.any(mask):
            continue
        vm = v[mask]
        col = coeffs.data[:, k]
        dp = np.exp(-1j * np.outer(vm, coeffs.ls)) @ col
        wstd = _TWO_PI * window.transform(vm - p)
        acc[mask] += wstd * dp
        mult[mask] += wsq_scale * window.transform_sq(vm - p)

    if invert:
        flat = _TWO_PI / coeffs.step
        top = np.max(np.abs(acc))
        # spectral dust far below the coefficient mass must not reach the
        # division, where a vanishing multiplier would amplify it
        live = np.abs(acc) > 1e-12 * top if top > 0.0 else np.zeros(n, bool)
        if np.any(live & (mult < 1e-8 * flat)):
            raise FrameError(
                "frame multiplier vanishes inside the requested band; "
                "dual-window inversion failed")
        covered = (v >= coeffs.ps[0] + 2.0) & (v <= coeffs.ps[-1])
        if np.any(covered):
            resid = np.max(np.abs(mult[covered] / flat - 1.0))
            if resid > 1e-8:
                raise FrameError(
                    "frame multiplier deviates from its tight value by %.3g"
                    % resid)
        out = np.zeros(n, dtype=complex)
        out[live] = acc[live] / mult[live]
        fhat = np.sqrt(scale) * out
    else:
        fhat = np.sqrt(scale) * acc

    vals = np.fft.ifft(fhat * np.exp(1j * xi * coeffs.grid_x0)) / dx
    band = (coeffs.ps[-1] + 2.0) / scale
    return SampledFunction(vals, x0=coeffs.grid_x0, dx=dx, band_limit=band)


def synthesize(coeffs, window=None):
    """Reconstruct from packet coefficients with the canonical dual frame."""
    return _assemble(coeffs, window, invert=True)


def apply_frame_operator(g, m, lattice="half", window=None, u_cut=144.0):
    """Analysis followed by primal synthesis; multiplication by the
    frame multiplier on the covered band."""
    coeffs = analyze(g, m, lattice=lattice, window=window, u_cut=u_cut)
    return _assemble(coeffs, window, invert=False)


class FrameReport:
    """Measured frame bounds for one scale and lattice."""

    __slots__ = ("lower", "upper", "ratio", "expected",
                 "rayleigh_min", "rayleigh_max", "lattice", "m")

    def __init__(self, lower, upper, expected, rayleigh_min, rayleigh_max,
                 lattice, m):
        self.lower = lower
        self.upper = upper
        self.ratio = upper / lower
        self.expected = expected
        self.rayleigh_min = rayleigh_min
        self.rayleigh_max = rayleigh_max
        self.lattice = lattice
        self.m = m


def random_bandlimited_signal(m, rng, modes=5, band=(1.15, 1.85), dx=None,
                              sigma_x=55.0, cut=7.0):
    """Random smooth signal with spectrum inside the scaled band.

    A sum of complex exponentials with frequencies in `band` under a
    Gaussian envelope of width sigma_x, truncated at cut standard
    deviations where the tail is below 1e-10. The spectral widening
    1/sigma_x keeps leakage past the covered band near 1e-13 of the
    energy, far inside the reconstruction tolerance, and the envelope
    is independent of the scale m the caller will analyze at.
    """
    if dx is None:
        dx = _TWO_PI / 64.0
    half = cut * sigma_x
    n = int(np.ceil(2.0 * half / dx))
    x = dx * np.arange(n)
    env = np.exp(-0.5 * ((x - half) / sigma_x) ** 2)
    freqs = rng.uniform(band[0], band[1], size=modes)
    amps = rng.normal(size=modes) + 1j * rng.normal(size=modes)
    vals = env * (np.exp(1j * np.outer(x, freqs)) @ amps)
    return SampledFunction(vals, x0=0.0, dx=dx, band_limit=band[1] + 0.2)


def measure_frame_bounds(m, lattice="half", window=None, trials=6, iters=8,
                         seed=0, modes=4):
    """Frame bounds of the scale-m packet system on band-limited input.

    Rayleigh quotients sum |c|^2 / ||g||^2 over random inputs bracket
    the bounds from inside; power iteration on the frame operator and
    on its reflection c I - S tightens the top and bottom estimates.
    The window tiling makes the frame tight, so everything should sit
    at 2 pi / step.
    """
    window = window or default_packet_window()
    step = _lattice_step(lattice)
    rng = np.random.default_rng(seed)
    expected = _TWO_PI / step

    quotients = []
    probes = []
    for _ in range(trials):
        g = random_bandlimited_signal(m, rng, modes=modes)
        coeffs = analyze(g, m, lattice=lattice, window=window)
        quotients.append(coeffs.bessel)
        probes.append(g)

    def apply_s(f):
        return apply_frame_operator(f, m, lattice=lattice, window=window)

    def dot(a, b):
        return complex(a.dx * np.vdot(a.values, b.values))

    # top of the spectrum
    f = probes[0]
    upper = quotients[0]
    for _ in range(iters):
        sf = apply_s(f)
        upper = dot(f, sf).real / dot(f, f).real
        nrm = sf.norm2()
        f = SampledFunction(sf.values / nrm, sf.x0, sf.dx, sf.band_limit)

    # bottom of the spectrum via the reflected operator
    shift = 1.5 * upper
    f = probes[-1]
    mu = 0.0
    for _ in range(iters):
        sf = apply_s(f)
        rf = SampledFunction(shift * f.values - sf.values, f.x0, f.dx,
                             f.band_limit)
        mu = dot(f, rf).real / dot(f, f).real
        nrm = rf.norm2()
        f = SampledFunction(rf.values / nrm, rf.x0, rf.dx, rf.band_limit)
    lower = shift - mu

    lower = min(lower, min(quotients))
    upper = max(upper, max(quotients))
    return FrameReport(lower, upper, expected, min(quotients), max(quotients),
                       lattice, m)


def q_mp(f, m, p, x, curve=None, j=0, side="origin", engine=None, kit=None):
    """Single-packet model operator applied to f, evaluated at x.

    Q f(x) = integral of fhat(xi) phi(xi) exp(-i p R(2^m xi / p))
    exp(i xi x) d xi, with phi the fixed annular frequency window and
    R the lower-anchored profile integral of the curve at scale j.
    Domain errors from the profile (odd curves have no negative
    branch) propagate.
    """
    kit = kit or default_kit()
    if engine is None:
        if curve is None:
            raise PreconditionError("q_mp needs a curve or a profile engine")
        engine = profile_engine(curve, j, side)
    xi, fhat = spectrum(f)
    win = kit.phi_window(xi)
    weighted = np.abs(fhat * win)
    floor = 1e-13 * max(np.max(np.abs(fhat)), 1e-300)
    mask = (win != 0.0) & (weighted > floor)
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.any(mask):
        out = np.zeros(len(x_arr), dtype=complex)
        return out[0] if np.isscalar(x) or np.ndim(x) == 0 else out
    xim = xi[mask]
    ratio = (2.0 ** m) * xim / p
    phase = np.exp(-1j * p * engine.R(ratio))
    weight = fhat[mask] * win[mask] * phase
    dxi = _TWO_PI / (len(f.values) * f.dx)
    out = dxi * (np.exp(1j * np.outer(x_arr, xim)) @ weight)
    return out[0] if np.isscalar(x) or np.ndim(x) == 0 else out


def phi_window_derivative_norm(kit=None, nodes=4001):
    """L2 norm of xi * phi(xi), the Lipschitz constant scale for q_mp."""
    kit = kit or default_kit()
    t = np.linspace(1.5, 4.0, nodes)
    vals = (t * kit.phi_window(t)) ** 2
    h = t[1] - t[0]
    wts = np.ones(nodes)
    wts[1:-1:2] = 4.0
    wts[2:-1:2] = 2.0
    one_side = h / 3.0 * np.sum(wts * vals)
    return float(np.sqrt(2.0 * one_side))


def q_mp_lipschitz(curve, j, m_values, p_per_m=3, pairs=300, seed=0,
                   kit=None, side="origin"):
    """Sampled Lipschitz constants of q_mp across scales and modulations.

    For each (m, p) draws a band-limited input overlapping the annular
    window, samples difference quotients |Qf(x) - Qf(x')| over random
    pairs, and normalizes by ||f||_2. Returns the per-pair constants,
    their spread, and the a-priori bound sqrt(2 pi) ||xi phi||_2.
    """
    kit = kit or default_kit()
    rng = np.random.default_rng(seed)
    theory = np.sqrt(_TWO_PI) * phi_window_derivative_norm(kit)
    engine = profile_engine(curve, j, side)
    f = random_bandlimited_signal(0, rng, modes=6, band=(1.6, 3.8),
                                  dx=_TWO_PI / 128.0, sigma_x=10.0, cut=5.0)
    nrm = f.norm2()
    gap = 0.05
    xs = np.linspace(5.0, 95.0, pairs)
    constants = {}
    for m in m_values:
        ps = np.unique(rng.integers(2 ** m, 2 ** (m + 1) + 1, size=p_per_m))
        for p in ps:
            qa = q_mp(f, m, int(p), xs, engine=engine, kit=kit)
            qb = q_mp(f, m, int(p), xs + gap, engine=engine, kit=kit)
            cs = np.abs(qa - qb) / (gap * nrm)
            constants[(m, int(p))] = float(np.max(cs))
    vals = np.array(sorted(constants.values()))
    return {
        "constants": constants,
        "max": float(vals[-1]),
        "min": float(vals[0]),
        "spread": float(vals[-1] / vals[0]),
        "theory": theory,
    }
