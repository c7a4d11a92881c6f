import numpy as np
import pytest

from nonflat.bumps import default_kit
from nonflat.curves import make_curve
from nonflat.errors import (AliasingError, DomainError, FrameError,
                            PreconditionError)
from nonflat import wavepackets as wp


TWO_PI = 2.0 * np.pi


def test_index_validation():
    idx = wp.WavePacketIndex(4, 2.5, 20)
    assert idx.m == 4 and idx.l == 2.5 and idx.p == 20
    with pytest.raises(DomainError):
        wp.WavePacketIndex(-1, 0, 1)
    with pytest.raises(DomainError):
        wp.WavePacketIndex(4, 0.25, 20)
    with pytest.raises(DomainError):
        wp.WavePacketIndex(4, 0, 15)
    with pytest.raises(DomainError):
        wp.WavePacketIndex(4, 0, 33)
    with pytest.raises(AttributeError):
        idx.m = 5


def test_norm_invariance_same_scale():
    # identical u-grids make the sample moduli equal, so the norms agree
    # far below the stated tolerance
    norms = [wp.wavepacket(wp.WavePacketIndex(6, l, p)).norm2()
             for l, p in ((0, 64), (0.5, 64), (-3, 100), (7.5, 128))]
    assert max(norms) - min(norms) <= 1e-10
    for nrm in norms:
        assert abs(nrm - 1.0) <= 1e-6


def test_norm_across_scales():
    n3 = wp.wavepacket(wp.WavePacketIndex(3, 0, 8)).norm2()
    n6 = wp.wavepacket(wp.WavePacketIndex(6, 0, 64)).norm2()
    assert abs(n3 - n6) <= 1e-8


def test_translation_covariance():
    # packet(m, l+1, p) equals packet(m, l, p) shifted by 2^m
    x0, dx, n = 32.0 * (2 - 30), TWO_PI / 64.0, 40000
    a = wp.wavepacket(wp.WavePacketIndex(5, 3, 40), grid=(x0, dx, n))
    b = wp.wavepacket(wp.WavePacketIndex(5, 2, 40), grid=(x0 - 32.0, dx, n))
    assert np.max(np.abs(a.values - b.values)) <= 1e-12


def test_packet_inner_product():
    i1 = wp.WavePacketIndex(6, 0, 64)
    i2 = wp.WavePacketIndex(6, 3, 64)
    ana = wp.packet_inner(i1, i2)
    # derived oracle: frequency-domain Simpson value, frozen
    assert ana == pytest.approx(0.640812837467642 + 0.14414319059272934j,
                                abs=1e-9)
    x0, dx = 64.0 * (-56.0), TWO_PI / 64.0
    n = int(64.0 * 115 / dx)
    q1 = wp.wavepacket(i1, grid=(x0, dx, n))
    q2 = wp.wavepacket(i2, grid=(x0, dx, n))
    quad = dx * np.sum(q1.values * np.conj(q2.values))
    assert abs(ana - quad) / abs(ana) <= 1e-6


def test_packet_inner_disjoint_bands():
    val = wp.packet_inner(wp.WavePacketIndex(6, 0, 64),
                          wp.WavePacketIndex(6, 0, 66))
    assert val == 0.0
    x0, dx = 64.0 * (-56.0), TWO_PI / 64.0
    n = int(64.0 * 112 / dx)
    q1 = wp.wavepacket(wp.WavePacketIndex(6, 0, 64), grid=(x0, dx, n))
    q2 = wp.wavepacket(wp.WavePacketIndex(6, 0, 66), grid=(x0, dx, n))
    assert abs(dx * np.sum(q1.values * np.conj(q2.values))) <= 1e-8


def test_sampled_function_io(tmp_path):
    rng = np.random.default_rng(0)
    vals = rng.normal(size=64) + 1j * rng.normal(size=64)
    f = wp.SampledFunction(vals, x0=-2.5, dx=0.05, band_limit=3.0)

    csv_path = tmp_path / "f.csv"
    f.to_csv(csv_path)
    g = wp.SampledFunction.from_csv(csv_path)
    assert np.max(np.abs(g.values - f.values)) <= 1e-12
    assert g.x0 == pytest.approx(-2.5, abs=1e-12)
    assert g.dx == pytest.approx(0.05, rel=1e-12)

    bin_path = tmp_path / "f.bin"
    f.to_binary(bin_path)
    h = wp.SampledFunction.from_binary(bin_path)
    assert np.array_equal(h.values, f.values)
    assert h.x0 == f.x0 and h.dx == f.dx and h.band_limit == 3.0


def test_aliasing_guard():
    with pytest.raises(AliasingError):
        wp.SampledFunction(np.zeros(8), 0.0, 0.2, band_limit=2.0)
    # grid step that does not divide the modulation period
    f = wp.SampledFunction(np.zeros(128, dtype=complex), 0.0, 0.11,
                           band_limit=2.0)
    with pytest.raises(PreconditionError):
        wp.analyze(f, 4)
    # modulation index beyond the fold resolution
    g = wp.SampledFunction(np.zeros(256, dtype=complex), 0.0, TWO_PI / 64.0)
    with pytest.raises(AliasingError):
        wp.analyze(g, 0, p_range=(1, 70))


def test_analyze_single_packet():
    g = wp.wavepacket(wp.WavePacketIndex(5, 3, 40), u_span=48.0)
    grid = wp.analyze(g, 5, u_cut=60.0)
    il = int(np.argmin(np.abs(grid.ls - 3.0)))
    ip = int(np.argmin(np.abs(grid.ps - 40)))
    assert grid.ls[il] == 3.0 and grid.ps[ip] == 40
    # on-lattice self coefficient is the squared window norm
    assert abs(grid.data[il, ip] - 1.0) <= 1e-6
    peak = np.unravel_index(np.argmax(np.abs(grid.data)), grid.data.shape)
    assert peak == (il, ip)
    # packet energy against the tight-frame constant for the half lattice
    assert grid.bessel == pytest.approx(4.0 * np.pi, rel=1e-6)
    # coefficients two modulation steps away vanish with the band overlap
    far = np.abs(grid.data[il])[np.abs(grid.ps - 40) >= 2]
    assert np.max(far) <= 1e-7


@pytest.mark.parametrize("m", [4, 6])
def test_roundtrip_reconstruction(m):
    rng = np.random.default_rng(10 + m)
    f = wp.random_bandlimited_signal(m, rng)
    grid = wp.analyze(f, m)
    rec = wp.synthesize(grid)
    num = np.sum(np.abs(rec.values - f.values) ** 2)
    den = np.sum(np.abs(f.values) ** 2)
    assert np.sqrt(num / den) <= 1e-6


def test_roundtrip_integer_lattice():
    rng = np.random.default_rng(3)
    f = wp.random_bandlimited_signal(5, rng)
    grid = wp.analyze(f, 5, lattice="integer")
    assert grid.bessel == pytest.approx(2.0 * np.pi, rel=1e-6)
    rec = wp.synthesize(grid)
    num = np.sum(np.abs(rec.values - f.values) ** 2)
    den = np.sum(np.abs(f.values) ** 2)
    assert np.sqrt(num / den) <= 1e-6


def test_linearity():
    rng = np.random.default_rng(7)
    f1 = wp.random_bandlimited_signal(4, rng)
    f2 = wp.random_bandlimited_signal(4, rng)
    c1 = wp.analyze(f1, 4)
    c2 = wp.analyze(f2, 4)
    mix = wp.SampledFunction(2.5 * f1.values - 1j * f2.values, f1.x0, f1.dx,
                             f1.band_limit)
    cm = wp.analyze(mix, 4)
    gap = np.max(np.abs(cm.data - (2.5 * c1.data - 1j * c2.data)))
    assert gap <= 1e-10 * np.max(np.abs(cm.data))
    # synthesis side
    sm = wp.synthesize(cm)
    s1 = wp.synthesize(c1)
    s2 = wp.synthesize(c2)
    gap = np.max(np.abs(sm.values - (2.5 * s1.values - 1j * s2.values)))
    assert gap <= 1e-10 * np.max(np.abs(sm.values))


def test_zero_input():
    f = wp.SampledFunction(np.zeros(2048, dtype=complex), 0.0, TWO_PI / 64.0)
    grid = wp.analyze(f, 4)
    assert np.all(grid.data == 0)
    assert grid.bessel is None
    rec = wp.synthesize(grid)
    assert np.all(rec.values == 0)


@pytest.mark.parametrize("lattice", ["half", "integer"])
def test_frame_bounds(lattice):
    rep = wp.measure_frame_bounds(5, lattice=lattice, trials=4, iters=6,
                                  seed=1)
    assert rep.ratio <= 1.2
    # the window tiling makes the frame tight at 2 pi / step
    assert rep.upper == pytest.approx(rep.expected, rel=1e-6)
    assert rep.lower == pytest.approx(rep.expected, rel=1e-6)


def test_frame_error_at_band_edge():
    # a lone coefficient spreads content onto the edge of its modulation
    # window, where the one-term frame multiplier is essentially zero
    bogus = wp.CoefficientGrid(0, np.array([[1.0 + 0j]]), ls=[0.0], ps=[1],
                               lattice="half", step=0.5, grid_x0=0.0,
                               grid_dx=TWO_PI / 64.0, grid_n=320)
    with pytest.raises(FrameError):
        wp.synthesize(bogus)


def test_qmp_quadratic_phase():
    # for the parabola the profile integral is (x^2 - 1) / 2, so the
    # model operator phase is a pure chirp with an additive constant
    crv = make_curve("monomial:2")
    rng = np.random.default_rng(42)
    f = wp.random_bandlimited_signal(0, rng, modes=6, band=(1.6, 3.8),
                                     dx=TWO_PI / 128.0, sigma_x=10.0, cut=3.0)
    m, p = 4, 20
    xs = np.array([12.0, 23.7, 41.3])
    got = wp.q_mp(f, m, p, xs, curve=crv, j=0)

    kit = default_kit()
    xi, fhat = wp.spectrum(f)
    win = kit.phi_window(xi)
    mask = (win != 0) & (np.abs(fhat * win) > 1e-13 * np.max(np.abs(fhat)))
    xim = xi[mask]
    phase = np.exp(-1j * (2.0 ** (2 * m) * xim ** 2 / (2.0 * p) - p / 2.0))
    dxi = TWO_PI / (len(f.values) * f.dx)
    manual = dxi * (np.exp(1j * np.outer(xs, xim))
                    @ (fhat[mask] * win[mask] * phase))
    assert np.max(np.abs(got - manual)) <= 1e-9 * np.max(np.abs(got))


def test_qmp_scalar_and_zero_band():
    crv = make_curve("monomial:2")
    dx = TWO_PI / 128.0
    n = 4096
    x = dx * np.arange(n)
    # single mode exactly on a transform bin below the window support
    xi0 = TWO_PI * 37 / (n * dx)
    f = wp.SampledFunction(np.exp(1j * xi0 * x), 0.0, dx, band_limit=1.3)
    q = wp.q_mp(f, 4, 20, np.array([3.0, 7.5]), curve=crv, j=0)
    assert np.all(q == 0)
    q_scalar = wp.q_mp(f, 4, 20, 3.0, curve=crv, j=0)
    assert np.ndim(q_scalar) == 0


def test_qmp_lipschitz_spread():
    crv = make_curve("monomial:2")
    rep = wp.q_mp_lipschitz(crv, 0, (3, 6, 10), p_per_m=3, seed=5)
    assert rep["max"] <= rep["theory"]
    assert rep["spread"] <= 2.0
