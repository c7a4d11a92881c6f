import numpy as np
import pytest

from nonflat.errors import InsufficientPointsError
from nonflat.fitting import fit_decay


def test_exact_dyadic_decay():
    pts = [(m, 2.0**-m) for m in range(3, 11)]
    fit = fit_decay(pts)
    assert fit.slope == pytest.approx(-1.0, abs=1e-12)
    assert fit.max_residual < 1e-12


def test_constant_values_give_zero_slope():
    fit = fit_decay([(m, 3.5) for m in range(6)])
    assert fit.slope == pytest.approx(0.0, abs=1e-12)


def test_noisy_half_power():
    rng = np.random.default_rng(11)
    pts = [(m, 2.0 ** (-m / 2) * (1.0 + 0.1 * rng.uniform(-1, 1)))
           for m in range(4, 14)]
    fit = fit_decay(pts)
    assert -0.55 <= fit.slope <= -0.45


def test_residual_orthogonality():
    # least-squares optimality: residuals orthogonal to [1, scale]
    rng = np.random.default_rng(5)
    pts = [(m, 2.0 ** (-0.7 * m) * (1 + 0.3 * rng.uniform(-1, 1)))
           for m in range(2, 12)]
    fit = fit_decay(pts)
    scale = np.array([s for s, _ in fit.points])
    logv = np.log2([v for _, v in fit.points])
    resid = logv - (fit.intercept + fit.slope * scale)
    assert abs(np.sum(resid)) < 1e-10
    assert abs(np.dot(resid, scale)) < 1e-10


def test_drop_smallest_and_nonpositive():
    pts = [(0, 100.0), (1, 100.0), (2, 2.0**-2), (3, 2.0**-3),
           (4, 2.0**-4), (5, 2.0**-5), (6, 0.0)]
    fit = fit_decay(pts, drop_smallest=2)
    assert fit.dropped_nonpositive == 1
    assert fit.slope == pytest.approx(-1.0, abs=1e-12)


def test_too_few_points_raises():
    with pytest.raises(InsufficientPointsError):
        fit_decay([(0, 1.0), (1, 0.5), (2, 0.25)])
    with pytest.raises(InsufficientPointsError):
        fit_decay([(m, 2.0**-m) for m in range(6)], drop_smallest=3)


def test_predict_matches_line():
    fit = fit_decay([(m, 5.0 * 2.0**-m) for m in range(4, 10)])
    assert fit.predict(6.0) == pytest.approx(5.0 * 2.0**-6, rel=1e-10)
