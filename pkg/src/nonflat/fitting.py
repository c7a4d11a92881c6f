"""Log2-linear decay fits for measured quantities against a scale parameter."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientPointsError


@dataclass
class DecayFit:
    """Least-squares fit of log2(value) against scale.

    slope is the fitted decay exponent per unit scale; max_residual is the
    largest absolute deviation of log2(value) from the fitted line.
    """

    points: list
    slope: float
    intercept: float
    max_residual: float
    dropped_nonpositive: int = 0

    def predict(self, scale):
        return 2.0 ** (self.intercept + self.slope * np.asarray(scale, dtype=float))


def fit_decay(points, drop_smallest=0):
    """Fit log2(value) = intercept + slope * scale by least squares.

    points is a sequence of (scale, value) pairs. The drop_smallest smallest
    scales are discarded before fitting (transient suppression); zero or
    negative values are excluded and counted. Needs at least 4 usable points.
    """
    pts = sorted((float(s), float(v)) for s, v in points)
    if drop_smallest:
        pts = pts[drop_smallest:]
    usable = [(s, v) for s, v in pts if v > 0.0]
    dropped = len(pts) - len(usable)
    if len(usable) < 4:
        raise InsufficientPointsError(
            f"need at least 4 usable points, have {len(usable)}")
    scale = np.array([s for s, _ in usable])
    logv = np.log2([v for _, v in usable])
    design = np.column_stack([np.ones_like(scale), scale])
    coef, *_ = np.linalg.lstsq(design, logv, rcond=None)
    resid = logv - design @ coef
    return DecayFit(
        points=usable,
        slope=float(coef[1]),
        intercept=float(coef[0]),
        max_residual=float(np.max(np.abs(resid))),
        dropped_nonpositive=dropped,
    )
