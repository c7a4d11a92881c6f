"""Curve models, profile rescalings, and non-flatness certification.

A Curve bundles a scalar map gamma with its first four derivatives and the
punctured neighborhoods (near zero, near infinity) on which it is smooth with
nonvanishing derivative. The module computes the rescaled profiles

    Q side:  gamma(2^-j t) / (2^-j gamma'(2^-j))      for t in I,
    r side:  inv(gamma')(s gamma'(2^-j)) / inv(gamma')(gamma'(2^-j)),

certifies class membership through variation counts, profile-remainder decay,
curvature infima, and the convexity-transfer quantity t gamma''/gamma', and
ships a registry of analytic example curves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, MonotonicityError, RangeError

I_INNER = 0.25
I_OUTER = 4.0

DEFAULT_THRESHOLDS = {
    "c_gamma": 0.05,
    "convtr": 0.05,
    "variation_cap": 4,
    "aj_factor_per_octave": 0.9,
    "aj_atol": 1e-9,
    "aj_wiggle": 1.05,
}


@dataclass
class Curve:
    """A smooth curve given by closed-form evaluators.

    side_validity maps side name to an interval (lo, hi) of |t| on which the
    curve is smooth with gamma' nonzero and gamma', gamma'' of constant sign
    per signed branch. q_limit / r_limit are the closed-form limiting
    profiles where known, else None.
    """

    name: str
    eval: object
    d1: object
    d2: object
    d3: object
    d4: object
    side_validity: dict
    q_limit: object = None
    r_limit: object = None
    meta: dict = field(default_factory=dict)

    def deriv(self, order):
        return (self.eval, self.d1, self.d2, self.d3, self.d4)[order]

    def window(self, side):
        if side not in self.side_validity:
            raise DomainError(f"curve {self.name} has no {side} validity region")
        return self.side_validity[side]

    def window_containing(self, tau):
        for side, (lo, hi) in self.side_validity.items():
            if lo < tau < hi:
                return side, (lo, hi)
        raise DomainError(
            f"scale point {tau:g} outside validity of curve {self.name}")


@dataclass
class ProfilePair:
    """Limiting profiles with per-j remainder samples.

    Q and r are callables on I and J; Q_rem / r_rem map j to (grid, values)
    arrays of the remainder profile at that j.
    """

    Q: object
    r: object
    I_intervals: list
    J_intervals: list
    Q_rem: dict
    r_rem: dict
    reference_j: int


@dataclass
class NonFlatReport:
    side: str
    variation_max: int
    a_j_table: dict
    c_gamma: float
    convtr_inf: float
    passes: bool
    flags: dict
    thresholds: dict
    j_range: tuple
    components: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# gamma' inversion


def _ladder(anchor, lo, hi):
    """Geometric ladder through anchor covering (lo, hi), 80 octaves max."""
    lo = max(lo, anchor * 2.0**-80, 1e-300)
    hi = min(hi, anchor * 2.0**80)
    k_dn = max(int(np.ceil(np.log2(anchor / lo))), 0) if anchor > lo else 0
    k_up = max(int(np.ceil(np.log2(hi / anchor))), 0) if hi > anchor else 0
    pts = anchor * 2.0 ** np.arange(-k_dn, k_up + 1, dtype=float)
    pts = np.clip(pts, lo * (1 + 1e-12), hi * (1 - 1e-12))
    return np.unique(pts)


def _eval_d1(curve, t):
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        return np.asarray(curve.d1(t), dtype=float)


def _invert_many(curve, s, branch, window, anchor=None):
    """Vectorized inversion of gamma' on one signed branch of one window."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    sign = 1.0 if branch >= 0 else -1.0
    lo, hi = window
    if anchor is None:
        anchor = math.sqrt(max(lo, 1e-12) * min(hi, 1e12))
    taus = _ladder(anchor, lo, hi)
    g = _eval_d1(curve, sign * taus)
    finite = np.isfinite(g)
    taus, g = taus[finite], g[finite]
    if taus.size < 2:
        raise RangeError(f"no usable ladder for {curve.name} on this window")
    diffs = np.diff(g)
    span = float(np.max(g) - np.min(g))
    if span < 1e-13 * max(float(np.max(np.abs(g))), 1.0):
        raise MonotonicityError(
            f"gamma' of {curve.name} is constant on the searched branch")
    if np.any(diffs > 0) and np.any(diffs < 0):
        raise MonotonicityError(
            f"gamma'' of {curve.name} changes sign on the searched branch")
    increasing = bool(np.sum(diffs) > 0)
    gs = g if increasing else g[::-1]
    ts = taus if increasing else taus[::-1]
    tol_lo = 1e-12 * max(1.0, abs(gs[0]))
    tol_hi = 1e-12 * max(1.0, abs(gs[-1]))
    if np.any(s < gs[0] - tol_lo) or np.any(s > gs[-1] + tol_hi):
        raise RangeError(
            f"target outside range [{gs[0]:.6g}, {gs[-1]:.6g}] of gamma' "
            f"({curve.name}, branch {int(sign)})")
    idx = np.clip(np.searchsorted(gs, s), 1, len(gs) - 1)
    t_lo = np.minimum(ts[idx - 1], ts[idx])
    t_hi = np.maximum(ts[idx - 1], ts[idx])
    f_lo = _eval_d1(curve, sign * t_lo) - s
    f_hi = _eval_d1(curve, sign * t_hi) - s
    # Targets that coincide with a ladder rung make one endpoint the exact
    # root; collapse those brackets so the sign-based bisection cannot drift.
    hit_lo = f_lo == 0.0
    hit_hi = f_hi == 0.0
    t_hi = np.where(hit_lo, t_lo, t_hi)
    t_lo = np.where(hit_hi & ~hit_lo, t_hi, t_lo)
    f_lo = np.where(hit_hi & ~hit_lo, f_hi, f_lo)
    for _ in range(70):
        mid = 0.5 * (t_lo + t_hi)
        fm = _eval_d1(curve, sign * mid) - s
        exact = fm == 0.0
        same_side = (fm > 0) == (f_lo > 0)
        t_lo = np.where(exact | same_side, mid, t_lo)
        f_lo = np.where(exact, 0.0, np.where(same_side, fm, f_lo))
        t_hi = np.where(exact | ~same_side, mid, t_hi)
    tau = 0.5 * (t_lo + t_hi)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for _ in range(3):
            resid = _eval_d1(curve, sign * tau) - s
            slope = sign * np.asarray(curve.d2(sign * tau), dtype=float)
            step = np.where(np.abs(slope) > 0, resid / np.where(slope == 0, 1, slope), 0.0)
            tau = np.clip(tau - step, t_lo, t_hi)
    resid = np.abs(_eval_d1(curve, sign * tau) - s)
    tol = 1e-10 * np.maximum(1.0, np.abs(s))
    if np.any(resid > tol):
        worst = float(np.max(resid / tol))
        raise RangeError(
            f"inversion did not converge for {curve.name} (worst {worst:.3g}x tol)")
    return sign * tau


def _branch_value_range(curve, branch, window, anchor):
    sign = 1.0 if branch >= 0 else -1.0
    taus = _ladder(anchor, *window)
    g = _eval_d1(curve, sign * taus)
    g = g[np.isfinite(g)]
    if g.size == 0:
        return np.inf, -np.inf
    return float(np.min(g)), float(np.max(g))


def invert_gamma_prime(curve, s, branch=1, window=None, anchor=None):
    """Solve gamma'(t) = s on the requested signed branch.

    Returns t with |gamma'(t) - s| <= 1e-10 max(1, |s|). When no window is
    given, each validity window of the curve is tried in turn.
    """
    scalar = np.ndim(s) == 0
    if window is not None:
        t = _invert_many(curve, s, branch, window, anchor)
        return float(t[0]) if scalar else t
    last = None
    for side in ("origin", "infinity"):
        if side not in curve.side_validity:
            continue
        try:
            t = _invert_many(curve, s, branch, curve.side_validity[side], anchor)
            return float(t[0]) if scalar else t
        except (RangeError, MonotonicityError) as exc:
            last = exc
    if last is not None:
        raise last
    raise DomainError(f"curve {curve.name} has no validity window")


# ---------------------------------------------------------------------------
# profiles


def _check_I(t):
    a = np.abs(t)
    if np.any(a < I_INNER - 1e-12) or np.any(a > I_OUTER + 1e-12):
        raise DomainError("profile argument outside I = {1/4 <= |t| <= 4}")


def profile_Q(curve, j, t):
    """Rescaled curve profile gamma(2^-j t) / (2^-j gamma'(2^-j))."""
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    _check_I(t)
    tau0 = 2.0 ** (-j)
    _, (lo, hi) = curve.window_containing(tau0)
    amax, amin = float(np.max(np.abs(t))), float(np.min(np.abs(t)))
    if tau0 * amax > hi or tau0 * amin < lo:
        raise DomainError(
            f"rescaled arguments leave validity window of {curve.name} at j={j}")
    denom = tau0 * float(curve.d1(tau0))
    vals = np.asarray(curve.eval(tau0 * t), dtype=float) / denom
    return float(vals[0]) if scalar else vals


def profile_r(curve, j, s):
    """Rescaled inverse profile of gamma' at scale 2^-j.

    Computes inv(gamma')(s gamma'(2^-j)) / inv(gamma')(gamma'(2^-j)) with both
    inversions anchored near the scale point. Negative targets fall to the
    mirrored signed branch automatically.
    """
    scalar = np.ndim(s) == 0
    s = np.atleast_1d(np.asarray(s, dtype=float))
    tau0 = 2.0 ** (-j)
    _, window = curve.window_containing(tau0)
    g0 = float(curve.d1(tau0))
    denom_t = _invert_many(curve, np.array([g0]), +1, window, anchor=tau0)[0]
    targets = s * g0
    out = np.full(s.shape, np.nan)
    remaining = np.ones(s.shape, dtype=bool)
    for branch in (+1, -1):
        if not np.any(remaining):
            break
        g_lo, g_hi = _branch_value_range(curve, branch, window, tau0)
        m_lo = 1e-12 * max(1.0, abs(g_lo))
        m_hi = 1e-12 * max(1.0, abs(g_hi))
        take = remaining & (targets >= g_lo - m_lo) & (targets <= g_hi + m_hi)
        if np.any(take):
            out[take] = _invert_many(curve, targets[take], branch, window,
                                     anchor=tau0)
            remaining &= ~take
    if np.any(remaining):
        bad = float(targets[remaining][0])
        raise RangeError(
            f"target {bad:.6g} unreachable on either branch ({curve.name}, j={j})")
    vals = out / denom_t
    return float(vals[0]) if scalar else vals


# ---------------------------------------------------------------------------
# class certification


def check_variation(curve, j_max, side="origin"):
    """Max dyadic-bucket multiplicity of |2^-j gamma'(2^-j)| for j in [0, j_max].

    Buckets are [v, 2v] anchored at each attained value; scale points outside
    the validity window are skipped.
    """
    if j_max < 4:
        raise DomainError("j_max must be at least 4")
    lo, hi = curve.window(side)
    vals = []
    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(0, j_max + 1):
            tau = 2.0 ** (-j) if side == "origin" else 2.0 ** j
            if not (lo < tau < hi):
                continue
            w = abs(tau * float(curve.d1(tau)))
            if w > 0.0 and math.isfinite(w):
                vals.append(w)
    if not vals:
        return 0
    vals = np.array(vals)
    counts = [int(np.sum((vals >= v) & (vals <= 2.0 * v))) for v in vals]
    return max(counts)


def check_convtr(curve, side, grid_density=2000):
    """Grid infimum of |t gamma''(t) / gamma'(t)| over the side's window."""
    lo, hi = curve.window(side)
    lo = max(lo, 1e-12)
    taus = np.geomspace(lo * (1 + 1e-9), hi * (1 - 1e-9), grid_density)
    best = np.inf
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for sign in (1.0, -1.0):
            t = sign * taus
            g1 = np.asarray(curve.d1(t), dtype=float)
            g2 = np.asarray(curve.d2(t), dtype=float)
            ok = (g1 != 0) & np.isfinite(g1) & np.isfinite(g2)
            if np.any(ok):
                vals = np.abs(t[ok] * g2[ok] / g1[ok])
                best = min(best, float(np.min(vals)))
    return best


def _five_point_d1(vals, h):
    v = vals
    return (-v[4:] + 8 * v[3:-1] - 8 * v[1:-3] + v[:-4]) / (12.0 * h)


def _five_point_d2(vals, h):
    v = vals
    return (-v[4:] + 16 * v[3:-1] - 30 * v[2:-2] + 16 * v[1:-3] - v[:-4]) / (12.0 * h * h)


def _signed_j(j, side):
    return j if side == "origin" else -j


def _j_image_intervals(curve, j, side):
    """Image of I under t -> gamma'(2^-j t)/gamma'(2^-j), per sign of t."""
    tau0 = 2.0 ** (-_signed_j(j, side))
    g0 = float(curve.d1(tau0))
    out = []
    for sign in (1.0, -1.0):
        t = sign * np.linspace(I_INNER, I_OUTER, 2001)
        vals = np.asarray(curve.d1(tau0 * t), dtype=float) / g0
        out.append((float(np.min(vals)), float(np.max(vals))))
    return out


def _interp_call(x, y):
    order = np.argsort(x)
    xs, ys = x[order], y[order]
    return lambda q, xs=xs, ys=ys: np.interp(q, xs, ys)


def compute_profile_pair(curve, side, j_range, grid_density=400):
    """Build limiting profiles and per-j remainders for one side.

    The reference profile is the closed form when the curve carries one,
    else the profile at the largest tested j. Returns (pair, I_grids,
    J_grids, q_ref_values, r_ref_values).
    """
    curve = curve_for_side(curve, side)
    j_lo, j_hi = int(j_range[0]), int(j_range[1])
    js = list(range(j_lo, j_hi + 1))
    tg_half = np.linspace(I_INNER, I_OUTER, grid_density)
    I_grids = [tg_half, -tg_half[::-1]]

    sjs = {j: _signed_j(j, side) for j in js}
    q_samples = {j: np.concatenate([profile_Q(curve, sjs[j], g) for g in I_grids])
                 for j in js}
    if curve.q_limit is not None:
        q_ref = np.concatenate([np.asarray(curve.q_limit(g), dtype=float)
                                for g in I_grids])
        q_ref_call = curve.q_limit
    else:
        q_ref = q_samples[j_hi]
        q_ref_call = _interp_call(np.concatenate(I_grids), q_ref)

    # J: intersect the per-sign image intervals across tested j
    imgs = [_j_image_intervals(curve, j, side) for j in js]
    J_intervals = []
    for k in range(2):
        lo = max(iv[k][0] for iv in imgs)
        hi = min(iv[k][1] for iv in imgs)
        if hi - lo > 1e-9 * max(1.0, abs(hi)):
            J_intervals.append((lo, hi))

    r_samples = {j: [] for j in js}
    J_grids, r_ref_parts = [], []
    for (lo, hi) in J_intervals:
        sg = np.linspace(lo, hi, grid_density)
        sg = sg[np.abs(sg) > 1e-9]
        J_grids.append(sg)
        for j in js:
            r_samples[j].append(profile_r(curve, sjs[j], sg))
        if curve.r_limit is not None:
            r_ref_parts.append(np.asarray(curve.r_limit(sg), dtype=float))
    if curve.r_limit is not None and J_grids:
        r_ref = np.concatenate(r_ref_parts)
        r_ref_call = curve.r_limit
    elif J_grids:
        r_ref = np.concatenate(r_samples[j_hi])
        r_ref_call = _interp_call(np.concatenate(J_grids), r_ref)
    else:
        r_ref, r_ref_call = np.array([]), None

    Q_rem = {j: (np.concatenate(I_grids), q_samples[j] - q_ref) for j in js}
    r_rem = {j: (np.concatenate(J_grids) if J_grids else np.array([]),
                 (np.concatenate(r_samples[j]) - r_ref) if J_grids
                 else np.array([]))
             for j in js}
    pair = ProfilePair(Q=q_ref_call, r=r_ref_call,
                       I_intervals=[(I_INNER, I_OUTER), (-I_OUTER, -I_INNER)],
                       J_intervals=J_intervals, Q_rem=Q_rem, r_rem=r_rem,
                       reference_j=j_hi)
    return pair, I_grids, J_grids, q_ref, r_ref


def _aj_passes(a, thresholds):
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return False
    if np.max(a) <= thresholds["aj_atol"]:
        return True
    wig = thresholds["aj_wiggle"]
    if np.any(a[1:] > wig * a[:-1] + thresholds["aj_atol"]):
        return False
    octaves = len(a) - 1
    return a[-1] <= thresholds["aj_factor_per_octave"] ** octaves * a[0] \
        + thresholds["aj_atol"]


def check_nonflat(curve, side, j_range, grid_density=400, thresholds=None):
    """Certify the non-flatness conditions on one side over a j range.

    Reports the variation count, the remainder sup-norm table a_j, the
    curvature constant c_gamma (min of inf |Q''| on I, inf |r'| on J, and the
    pairwise difference-quotient infimum of t r'(t) on the J grid), and the
    convexity-transfer infimum. Failures are reported per condition.
    """
    curve = curve_for_side(curve, side)
    th = dict(DEFAULT_THRESHOLDS)
    if thresholds:
        th.update(thresholds)
    j_lo, j_hi = int(j_range[0]), int(j_range[1])
    notes = []

    inversion_ok = True
    try:
        pair, I_grids, J_grids, q_ref, r_ref = compute_profile_pair(
            curve, side, j_range, grid_density)
    except (MonotonicityError, RangeError) as exc:
        notes.append(f"inverse profile unavailable: {exc}")
        inversion_ok = False
        pair, J_grids, r_ref = None, [], np.array([])
        tg_half = np.linspace(I_INNER, I_OUTER, grid_density)
        I_grids = [tg_half, -tg_half[::-1]]
        if curve.q_limit is not None:
            q_ref = np.concatenate([np.asarray(curve.q_limit(g), dtype=float)
                                    for g in I_grids])
        else:
            q_ref = np.concatenate(
                [profile_Q(curve, _signed_j(j_hi, side), g) for g in I_grids])

    # curvature infima from the reference profiles
    h_t = I_grids[0][1] - I_grids[0][0]
    q_parts = np.split(q_ref, [len(I_grids[0])])
    inf_qdd = min(float(np.min(np.abs(_five_point_d2(p, h_t)))) for p in q_parts)

    inf_rd, pair_inf = 0.0, 0.0
    if inversion_ok and J_grids:
        r_parts = np.split(r_ref, np.cumsum([len(g) for g in J_grids])[:-1])
        rd_abs, s_mid, rd_mid = [], [], []
        for g, rv in zip(J_grids, r_parts):
            h_s = g[1] - g[0]
            rd = _five_point_d1(rv, h_s)
            rd_abs.append(np.abs(rd))
            s_mid.append(g[2:-2])
            rd_mid.append(rd)
        inf_rd = float(min(np.min(v) for v in rd_abs))
        s_all = np.concatenate(s_mid)
        h_all = s_all * np.concatenate(rd_mid)
        ds = np.abs(s_all[:, None] - s_all[None, :])
        dh = np.abs(h_all[:, None] - h_all[None, :])
        mask = ds > 1e-9
        pair_inf = float(np.min(dh[mask] / ds[mask]))

    c_gamma = min(inf_qdd, inf_rd, pair_inf)

    # remainder table
    a_j = {}
    for j in range(j_lo, j_hi + 1):
        if pair is not None:
            supQ = float(np.max(np.abs(pair.Q_rem[j][1])))
            supR = float(np.max(np.abs(pair.r_rem[j][1]))) if \
                pair.r_rem[j][1].size else 0.0
        else:
            qj = np.concatenate(
                [profile_Q(curve, _signed_j(j, side), g) for g in I_grids])
            supQ = float(np.max(np.abs(qj - q_ref)))
            supR = 0.0
        a_j[j] = {"sup_Q": supQ, "sup_r": supR, "a": max(supQ, supR)}
    ref_is_sampled = (curve.q_limit is None) or (
        inversion_ok and J_grids and curve.r_limit is None)
    decay_js = [j for j in sorted(a_j) if not (ref_is_sampled and j == j_hi)]
    a_seq = [a_j[j]["a"] for j in decay_js]

    variation = check_variation(curve, max(20, j_hi), side=side)
    convtr = check_convtr(curve, side)

    flags = {
        "variation": variation <= th["variation_cap"],
        "aj_decay": _aj_passes(a_seq, th),
        "c_gamma": c_gamma >= th["c_gamma"],
        "convtr": convtr >= th["convtr"],
    }
    if not inversion_ok:
        flags["c_gamma"] = False
    return NonFlatReport(
        side=side, variation_max=variation, a_j_table=a_j, c_gamma=c_gamma,
        convtr_inf=convtr, passes=all(flags.values()), flags=flags,
        thresholds=th, j_range=(j_lo, j_hi),
        components={"inf_Qdd": inf_qdd, "inf_rd": inf_rd,
                    "pair_quotient": pair_inf},
        notes=notes)


# ---------------------------------------------------------------------------
# registry of analytic curves


def _parity_wrap(f, order):
    """Extend a positive-branch evaluator of an even curve to signed t."""
    flip = (order % 2 == 1)
    def wrapped(t, f=f, flip=flip):
        t = np.asarray(t, dtype=float)
        v = np.asarray(f(np.abs(t)), dtype=float)
        return np.sign(t) * v if flip else v
    return wrapped


def _zeros_like(t):
    return np.zeros_like(np.asarray(t, dtype=float))


def _monomial(d):
    d = int(d)
    if d < 2:
        raise DomainError("monomial degree must be >= 2")
    evals = []
    for order in range(5):
        c = 1.0
        for i in range(order):
            c *= (d - i)
        p = d - order
        if c == 0.0:
            evals.append(_zeros_like)
        else:
            evals.append(lambda t, c=c, p=p: c * np.asarray(t, dtype=float) ** p)
    inv_pow = 1.0 / (d - 1)
    signed_r = ((d - 1) % 2 == 1)
    def r_lim(s):
        s = np.asarray(s, dtype=float)
        mag = np.abs(s) ** inv_pow
        if signed_r:
            return np.sign(s) * mag
        # gamma' is even here, so negative targets have no preimage
        return np.where(s >= 0, mag, np.nan)
    cap = 10.0 ** (280.0 / d)
    return Curve(
        name=f"monomial:{d}",
        eval=evals[0], d1=evals[1], d2=evals[2], d3=evals[3], d4=evals[4],
        side_validity={"origin": (0.0, cap), "infinity": (1.0 / cap, cap)},
        q_limit=lambda t: np.asarray(t, dtype=float) ** d / d,
        r_limit=r_lim,
        meta={"kind": "monomial", "d": d})


def _laurent(terms):
    terms = {int(p): float(c) for p, c in terms.items() if c != 0.0}
    if not terms or any(p == 0 for p in terms):
        raise DomainError("laurent curve needs nonzero, nonconstant terms")

    def deriv_terms(order):
        out = {}
        for p, c in terms.items():
            cc, pp = c, p
            for _ in range(order):
                cc *= pp
                pp -= 1
            if cc != 0.0:
                out[pp] = out.get(pp, 0.0) + cc
        return out

    def make_eval(tbl):
        if not tbl:
            return _zeros_like
        def f(t, tbl=tbl):
            t = np.asarray(t, dtype=float)
            out = np.zeros_like(t)
            for p, c in tbl.items():
                out = out + c * t ** p
            return out
        return f

    evs = [make_eval(deriv_terms(k)) for k in range(5)]

    # positive roots of gamma' and gamma'' bound the monotone windows
    roots = []
    for k in (1, 2):
        tbl = deriv_terms(k)
        if not tbl:
            continue
        pmin = min(tbl)
        shift = -pmin if pmin < 0 else 0
        coeffs = np.zeros(max(tbl) + shift + 1)
        for p, c in tbl.items():
            coeffs[p + shift] = c
        if np.count_nonzero(coeffs) > 1:
            rts = np.polynomial.polynomial.polyroots(coeffs)
            roots.extend(float(r.real) for r in rts
                         if abs(r.imag) < 1e-9 and r.real > 1e-12)
    pmax = max(abs(p) for p in terms)
    cap = 10.0 ** (280.0 / pmax)
    if roots:
        validity = {"origin": (0.0, min(roots) / 2.0),
                    "infinity": (2.0 * max(roots), cap)}
    else:
        validity = {"origin": (0.0, cap), "infinity": (1.0 / cap, cap)}

    def q_for(d_eff):
        if d_eff == 1:
            return lambda t: np.asarray(t, dtype=float)
        return lambda t, d=d_eff: np.asarray(t, dtype=float) ** d / d

    def r_for(d_eff):
        if d_eff == 1:
            return None
        inv_pow = 1.0 / (d_eff - 1)
        signed = ((d_eff - 1) % 2 == 1)
        def r_lim(s, inv_pow=inv_pow, signed=signed):
            s = np.asarray(s, dtype=float)
            mag = np.abs(s) ** inv_pow
            if signed:
                return np.sign(s) * mag
            return np.where(s >= 0, mag, np.nan)
        return r_lim

    d_origin, d_inf = min(terms), max(terms)
    name = "laurent:" + ",".join(f"{terms[p]:g}@{p}" for p in sorted(terms))
    return Curve(
        name=name, eval=evs[0], d1=evs[1], d2=evs[2], d3=evs[3], d4=evs[4],
        side_validity=validity,
        meta={"kind": "laurent", "terms": terms,
              "d_eff": {"origin": d_origin, "infinity": d_inf},
              "q_limit_by_side": {"origin": q_for(d_origin),
                                  "infinity": q_for(d_inf)},
              "r_limit_by_side": {"origin": r_for(d_origin),
                                  "infinity": r_for(d_inf)}})


def _powerlog(alpha, beta):
    alpha, beta = float(alpha), float(beta)
    if alpha in (0.0, 1.0):
        raise DomainError("powerlog exponent alpha must avoid 0 and 1")
    # gamma^(n)(t) = t^(alpha-n) sum_k b_k sigma^k u^(beta-k), u = |log t|
    tables = [{0: 1.0}]
    for n in range(4):
        a = alpha - n
        nxt = {}
        for k, c in tables[-1].items():
            nxt[k] = nxt.get(k, 0.0) + a * c
            nxt[k + 1] = nxt.get(k + 1, 0.0) + (beta - k) * c
        tables.append(nxt)

    def make_eval(n):
        tbl = {k: c for k, c in tables[n].items() if c != 0.0}
        a = alpha - n
        def f(tau, tbl=tbl, a=a):
            tau = np.asarray(tau, dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                lt = np.log(tau)
                sigma = np.where(lt >= 0, 1.0, -1.0)
                u = np.abs(lt)
                acc = np.zeros_like(tau)
                for k, c in tbl.items():
                    term = c * sigma**k if k else c
                    acc = acc + term * (u ** (beta - k) if (beta - k) else 1.0)
                return np.where(tau > 0, tau**a * acc, 0.0)
        return f

    branch = [make_eval(n) for n in range(5)]
    if beta == 0.0:
        cap = 10.0 ** (280.0 / max(alpha, 1.0))
        validity = {"origin": (0.0, cap), "infinity": (1.0 / cap, cap)}
    else:
        # keep u away from zeros of the first two derivative factors
        u_star = 2.0
        ug = np.linspace(0.05, 60.0, 24001)
        for n in (1, 2):
            for sigma in (1.0, -1.0):
                acc = np.zeros_like(ug)
                for k, c in tables[n].items():
                    if c != 0.0:
                        acc += c * sigma**k * ug ** (beta - k)
                sgn = np.sign(acc)
                flips = np.nonzero(sgn[1:] * sgn[:-1] < 0)[0]
                if flips.size:
                    u_star = max(u_star, float(ug[flips[-1] + 1]))
        cap = math.exp(min(690.0 / max(alpha, 1.0), 690.0))
        validity = {"origin": (0.0, math.exp(-1.5 * u_star)),
                    "infinity": (math.exp(1.5 * u_star), cap)}

    inv_pow = 1.0 / (alpha - 1.0)
    def r_lim(s):
        s = np.asarray(s, dtype=float)
        return np.sign(s) * np.abs(s) ** inv_pow
    return Curve(
        name=f"powerlog:{alpha:g}:{beta:g}",
        eval=_parity_wrap(branch[0], 0),
        d1=_parity_wrap(branch[1], 1),
        d2=_parity_wrap(branch[2], 2),
        d3=_parity_wrap(branch[3], 3),
        d4=_parity_wrap(branch[4], 4),
        side_validity=validity,
        q_limit=(lambda t: np.abs(np.asarray(t, dtype=float)) ** alpha / alpha)
        if beta == 0.0 else None,
        r_limit=r_lim if beta == 0.0 else None,
        meta={"kind": "powerlog", "alpha": alpha, "beta": beta})


def _linear():
    return Curve(
        name="linear",
        eval=lambda t: np.asarray(t, dtype=float),
        d1=lambda t: np.ones_like(np.asarray(t, dtype=float)),
        d2=_zeros_like, d3=_zeros_like, d4=_zeros_like,
        side_validity={"origin": (0.0, 1e100), "infinity": (1e-100, 1e100)},
        q_limit=lambda t: np.asarray(t, dtype=float),
        meta={"kind": "linear"})


def _exp_curve():
    # even extension keeps both signed branches numerically sane; failure of
    # the class conditions shows up exactly as for e^t on the positive branch
    e = lambda tau: np.exp(np.asarray(tau, dtype=float))
    return Curve(
        name="exp",
        eval=_parity_wrap(e, 0),
        d1=_parity_wrap(e, 1),
        d2=_parity_wrap(e, 2),
        d3=_parity_wrap(e, 3),
        d4=_parity_wrap(e, 4),
        side_validity={"infinity": (0.1, 650.0)},
        meta={"kind": "exp"})


def make_curve(spec):
    """Build a registry curve from a spec string.

    Formats: "monomial:d", "laurent:c@p,c@p,...", "powerlog:alpha:beta",
    "linear", "exp".
    """
    parts = str(spec).strip().split(":")
    kind = parts[0]
    try:
        if kind == "monomial":
            return _monomial(parts[1])
        if kind == "laurent":
            terms = {}
            for item in parts[1].split(","):
                c, p = item.split("@")
                terms[int(p)] = terms.get(int(p), 0.0) + float(c)
            return _laurent(terms)
        if kind == "powerlog":
            return _powerlog(parts[1], parts[2])
        if kind == "linear":
            return _linear()
        if kind == "exp":
            return _exp_curve()
    except (IndexError, ValueError) as exc:
        raise DomainError(f"malformed curve spec {spec!r}: {exc}") from exc
    raise DomainError(f"unknown curve spec {spec!r}")


def curve_for_side(curve, side):
    """Return the curve with side-dependent limits resolved (laurent case)."""
    qd = curve.meta.get("q_limit_by_side")
    rd = curve.meta.get("r_limit_by_side")
    if qd is None and rd is None:
        return curve
    return Curve(
        name=curve.name, eval=curve.eval, d1=curve.d1, d2=curve.d2,
        d3=curve.d3, d4=curve.d4, side_validity=curve.side_validity,
        q_limit=qd[side] if qd else curve.q_limit,
        r_limit=rd[side] if rd else curve.r_limit,
        meta={k: v for k, v in curve.meta.items()
              if k not in ("q_limit_by_side", "r_limit_by_side")})
