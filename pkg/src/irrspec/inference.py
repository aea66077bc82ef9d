"""Log-log regression for the roughness index, two-segment fits, band energies.

For a power-law coefficient variance J(a) = K a^{2H+1} the log-log slope on
the scale axis is 2H + 1; on the frequency axis a density C xi^{-(2H+1)} has
slope -(2H + 1).  The two-segment fit scans every admissible breakpoint
between data points and keeps the split minimizing total squared error.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError


@dataclass
class LogLogFit:
    H_hat: float
    C_hat: float          # power-law prefactor exp(intercept)
    slope: float
    intercept: float
    slope_stderr: float
    rss: float
    xs: np.ndarray
    axis: str


def _ols(x, y):
    n = x.size
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    slope = np.sum((x - xm) * (y - ym)) / sxx
    intercept = ym - slope * xm
    resid = y - (intercept + slope * x)
    rss = float(np.sum(resid ** 2))
    stderr = np.sqrt(rss / max(n - 2, 1) / sxx)
    return slope, intercept, rss, stderr


def loglog_fit(xs, ys, axis="scale"):
    """OLS of log ys on log xs, mapped to a roughness index.

    axis="scale": ys are J(a) values and H = (slope - 1)/2.
    axis="frequency": ys are density values and H = (-slope - 1)/2.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size != ys.size:
        raise DomainError("xs and ys must have the same length")
    if xs.size < 3:
        raise DomainError("need at least 3 points for a log-log fit")
    if np.any(ys <= 0.0) or np.any(xs <= 0.0):
        raise DomainError("log-log fit needs strictly positive values")
    if axis not in ("scale", "frequency"):
        raise DomainError(f"unknown axis {axis!r}")
    slope, intercept, rss, stderr = _ols(np.log(xs), np.log(ys))
    H = (slope - 1.0) / 2.0 if axis == "scale" else (-slope - 1.0) / 2.0
    return LogLogFit(H_hat=float(H), C_hat=float(np.exp(intercept)),
                     slope=float(slope), intercept=float(intercept),
                     slope_stderr=float(stderr), rss=rss, xs=xs, axis=axis)


@dataclass
class SegmentFit:
    slope: float
    intercept: float
    rss: float
    n_points: int


@dataclass
class TwoSegmentFit:
    breakpoint: float          # in the x units of exp(log_xs)
    left: SegmentFit
    right: SegmentFit
    total_sse: float
    single_line_sse: float
    split_index: int           # first point of the right segment

    @property
    def sse_ratio(self):
        if self.single_line_sse == 0.0:
            return 1.0 if self.total_sse == 0.0 else np.inf
        return self.total_sse / self.single_line_sse


def two_segment_fit(log_xs, log_ys, min_points_per_side=3):
    """Best pair of regression lines over a breakpoint scan.

    Candidate breakpoints sit between consecutive data points (geometric
    midpoint); each side gets its own OLS line and the split with the
    smallest total squared error wins, ties going to the smaller breakpoint.
    The total error never exceeds the single-line error because the single
    line is a feasible fit on both sides.
    """
    x = np.asarray(log_xs, dtype=float)
    y = np.asarray(log_ys, dtype=float)
    if x.size != y.size:
        raise DomainError("log_xs and log_ys must have the same length")
    if min_points_per_side < 3:
        raise DomainError("need min_points_per_side >= 3")
    if x.size < 2 * min_points_per_side:
        raise DomainError(
            f"need at least {2 * min_points_per_side} points, got {x.size}")
    order = np.argsort(x)
    x, y = x[order], y[order]

    s_slope, s_int, s_rss, _ = _ols(x, y)
    best = None
    for split in range(min_points_per_side, x.size - min_points_per_side + 1):
        lsl, lin, lrss, _ = _ols(x[:split], y[:split])
        rsl, rin, rrss, _ = _ols(x[split:], y[split:])
        total = lrss + rrss
        if best is None or total < best[0] - 1e-15 * (1.0 + abs(best[0])):
            best = (total, split, (lsl, lin, lrss), (rsl, rin, rrss))
    total, split, (lsl, lin, lrss), (rsl, rin, rrss) = best
    bp_log = 0.5 * (x[split - 1] + x[split])
    return TwoSegmentFit(
        breakpoint=float(np.exp(bp_log)),
        left=SegmentFit(float(lsl), float(lin), float(lrss), split),
        right=SegmentFit(float(rsl), float(rin), float(rrss), x.size - split),
        total_sse=float(total),
        single_line_sse=float(s_rss),
        split_index=int(split),
    )


def band_energy(result, band, band_unit="hz"):
    """Trapezoid integral of the estimated density over a frequency band.

    The band may be given in Hz or rad/s; it is converted to the result's
    axis (xi = 2 pi nu) and the integral is taken in that axis's measure.
    Band edges are linearly interpolated so that adjacent bands add exactly.
    """
    lo, hi = float(band[0]), float(band[1])
    if hi < lo:
        raise DomainError("band upper edge below lower edge")
    if band_unit not in ("hz", "rad/s"):
        raise DomainError(f"unknown band unit {band_unit!r}")
    if band_unit != result.unit:
        conv = 2.0 * np.pi if band_unit == "hz" else 1.0 / (2.0 * np.pi)
        lo, hi = lo * conv, hi * conv
    xi = result.frequencies
    fh = result.f_hat
    keep = np.isfinite(fh)
    xi, fh = xi[keep], fh[keep]
    if xi.size < 2:
        raise DomainError("too few valid curve points for a band energy")
    if lo < xi[0] or hi > xi[-1]:
        raise DomainError(
            f"band [{lo:.4g}, {hi:.4g}] ({result.unit}) outside the estimated "
            f"range [{xi[0]:.4g}, {xi[-1]:.4g}]")
    if hi == lo:
        return 0.0
    inner = (xi > lo) & (xi < hi)
    grid = np.concatenate([[lo], xi[inner], [hi]])
    vals = np.interp(grid, xi, fh)
    return float(np.trapezoid(vals, grid))
