"""Windowed coefficient kernels: numba-accelerated with a pure-numpy fallback.

Both backends compute, for each shift c_k,

    S_k = sum_{i=lo_k}^{hi_k - 1} X_i * [T(q (t_{i+1} - c_k)) - T(q (t_i - c_k))]

where T is a tabulated antiderivative on a uniform grid (clamped to its
boundary values outside the table) and q is 1/a in plain mode or xi in
rescaled mode.  Terms whose two arguments clamp to the same side are exactly
zero, so restricting the index range [lo_k, hi_k) to the wavelet support is a
pure optimization.

Numba parallelizes over shifts with a fixed per-shift summation order, so a
given backend is deterministic; the two backends agree to ~1e-13 relative
(summation order differs).  Set IRRSPEC_NO_NUMBA=1 to force the fallback.
"""

import os
import warnings

import numpy as np

HAVE_NUMBA = False
if not os.environ.get("IRRSPEC_NO_NUMBA"):
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            import numba as _nb
        HAVE_NUMBA = True
    except ImportError:
        HAVE_NUMBA = False


def _sums_numpy(times, values, q, shifts, lo, hi, x0, step, table, chunk=64):
    n = times.size - 1
    out = np.zeros(shifts.size, dtype=table.dtype)
    m = table.size
    for s in range(0, shifts.size, chunk):
        cs = shifts[s:s + chunk]
        args = q * (times[None, :] - cs[:, None])
        pos = np.clip((args - x0) / step, 0.0, m - 1.0)
        idx = np.minimum(pos.astype(np.int64), m - 2)
        frac = pos - idx
        vals = table[idx] * (1.0 - frac) + table[idx + 1] * frac
        dv = np.diff(vals, axis=1)
        mask = np.zeros((cs.size, n))
        for j, k in enumerate(range(s, min(s + chunk, shifts.size))):
            mask[j, lo[k]:hi[k]] = 1.0
        out[s:s + chunk] = (dv * mask) @ values[:n]
    return out


if HAVE_NUMBA:

    @_nb.njit(cache=True, inline="always")
    def _lerp(table, x0, step, m, x):
        p = (x - x0) / step
        if p < 0.0:
            p = 0.0
        elif p > m - 1.0:
            p = m - 1.0
        i = int(p)
        if i > m - 2:
            i = m - 2
        f = p - i
        return table[i] * (1.0 - f) + table[i + 1] * f

    @_nb.njit(parallel=True, cache=True)
    def _sums_real_nb(times, values, q, shifts, lo, hi, x0, step, table):
        m = table.size
        out = np.empty(shifts.size)
        for k in _nb.prange(shifts.size):
            c = shifts[k]
            acc = 0.0
            prev = _lerp(table, x0, step, m, q * (times[lo[k]] - c))
            for i in range(lo[k], hi[k]):
                cur = _lerp(table, x0, step, m, q * (times[i + 1] - c))
                acc += values[i] * (cur - prev)
                prev = cur
            out[k] = acc
        return out

    @_nb.njit(parallel=True, cache=True)
    def _sums_complex_nb(times, values, q, shifts, lo, hi, x0, step, tre, tim):
        m = tre.size
        out_re = np.empty(shifts.size)
        out_im = np.empty(shifts.size)
        for k in _nb.prange(shifts.size):
            c = shifts[k]
            acc_re = 0.0
            acc_im = 0.0
            pre = _lerp(tre, x0, step, m, q * (times[lo[k]] - c))
            pim = _lerp(tim, x0, step, m, q * (times[lo[k]] - c))
            for i in range(lo[k], hi[k]):
                cre = _lerp(tre, x0, step, m, q * (times[i + 1] - c))
                cim = _lerp(tim, x0, step, m, q * (times[i + 1] - c))
                acc_re += values[i] * (cre - pre)
                acc_im += values[i] * (cim - pim)
                pre = cre
                pim = cim
            out_re[k] = acc_re
            out_im[k] = acc_im
        return out_re, out_im


def support_window(times, shifts, radius):
    """Index ranges [lo_k, hi_k) of intervals meeting [c_k - radius, c_k + radius].

    Intervals entirely outside the support contribute exact zeros and are
    skipped; straddling intervals are kept.
    """
    lo = np.searchsorted(times[1:], shifts - radius, side="left")
    hi = np.searchsorted(times[:-1], shifts + radius, side="right")
    n = times.size - 1
    return np.clip(lo, 0, n).astype(np.int64), np.clip(hi, 0, n).astype(np.int64)


def coeff_sums(times, values, q, shifts, table, x0, step, radius=None,
               use_numba=None):
    """S_k for every shift; complex when the table is complex.

    radius is the support half-width in the table's argument units divided
    by q (i.e. in time units); None sums over all intervals.
    """
    times = np.ascontiguousarray(times, dtype=float)
    values = np.ascontiguousarray(values, dtype=float)
    shifts = np.ascontiguousarray(shifts, dtype=float)
    n = times.size - 1
    if radius is None:
        lo = np.zeros(shifts.size, dtype=np.int64)
        hi = np.full(shifts.size, n, dtype=np.int64)
    else:
        lo, hi = support_window(times, shifts, radius)
    if use_numba is None:
        use_numba = HAVE_NUMBA
    complex_table = np.iscomplexobj(table)
    if use_numba and HAVE_NUMBA:
        if complex_table:
            re, im = _sums_complex_nb(times, values, float(q), shifts, lo, hi,
                                      float(x0), float(step),
                                      np.ascontiguousarray(table.real),
                                      np.ascontiguousarray(table.imag))
            return re + 1j * im
        return _sums_real_nb(times, values, float(q), shifts, lo, hi,
                             float(x0), float(step), np.ascontiguousarray(table))
    return _sums_numpy(times, values, float(q), shifts, lo, hi, float(x0),
                       float(step), table)
