"""Empirical wavelet coefficients, sample variances, and the pointwise
spectral-density estimator with confidence intervals.

Plain mode analyzes with psi((t - b)/a) and estimates the coefficient
variance I_1(a); rescaled mode analyzes with psi_lam(xi (t - b)) and turns the
same sample variance into a pointwise estimate of f(xi).  Both modes reduce
every interval integral to two antiderivative lookups, windowed to the
observations inside the tabulated support (skipped terms are exactly zero).

Normalization of the rescaled estimator: the coefficient-variance limit is
f(xi) * int |psi_hat|^2, so

    f_hat(xi) = xi / int|psi_hat|^2 * mean_k |inner sum|^2 .

Under Plancherel int|psi_hat|^2 = 2 pi ||psi||^2, and unbiasedness against
the closed-form Ornstein-Uhlenbeck density pins this reading (see the
calibration test).
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad
from scipy.stats import norm

from ._kernels import coeff_sums
from .errors import DomainError, MarginError
from .processes import ObservedPath
from .sampling import ShiftFamily
from .wavelet import MotherWavelet, RescaledWavelet, eval_psi_hat

MIN_OBSERVATIONS = 16


@dataclass
class CoeffRequest:
    """One coefficient evaluation: mode, scale (or frequency), shift."""

    b: float
    mode: str = "plain"
    a: Optional[float] = None
    xi: Optional[float] = None

    def __post_init__(self):
        if self.mode not in ("plain", "rescaled"):
            raise DomainError(f"unknown mode {self.mode!r}")
        if self.mode == "plain":
            if self.a is None or self.a <= 0.0:
                raise DomainError("plain mode needs a scale a > 0")
        else:
            if self.xi is None or self.xi <= 0.0:
                raise DomainError("rescaled mode needs a frequency xi > 0")


def _wavelet_pieces(wav, req):
    """(q, table, x0, step, radius, scale_factor) for the kernel call."""
    if req.mode == "plain":
        if not isinstance(wav, MotherWavelet):
            raise DomainError("plain mode requires a MotherWavelet")
        q = 1.0 / req.a
        return (q, wav.Psi_table, -wav.time_radius, wav.time_step,
                req.a * wav.time_radius, np.sqrt(req.a))
    if not isinstance(wav, RescaledWavelet):
        raise DomainError("rescaled mode requires a RescaledWavelet")
    radius = wav.lam * wav.base.time_radius / req.xi
    return (req.xi, wav.Phi_table, wav.x_min, wav.grid_step, radius, 1.0 / req.xi)


def _check_shift(path, req, radius, strict_support):
    T = path.grid.T_n
    if not 0.0 <= req.b <= T:
        raise MarginError(f"shift b = {req.b:.4g} outside the record [0, {T:.4g}]")
    if strict_support and (req.b - radius < 0.0 or req.b + radius > T):
        raise MarginError(
            f"wavelet support [b - {radius:.3g}, b + {radius:.3g}] sticks out of "
            f"[0, {T:.4g}]; the coefficient would be boundary-contaminated")


def empirical_coeff(path, wav, req, strict_support=False):
    """Empirical coefficient from the observed samples.

    Plain mode returns e_X(a, b) = (1/sqrt a) sum_i X(t_i) int_i psi((t-b)/a);
    rescaled mode returns the estimator's inner sum
    sum_i X(t_i) int_i psi_lam(xi (t - b)) with no 1/sqrt(a) prefactor (the
    caller's normalization accounts for it).
    """
    if path.grid.n < MIN_OBSERVATIONS:
        raise DomainError(f"need at least {MIN_OBSERVATIONS} observations")
    q, table, x0, step, radius, scale = _wavelet_pieces(wav, req)
    _check_shift(path, req, radius, strict_support)
    s = coeff_sums(path.times, path.values, q, np.array([req.b]), table, x0, step,
                   radius=radius)[0]
    return complex(scale * s)


def continuous_coeff_oracle(path, wav, req):
    """Reference coefficient from the fine-grid companion by trapezoid rule.

    Plain mode computes d_X(a, b) = (1/sqrt a) int psi((t-b)/a) X(t) dt over
    the recorded window; rescaled mode the continuous inner sum
    int psi_lam(xi (t-b)) X(t) dt.  Independent of the antiderivative-table
    route: the integrand is evaluated pointwise.
    """
    if path.fine_values is None:
        raise DomainError("oracle needs a path with a fine-grid companion")
    q, _, _, _, radius, scale = _wavelet_pieces(wav, req)
    _check_shift(path, req, radius, strict_support=False)
    base = wav if req.mode == "plain" else wav.base
    if path.fine_step > base.time_step / (4.0 * q):
        raise DomainError(
            f"fine step {path.fine_step:.3g} too coarse for the oracle at this scale")
    tf = path.fine_times()
    lo, hi = np.searchsorted(tf, [req.b - radius, req.b + radius])
    lo = max(lo - 1, 0)
    sl = slice(lo, min(hi + 1, tf.size))
    if req.mode == "plain":
        kern = wav.eval_psi((tf[sl] - req.b) / req.a)
        return complex(np.trapezoid(kern * path.fine_values[sl], dx=path.fine_step)
                       / np.sqrt(req.a))
    kern = wav.eval_psi_lambda(req.xi * (tf[sl] - req.b))
    return complex(np.trapezoid(kern * path.fine_values[sl], dx=path.fine_step))


def _coeff_sums_over_shifts(path, wav, mode, a, xi, shifts, stride=1,
                            strict_support=False):
    if path.grid.n < MIN_OBSERVATIONS:
        raise DomainError(f"need at least {MIN_OBSERVATIONS} observations")
    cs = shifts.shifts if isinstance(shifts, ShiftFamily) else np.asarray(shifts, float)
    if stride > 1:
        cs = cs[::stride]
    req = CoeffRequest(b=float(cs[0]), mode=mode, a=a, xi=xi)
    q, table, x0, step, radius, scale = _wavelet_pieces(wav, req)
    T = path.grid.T_n
    if cs.min() < 0.0 or cs.max() > T:
        k = int(np.argmax((cs < 0.0) | (cs > T)))
        raise MarginError(f"shift index {k} (c = {cs[k]:.4g}) outside the record")
    if strict_support and (cs.min() - radius < 0.0 or cs.max() + radius > T):
        raise MarginError("wavelet support exceeds the record at the extreme shifts")
    sums = coeff_sums(path.times, path.values, q, cs, table, x0, step, radius=radius)
    return sums, scale, cs


def sample_variance_J(path, shifts, wav, a=None, xi=None, mode="plain", stride=1,
                      strict_support=False):
    """Sample variance J = mean_k |coefficient(c_k)|^2.

    Plain mode estimates I_1(a); rescaled mode returns the raw mean of the
    squared inner sums that estimate_f rescales into a density value.
    stride decimates the shift family (uniform spacing is preserved).
    """
    sums, scale, _ = _coeff_sums_over_shifts(path, wav, mode, a, xi, shifts,
                                             stride, strict_support)
    return float(np.mean(np.abs(scale * sums) ** 2))


@dataclass
class FrequencyEstimate:
    xi: float
    f_hat: float
    ci_halfwidth: float
    level: float
    lam: float
    T_n: float
    n: int
    n_shifts: int
    normalization: float


def check_frequency_margins(xi, path, resc, strict_support=False, shifts=None):
    """Raise MarginError for frequencies the record cannot support.

    Requires at least half an oscillation across the record (xi * T_n >= pi;
    the reference experiments run down to ~0.75 cycles) and an oscillation
    resolvable at the mean sampling step (xi * mean dt <= pi).  With
    strict_support=True the full tabulated support lam*R/xi must also fit
    inside [0, T_n] around every shift, which the asymptotic theory assumes
    but finite records at the experiment sizes never satisfy.
    """
    T = path.grid.T_n
    if xi <= 0.0:
        raise DomainError("need frequency xi > 0")
    if xi * T < np.pi:
        raise MarginError(
            f"frequency {xi:.4g} rad/s below the record resolution pi/T = "
            f"{np.pi / T:.4g}")
    mean_dt = T / path.grid.n
    if xi * mean_dt > np.pi:
        raise MarginError(
            f"frequency {xi:.4g} rad/s beyond the mean-spacing limit pi/dt = "
            f"{np.pi / mean_dt:.4g}")
    if strict_support:
        rad = resc.lam * resc.base.time_radius / xi
        cs = shifts.shifts if isinstance(shifts, ShiftFamily) else np.asarray(shifts)
        if cs.min() - rad < 0.0 or cs.max() + rad > T:
            raise MarginError(
                f"support half-width {rad:.4g} at frequency {xi:.4g} exceeds the "
                "shift margins")


def estimate_f(path, xi, resc, shifts, level=0.95, stride=1, strict_support=False):
    """Pointwise density estimate with a plug-in normal confidence interval.

    f_hat = xi/N * mean_k |inner sum|^2 with N = int |psi_hat|^2; the CI
    half-width is z * f_hat * sqrt((4 pi / xi) * Q * lam / T_n) with
    Q = int|psi_hat|^4 / (int|psi_hat|^2)^2, the plug-in form of the
    estimator's limit variance with the realized record length.
    """
    if not 0.0 <= level < 1.0:
        raise DomainError(f"confidence level {level} outside [0, 1)")
    check_frequency_margins(xi, path, resc, strict_support, shifts)
    sums, _, cs = _coeff_sums_over_shifts(path, resc, "rescaled", None, xi, shifts,
                                          stride, strict_support)
    base = resc.base
    nrm = base.int_psihat_sq
    f_hat = float(xi * np.mean(np.abs(sums / xi) ** 2) / nrm)
    qual = base.int_psihat_4 / base.int_psihat_sq ** 2
    z = norm.ppf(0.5 * (1.0 + level))
    half = float(z * f_hat * np.sqrt((4.0 * np.pi / xi) * qual * resc.lam
                                     / path.grid.T_n))
    return FrequencyEstimate(xi=float(xi), f_hat=f_hat, ci_halfwidth=half,
                             level=level, lam=resc.lam, T_n=path.grid.T_n,
                             n=path.grid.n, n_shifts=int(cs.size),
                             normalization=float(nrm))


@dataclass
class EstimateResult:
    """Estimated density curve; failed frequencies carry NaN and a message."""

    frequencies: np.ndarray
    f_hat: np.ndarray
    ci_halfwidths: np.ndarray
    level: float
    lambda_n: float
    T_n: float
    n: int
    normalization: float
    unit: str = "rad/s"
    errors: list = field(default_factory=list)

    @property
    def ok(self):
        return np.isfinite(self.f_hat)

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("xi,f_hat,ci_lo,ci_hi,error\n")
            for k, xi in enumerate(self.frequencies):
                err = self.errors[k] or ""
                if np.isfinite(self.f_hat[k]):
                    lo = self.f_hat[k] - self.ci_halfwidths[k]
                    hi = self.f_hat[k] + self.ci_halfwidths[k]
                    fh.write(f"{xi:.17g},{self.f_hat[k]:.17g},{lo:.17g},{hi:.17g},{err}\n")
                else:
                    fh.write(f"{xi:.17g},nan,nan,nan,{err}\n")

    @classmethod
    def from_csv(cls, path, **meta):
        rows = np.genfromtxt(path, delimiter=",", names=True,
                             dtype=None, encoding="utf-8", usecols=(0, 1, 2, 3))
        xi = np.atleast_1d(rows["xi"]).astype(float)
        fh = np.atleast_1d(rows["f_hat"]).astype(float)
        lo = np.atleast_1d(rows["ci_lo"]).astype(float)
        half = np.where(np.isfinite(fh), fh - lo, np.nan)
        meta.setdefault("level", 0.95)
        meta.setdefault("lambda_n", np.nan)
        meta.setdefault("T_n", np.nan)
        meta.setdefault("n", 0)
        meta.setdefault("normalization", np.nan)
        return cls(frequencies=xi, f_hat=fh, ci_halfwidths=half,
                   errors=[None] * xi.size, **meta)

    def to_json(self, path=None):
        payload = {
            "unit": self.unit,
            "level": self.level,
            "lambda_n": self.lambda_n,
            "T_n": self.T_n,
            "n": self.n,
            "normalization": self.normalization,
            "frequencies": self.frequencies.tolist(),
            "f_hat": [v if np.isfinite(v) else None for v in self.f_hat],
            "ci_halfwidths": [v if np.isfinite(v) else None for v in self.ci_halfwidths],
            "errors": self.errors,
        }
        text = json.dumps(payload, indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def estimate_curve(path, frequencies, resc, shifts, level=0.95, stride=1,
                   strict_support=False, threads=1):
    """estimate_f over a frequency grid; per-frequency errors are collected."""
    freqs = np.asarray(frequencies, dtype=float)
    f_hat = np.full(freqs.size, np.nan)
    halfs = np.full(freqs.size, np.nan)
    errors: list = [None] * freqs.size

    def run(k):
        try:
            est = estimate_f(path, freqs[k], resc, shifts, level=level,
                             stride=stride, strict_support=strict_support)
            return k, est.f_hat, est.ci_halfwidth, None
        except (DomainError, MarginError) as exc:
            return k, np.nan, np.nan, str(exc)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, range(freqs.size)))
    else:
        results = [run(k) for k in range(freqs.size)]
    for k, fh, hw, err in results:
        f_hat[k], halfs[k], errors[k] = fh, hw, err
    return EstimateResult(frequencies=freqs, f_hat=f_hat, ci_halfwidths=halfs,
                          level=level, lambda_n=resc.lam, T_n=path.grid.T_n,
                          n=path.grid.n, normalization=resc.base.int_psihat_sq,
                          errors=errors)


# ---------------------------------------------------------------------------
# variance diagnostics


def _spectral_window(a, mode, wavelet, resc):
    """Integration band and kernel K(u) with K(u) = |analyzer_hat(a u)|^2."""
    lam_supp = wavelet.spectral_support
    if mode == "plain":
        hi = lam_supp / a

        def kern(u):
            return eval_psi_hat(a * u, lam_supp) ** 2

        return -hi, hi, kern
    lam = resc.lam
    lo = (1.0 - lam_supp / lam) / a
    hi = (1.0 + lam_supp / lam) / a

    def kern(u):
        return lam * eval_psi_hat(lam * (a * u - 1.0), lam_supp) ** 2

    return lo, hi, kern


@dataclass
class VarianceDiagnostics:
    finite_n: float
    limit: float
    window: float  # realized c_n - c_0


def variance_Sn(shifts, a, model, wavelet, mode="plain", resc=None,
                method="toeplitz", nodes=4096):
    """Finite-n variance S_n^2(a) of the sample variance, and its limit.

    S_n^2(a) = (2 a^2/(n+1)^2) sum_{k,l} |gamma~(c_k - c_l)|^2 with
    gamma~(theta) = int e^{i theta u} |analyzer_hat(a u)|^2 f(u) du, evaluated
    on the uniform shift spacing (n+1 kernel transforms via the Toeplitz
    structure; method="brute" does the full double sum for cross-checks).
    The limit is 4 pi a^2 int |analyzer_hat(a z)|^4 f^2(z) dz, normalized so
    (c_n - c_0) * S_n^2 converges to it.
    """
    if a <= 0.0:
        raise DomainError("need scale a > 0")
    if mode == "rescaled" and resc is None:
        raise DomainError("rescaled mode needs the rescaled wavelet")
    cs = shifts.shifts if isinstance(shifts, ShiftFamily) else np.asarray(shifts, float)
    m = cs.size
    lo, hi, kern = _spectral_window(a, mode, wavelet, resc)

    y, w = leggauss(nodes)
    u = 0.5 * (hi - lo) * y + 0.5 * (hi + lo)
    wq = 0.5 * (hi - lo) * w
    F = kern(u) * wq
    nz = F != 0.0  # never evaluate a power-law density where the window is dead
    F[nz] *= model.density(u[nz])

    if method == "brute":
        th = cs[:, None] - cs[None, :]
        gam = np.exp(1j * th.reshape(-1, 1) * u[None, :]) @ F
        total = float(np.sum(np.abs(gam) ** 2))
    else:
        lags = cs - cs[0]
        gam = np.exp(1j * np.outer(lags, u)) @ F
        counts = m - np.arange(m)
        g2 = np.abs(gam) ** 2
        total = float(m * g2[0] + 2.0 * np.sum(counts[1:] * g2[1:]))
    finite = 2.0 * a ** 2 * total / m ** 2

    def limit_integrand(z):
        k = float(kern(np.asarray([z]))[0])
        if k == 0.0:
            return 0.0
        return k * k * float(model.density(z)) ** 2

    limit_val = 4.0 * np.pi * a ** 2 * quad(limit_integrand, lo, hi, epsabs=0.0,
                                            epsrel=1e-8, limit=500)[0]
    return VarianceDiagnostics(finite_n=float(finite), limit=float(limit_val),
                               window=float(cs[-1] - cs[0]))


@dataclass
class ScaleSpectrum:
    """J(a) across scales, with the matching asymptotic variances when a
    model oracle was supplied."""

    scales: np.ndarray
    J: np.ndarray
    asym_var: Optional[np.ndarray] = None  # 4 pi a^2 int |psi_hat(az)|^4 f^2

    def to_csv(self, path):
        var = self.asym_var if self.asym_var is not None \
            else np.full(self.scales.size, np.nan)
        np.savetxt(path, np.column_stack([self.scales, self.J, var]),
                   delimiter=",", header="a,J,var", comments="", fmt="%.17g")


def scale_spectrum(path, shifts, wavelet, scales, model=None, stride=1):
    """Sample variances over a scale grid (plain mode), J >= 0 each.

    With a model supplied, the matching CLT variances
    4 pi a^2 int |psi_hat(a z)|^4 f^2(z) dz are attached.
    """
    scales = np.asarray(scales, dtype=float)
    js = np.array([sample_variance_J(path, shifts, wavelet, a=a, stride=stride)
                   for a in scales])
    var = None
    if model is not None:
        var = np.array([variance_Sn(shifts, a, model, wavelet).limit
                        for a in scales])
    return ScaleSpectrum(scales=scales, J=js, asym_var=var)


@dataclass
class DiscretizationReport:
    per_shift: np.ndarray
    mean_sq_error: float
    scaled: float  # (n delta_n) * mean
    n: int
    delta_n: float


def discretization_error_report(path, wav, shifts, a=None, xi=None, mode="plain"):
    """Per-shift |d_X - e_X|^2 between the fine-grid oracle and the empirical
    coefficient, its mean, and the (n delta_n)-scaled mean whose decay is the
    operative discretization-error guarantee."""
    cs = shifts.shifts if isinstance(shifts, ShiftFamily) else np.asarray(shifts, float)
    errs = np.empty(cs.size)
    for k, b in enumerate(cs):
        req = CoeffRequest(b=float(b), mode=mode, a=a, xi=xi)
        d = continuous_coeff_oracle(path, wav, req)
        e = empirical_coeff(path, wav, req)
        errs[k] = abs(d - e) ** 2
    mean = float(np.mean(errs))
    n = path.grid.n
    return DiscretizationReport(per_shift=errs, mean_sq_error=mean,
                                scaled=float(n * path.grid.delta_n * mean),
                                n=n, delta_n=path.grid.delta_n)
