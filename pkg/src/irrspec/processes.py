"""Gaussian path simulators, closed-form spectral densities, quadrature oracles.

Models: fractional Brownian motion (stationary increments, power-law
density), the stationary Ornstein-Uhlenbeck process, and multiscale fBm
(piecewise power law).  Simulators draw paths at the irregular grid times;
the oracles integrate the closed-form densities against the wavelet's
spectral window.
"""

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, EmbeddingError, FactorizationError, SizeError
from .sampling import TimeGrid
from .wavelet import eval_psi_hat

FBM_EXACT_CAP = 4096


def fbm_scale_constant(H):
    """Prefactor C(H) = H Gamma(2H) sin(pi H) / pi of the standard-fBm density."""
    return H * math.gamma(2.0 * H) * math.sin(math.pi * H) / math.pi


@dataclass
class Fbm:
    """Standard fBm (E X(1)^2 = 1): f(xi) = C(H) |xi|^{-(2H+1)}."""

    H: float

    def __post_init__(self):
        if not 0.0 < self.H < 1.0:
            raise DomainError(f"Hurst index {self.H} outside (0, 1)")

    kind = "fbm"
    stationary = False

    def density(self, xi):
        xi = np.asarray(xi, dtype=float)
        if np.any(xi == 0.0):
            raise DomainError("power-law density undefined at frequency 0")
        return fbm_scale_constant(self.H) * np.abs(xi) ** (-(2.0 * self.H + 1.0))

    def config(self):
        return {"kind": "fbm", "H": self.H}


@dataclass
class OrnsteinUhlenbeck:
    """Stationary OU with covariance exp(-alpha |t|): f(xi) = alpha / (pi (alpha^2 + xi^2))."""

    alpha: float

    def __post_init__(self):
        if self.alpha <= 0.0:
            raise DomainError("need alpha > 0")

    kind = "ou"
    stationary = True

    def density(self, xi):
        xi = np.asarray(xi, dtype=float)
        return self.alpha / (np.pi * (self.alpha ** 2 + xi ** 2))

    def config(self):
        return {"kind": "ou", "alpha": self.alpha}


@dataclass
class MultiscaleFbm:
    """Piecewise power law: f(xi) = sigma_i |xi|^{-(2 H_i + 1)} on (omega_i, omega_{i+1}).

    breakpoints are the interior frequencies 0 < omega_1 < ... < omega_K;
    exponents and scales have one more entry than breakpoints.  Integrability
    needs H_0 < 1 and H_K > 0; the density may jump at the breakpoints.
    """

    breakpoints: tuple
    exponents: tuple
    scales: tuple

    def __post_init__(self):
        bp = tuple(float(w) for w in self.breakpoints)
        hs = tuple(float(h) for h in self.exponents)
        sc = tuple(float(s) for s in self.scales)
        if len(hs) != len(bp) + 1 or len(sc) != len(bp) + 1:
            raise DomainError("need one more exponent/scale than breakpoints")
        if any(w <= 0 for w in bp) or any(b >= a for a, b in zip(bp[1:], bp[:-1])):
            raise DomainError("breakpoints must be positive and increasing")
        if hs[0] >= 1.0 or hs[-1] <= 0.0:
            raise DomainError("integrability requires H_0 < 1 and H_K > 0")
        if any(s <= 0 for s in sc):
            raise DomainError("scales must be positive")
        self.breakpoints, self.exponents, self.scales = bp, hs, sc

    kind = "multiscale"
    stationary = False

    def density(self, xi):
        xi = np.abs(np.asarray(xi, dtype=float))
        if np.any(xi == 0.0):
            raise DomainError("power-law density undefined at frequency 0")
        edges = np.array((0.0,) + self.breakpoints)
        seg = np.clip(np.searchsorted(edges, xi, side="right") - 1, 0, len(self.exponents) - 1)
        hs = np.asarray(self.exponents)[seg]
        sc = np.asarray(self.scales)[seg]
        return sc * xi ** (-(2.0 * hs + 1.0))

    def config(self):
        return {"kind": "multiscale", "breakpoints": list(self.breakpoints),
                "exponents": list(self.exponents), "scales": list(self.scales)}


def model_from_config(cfg):
    """Inverse of model.config(); accepts a dict or a JSON string."""
    if isinstance(cfg, str):
        cfg = json.loads(cfg)
    kind = cfg.get("kind")
    if kind == "fbm":
        return Fbm(H=float(cfg["H"]))
    if kind == "ou":
        return OrnsteinUhlenbeck(alpha=float(cfg["alpha"]))
    if kind == "multiscale":
        return MultiscaleFbm(tuple(cfg["breakpoints"]), tuple(cfg["exponents"]),
                             tuple(cfg["scales"]))
    raise DomainError(f"unknown model kind {kind!r}")


def eval_f(model, xi):
    """Spectral density of a model; even and nonnegative by construction."""
    return model.density(xi)


@dataclass
class ObservedPath:
    """Values X(t_0)..X(t_n) on an irregular grid, plus an optional fine companion."""

    grid: TimeGrid
    values: np.ndarray
    fine_step: Optional[float] = None
    fine_values: Optional[np.ndarray] = None

    @property
    def times(self):
        return self.grid.times

    def fine_times(self):
        if self.fine_values is None:
            raise DomainError("path has no fine-grid companion")
        return self.fine_step * np.arange(self.fine_values.size)

    def to_csv(self, path):
        np.savetxt(path, np.column_stack([self.grid.times, self.values]),
                   delimiter=",", header="t,x", comments="", fmt="%.17g")


def simulate_ou(alpha, grid, rng):
    """Exact stationary OU draw via the one-step recursion (O(n))."""
    if alpha <= 0.0:
        raise DomainError("need alpha > 0")
    dt = np.diff(grid.times)
    coef = np.exp(-alpha * dt)
    innov = np.sqrt(1.0 - coef ** 2) * rng.standard_normal(dt.size)
    x = np.empty(grid.times.size)
    x[0] = rng.standard_normal()
    for k in range(dt.size):
        x[k + 1] = coef[k] * x[k] + innov[k]
    return ObservedPath(grid=grid, values=x)


def simulate_fbm_exact(H, grid, rng):
    """Exact joint draw at the grid times by Cholesky factorization.

    Cost is cubic in n, so the size is capped at 4096; X(0) = 0 is pinned.
    A single 1e-10 jitter retry covers near-singular Gram matrices from
    tightly clustered random times.
    """
    if not 0.0 < H < 1.0:
        raise DomainError(f"Hurst index {H} outside (0, 1)")
    n = grid.n
    if n > FBM_EXACT_CAP:
        raise SizeError(f"n = {n} above the exact-simulation cap {FBM_EXACT_CAP}")
    tt = grid.times[1:]
    t2h = tt ** (2.0 * H)
    cov = 0.5 * (t2h[:, None] + t2h[None, :]
                 - np.abs(tt[:, None] - tt[None, :]) ** (2.0 * H))
    try:
        factor = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        try:
            factor = np.linalg.cholesky(cov + 1e-10 * np.eye(n))
        except np.linalg.LinAlgError as exc:
            raise FactorizationError("fBm covariance not numerically PSD") from exc
    x = np.concatenate([[0.0], factor @ rng.standard_normal(n)])
    return ObservedPath(grid=grid, values=x)


def _fgn_circulant(M, H, step, rng):
    """Stationary fGn of length M (unit-lag covariance scaled to `step`)."""
    k = np.arange(M, dtype=float)
    r = 0.5 * ((k + 1.0) ** (2 * H) + np.abs(k - 1.0) ** (2 * H) - 2.0 * k ** (2 * H))
    circ = np.concatenate([r, r[-2:0:-1]])
    eig = np.fft.fft(circ).real
    if eig.min() < -1e-8 * eig.max():
        return None
    eig = np.maximum(eig, 0.0)
    z = rng.standard_normal(circ.size) + 1j * rng.standard_normal(circ.size)
    fgn = np.fft.fft(np.sqrt(eig / circ.size) * z).real[:M]
    return fgn * step ** H


def simulate_fbm_fast(H, grid, rng, kappa=8):
    """fBm via circulant embedding on a fine regular grid, nearest-node sampled.

    The fine grid has step delta_n/kappa over [0, T_n]; increments synthesized
    there are exact in law, and mapping each t_k to the nearest node leaves an
    O((delta_n/kappa)^H) value error consistent with the round-off sampling
    model.  The fine path is kept as the companion used by the continuous
    coefficient oracle.
    """
    if not 0.0 < H < 1.0:
        raise DomainError(f"Hurst index {H} outside (0, 1)")
    if kappa < 4:
        raise DomainError("need refinement factor kappa >= 4")
    step = grid.delta_n / kappa
    M = int(np.ceil(grid.T_n / step)) + 1
    fgn = _fgn_circulant(M, H, step, rng)
    if fgn is None:
        fgn = _fgn_circulant(2 * M, H, step, rng)
        if fgn is None:
            raise EmbeddingError("circulant eigenvalues negative even after doubling")
        fgn = fgn[:M]
    fine = np.concatenate([[0.0], np.cumsum(fgn[:-1])])
    idx = np.clip(np.rint(grid.times / step).astype(np.int64), 0, M - 1)
    return ObservedPath(grid=grid, values=fine[idx], fine_step=step, fine_values=fine)


def simulate_multiscale(model, grid, rng, J=1 << 14, omega_cap=1e4):
    """Spectral synthesis over a geometric frequency grid.

    X(t) = sum_j 2 Re[(e^{i t xi_j} - 1) sqrt(f(xi_j) dxi_j) zeta_j] with
    complex standard Gaussians zeta_j; the grid spans [pi/(4 T_n),
    min(4*Lam*15/delta_n, omega_cap)].  X(0) = 0 exactly since every term
    vanishes at t = 0.
    """
    lo = np.pi / (4.0 * grid.T_n)
    hi = min(4.0 * 5.0 * 15.0 / grid.delta_n, omega_cap)
    if hi <= lo:
        raise DomainError("degenerate synthesis frequency range")
    edges = np.geomspace(lo, hi, J + 1)
    mids = 0.5 * (edges[1:] + edges[:-1])
    widths = np.diff(edges)
    zeta = (rng.standard_normal(J) + 1j * rng.standard_normal(J)) / np.sqrt(2.0)
    amp = np.sqrt(model.density(mids) * widths) * zeta
    # chunk over time to bound the (n+1) x J phase matrix
    x = np.empty(grid.times.size)
    chunk = max(1, int(2e7) // J)
    for s in range(0, grid.times.size, chunk):
        tt = grid.times[s:s + chunk]
        phases = np.exp(1j * np.outer(tt, mids)) - 1.0
        x[s:s + chunk] = 2.0 * np.real(phases @ amp)
    return ObservedPath(grid=grid, values=x)


def add_polynomial_trend(path, coefficients):
    """New path with sum_j a_j t^j added to the values."""
    coefficients = np.asarray(coefficients, dtype=float)
    if coefficients.size > 9:
        raise DomainError("trend degree capped at 8 (the verified vanishing moments)")
    trend = np.polynomial.polynomial.polyval(path.grid.times, coefficients)
    return ObservedPath(grid=path.grid, values=path.values + trend,
                        fine_step=path.fine_step, fine_values=path.fine_values)


def _model_breakpoints(model, lo, hi):
    if model.kind != "multiscale":
        return None
    pts = [w for w in model.breakpoints if lo < w < hi]
    return pts or None


def theoretical_I1(model, wavelet, a):
    """Coefficient variance I_1(a) = a * int |psi_hat(a u)|^2 f(u) du.

    Adaptive quadrature on the compact support |a u| < Lam, relative
    accuracy 1e-8.
    """
    if a <= 0.0:
        raise DomainError("need scale a > 0")
    lam = wavelet.spectral_support
    hi = lam / a

    def integrand(u):
        k = eval_psi_hat(a * u, lam) ** 2
        if k == 0.0:
            return 0.0
        return k * float(model.density(u))

    val = quad(integrand, 0.0, hi, epsabs=0.0, epsrel=1e-9, limit=500,
               points=_model_breakpoints(model, 0.0, hi))[0]
    return 2.0 * a * val


def gamma_cov(theta, a1, a2, model, wavelet):
    """Covariance kernel gamma(theta, a1, a2) = int e^{i theta xi} psi_hat(a1 xi)
    psi_hat(a2 xi) f(xi) d xi.

    With the real, even psi_hat the value is real; it is returned as complex
    because cov(d(a1, b1), conj d(a2, b2)) = sqrt(a1 a2) gamma(b2 - b1, a1, a2)
    is complex for general analyzing functions.
    """
    if a1 <= 0.0 or a2 <= 0.0:
        raise DomainError("need positive scales")
    lam = wavelet.spectral_support
    hi = lam / max(a1, a2)

    def base(u):
        k = eval_psi_hat(a1 * u, lam) * eval_psi_hat(a2 * u, lam)
        if k == 0.0:
            return 0.0
        return k * float(model.density(u))

    pieces = [0.0] + (_model_breakpoints(model, 0.0, hi) or []) + [hi]
    total = 0.0
    for lo_p, hi_p in zip(pieces[:-1], pieces[1:]):
        if theta == 0.0:
            total += quad(base, lo_p, hi_p, epsabs=0.0, epsrel=1e-9, limit=500)[0]
        else:
            total += quad(base, lo_p, hi_p, weight="cos", wvar=float(theta),
                          epsabs=1e-13, epsrel=1e-9, limit=500)[0]
    return complex(2.0 * total, 0.0)
