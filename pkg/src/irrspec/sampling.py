"""Observation-time grids under the round-off model, shifts, and schedule checks.

Times follow t_{k+1} - t_k = delta_n * L_k with mesh delta_n = n^{-d} and
positive durations L_k.  The shipped duration laws are the four used in the
experiments: constant, exponential, and two Pareto tails; a custom sampler
hook covers anything else i.i.d.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError


def rng_stream(master_seed, *key):
    """Counter-style reproducible stream: (master seed, key) -> Generator.

    Distinct keys give statistically independent streams, so replications can
    run in any order (or in parallel) and still reproduce bit-for-bit.
    """
    return np.random.default_rng(np.random.SeedSequence(entropy=int(master_seed),
                                                        spawn_key=tuple(int(k) for k in key)))


@dataclass
class DurationLaw:
    """Positive duration distribution with its moment metadata.

    moment_order is the largest s with E L^s finite (math.inf when all
    moments exist); mean/variance are analytic values when known.
    """

    name: str
    sampler: Callable[[np.random.Generator, int], np.ndarray]
    mean: float
    variance: Optional[float]
    moment_order: float

    @classmethod
    def t1(cls):
        return cls("T1", lambda rng, size: np.ones(size), 1.0, 0.0, math.inf)

    @classmethod
    def t2(cls):
        return cls("T2", lambda rng, size: rng.exponential(1.0, size), 1.0, 1.0, math.inf)

    @classmethod
    def t3(cls):
        # cdf 1 - x^-4 on x >= 1; inverse transform with U in (0, 1]
        return cls("T3", lambda rng, size: (1.0 - rng.random(size)) ** -0.25,
                   4.0 / 3.0, 2.0 / 9.0, 4.0)

    @classmethod
    def t4(cls):
        # cdf 1 - x^-2 on x >= 1; infinite variance
        return cls("T4", lambda rng, size: (1.0 - rng.random(size)) ** -0.5,
                   2.0, None, 2.0)

    @classmethod
    def custom(cls, name, sampler, mean, variance=None, moment_order=math.inf):
        return cls(name, sampler, mean, variance, moment_order)

    @classmethod
    def from_name(cls, name):
        table = {"T1": cls.t1, "T2": cls.t2, "T3": cls.t3, "T4": cls.t4}
        try:
            return table[name.upper()]()
        except KeyError:
            raise DomainError(f"unknown duration law {name!r}; use T1..T4 or custom")


def gen_durations(law, n, rng):
    """Draw n strictly positive durations L_0..L_{n-1}."""
    if n < 1:
        raise DomainError("need at least one duration")
    out = np.asarray(law.sampler(rng, n), dtype=float)
    if out.shape != (n,) or not np.all(out > 0.0):
        raise DomainError(f"law {law.name} returned invalid durations")
    return out


@dataclass
class TimeGrid:
    """Strictly increasing observation times with t_0 = 0."""

    times: np.ndarray
    delta_n: float
    mesh_exponent: Optional[float] = None
    law_name: str = ""

    @property
    def n(self):
        return self.times.size - 1

    @property
    def T_n(self):
        return float(self.times[-1])

    @property
    def durations(self):
        return np.diff(self.times) / self.delta_n

    def to_csv(self, path):
        L = np.concatenate([np.diff(self.times) / self.delta_n, [np.nan]])
        arr = np.column_stack([np.arange(self.times.size), self.times, L])
        np.savetxt(path, arr, delimiter=",", header="index,t,L", comments="",
                   fmt=["%d", "%.17g", "%.17g"])


def build_grid(law, n, d, rng):
    """Grid with mesh delta_n = n^{-d} and durations from `law`."""
    if n < 2:
        raise DomainError("need n >= 2 observations")
    if not 0.0 < d < 1.0:
        raise DomainError(f"mesh exponent d = {d} outside (0, 1)")
    delta = float(n) ** (-d)
    L = gen_durations(law, n, rng)
    times = np.concatenate([[0.0], np.cumsum(delta * L)])
    return TimeGrid(times=times, delta_n=delta, mesh_exponent=d, law_name=law.name)


@dataclass
class ShiftFamily:
    """Uniformly spaced evaluation positions kept away from the record ends."""

    rho: float
    shifts: np.ndarray
    T_n: float
    margin: float
    fallback: bool = False

    @property
    def spacing(self):
        if self.shifts.size < 2:
            return 0.0
        return float(self.shifts[1] - self.shifts[0])

    def strided(self, stride):
        """Every stride-th shift (always keeping the first)."""
        if stride <= 1:
            return self
        return ShiftFamily(self.rho, self.shifts[::stride], self.T_n, self.margin,
                           self.fallback)


def build_shifts(T_n, n, rho=0.8):
    """c_k = T^rho + k (T - 2 T^rho)/n for k = 0..n.

    Raises DomainError when T - 2 T^rho <= 0, which signals that n*delta_n is
    not yet large enough for the boundary margin at this rho.
    """
    if not 0.75 < rho < 1.0:
        raise DomainError(f"rho = {rho} outside (3/4, 1)")
    if n < 1:
        raise DomainError("need n >= 1")
    margin = T_n ** rho
    width = T_n - 2.0 * margin
    if width <= 0.0:
        raise DomainError(
            f"record T_n = {T_n:.3g} too short for margin T^rho = {margin:.3g}; "
            "increase n*delta_n or lower rho")
    shifts = margin + np.arange(n + 1) * (width / n)
    return ShiftFamily(rho=rho, shifts=shifts, T_n=float(T_n), margin=float(margin))


def build_shifts_auto(T_n, n, rho=0.8, fallback_frac=0.25):
    """build_shifts with a centered-margin fallback for short records.

    The margin formula degenerates once T_n <= 2^{1/(1-rho)} (true for the
    n = 1e3 experiment sizes), so short records fall back to a margin of
    fallback_frac * T_n, keeping the shifts increasing and centered.
    """
    try:
        return build_shifts(T_n, n, rho)
    except DomainError:
        margin = fallback_frac * T_n
        shifts = margin + np.arange(n + 1) * ((T_n - 2.0 * margin) / n)
        return ShiftFamily(rho=rho, shifts=shifts, T_n=float(T_n),
                           margin=float(margin), fallback=True)


def lambda_schedule(n, override=None, spectral_support=5.0):
    """Default bandwidth 15 (= n^{d'} with d' = log 15 / log n), or an override."""
    if n < 2:
        raise DomainError("need n >= 2")
    if override is None:
        return 15.0
    if override < spectral_support:
        raise DomainError(
            f"bandwidth override {override} below the spectral support {spectral_support}")
    return float(override)


@dataclass
class ScheduleCheck:
    valid: bool
    d_bound: float
    clt_rate_exp: float
    np_rate_exp: float
    s: float
    H: float
    d: float


def check_schedule(s, H, d):
    """Admissibility of (s, H, d) and the resulting rate exponents.

    The mesh exponent must strictly exceed

        B(s, H) = (1 + (2H ^ 1)) / (1 + s (2H ^ 1))  v  (s + (H ^ 1)) / (s (2 + (H ^ 1)) - 1)

    (limit values for s = inf).  Rates: the sample-variance CLT converges at
    n^{(1-d)/2}, the pointwise density estimator at n^{2(1-d)/5}.
    """
    if H <= 0:
        raise DomainError("need H > 0")
    if not 0.0 < d < 1.0:
        raise DomainError(f"mesh exponent d = {d} outside (0, 1)")
    s_min = 2.0 + max(1.0 - 3.0 * H, 0.0) / (2.0 * H)
    if not s > s_min:
        raise DomainError(f"moment order s = {s} must exceed {s_min:.4g} for H = {H}")
    h2 = min(2.0 * H, 1.0)
    h1 = min(H, 1.0)
    if math.isinf(s):
        bound = max(0.0, 1.0 / (2.0 + h1))
    else:
        bound = max((1.0 + h2) / (1.0 + s * h2), (s + h1) / (s * (2.0 + h1) - 1.0))
    return ScheduleCheck(valid=d > bound, d_bound=bound,
                         clt_rate_exp=(1.0 - d) / 2.0,
                         np_rate_exp=2.0 * (1.0 - d) / 5.0,
                         s=float(s), H=float(H), d=float(d))
