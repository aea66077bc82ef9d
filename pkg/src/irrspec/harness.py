"""Monte Carlo harness: accuracy tables, CI coverage, and rate studies.

run_experiment reproduces the accuracy-table protocol: independent
replications, each with a fresh grid and path, an estimate at a reference
frequency, and optionally a mean integrated squared error over a frequency
window.  Everything is driven by (config, master seed) through per-replication
counter streams, so reports are reproducible bit-for-bit.
"""

import dataclasses
import json
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .errors import ConfigError, DomainError, IrrspecError
from .estimator import estimate_curve, estimate_f
from .inference import loglog_fit
from .processes import (FBM_EXACT_CAP, model_from_config, simulate_fbm_exact,
                        simulate_fbm_fast, simulate_multiscale, simulate_ou)
from .sampling import (DurationLaw, build_grid, build_shifts_auto, check_schedule,
                       lambda_schedule, rng_stream)
from .wavelet import build_mother, build_rescaled


@dataclass
class ExperimentConfig:
    model: dict
    law: str
    n: int
    d: float = 0.6
    rho: float = 0.8
    lam: Optional[float] = None          # None -> lambda_schedule default (15)
    replications: int = 50
    ref_freq: float = 1.0                # rad/s
    compute_mise: bool = False
    mise_range: tuple = (0.3, 5.0)
    mise_step: float = 0.1
    shift_stride: int = 1
    mise_shift_stride: Optional[int] = None   # None -> shift_stride
    seed: int = 0
    fbm_exact_cap: int = FBM_EXACT_CAP
    kappa: int = 8

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if self.n < 16:
            raise ConfigError("n must be >= 16")
        if not 0.0 < self.d < 1.0:
            raise ConfigError(f"mesh exponent d = {self.d} outside (0, 1)")
        if self.shift_stride < 1 or (self.mise_shift_stride or 1) < 1:
            raise ConfigError("shift strides must be >= 1")
        if self.compute_mise and not self.mise_range[0] < self.mise_range[1]:
            raise ConfigError("mise_range must be increasing")

    def to_json(self):
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        if "mise_range" in data:
            data["mise_range"] = tuple(data["mise_range"])
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def simulate_path(model, grid, rng, exact_cap=FBM_EXACT_CAP, kappa=8):
    """Dispatch a model to its simulator (exact fBm below the size cap)."""
    if model.kind == "ou":
        return simulate_ou(model.alpha, grid, rng)
    if model.kind == "fbm":
        if grid.n <= exact_cap:
            return simulate_fbm_exact(model.H, grid, rng)
        return simulate_fbm_fast(model.H, grid, rng, kappa=kappa)
    if model.kind == "multiscale":
        return simulate_multiscale(model, grid, rng)
    raise DomainError(f"no simulator for model kind {model.kind!r}")


def _schedule_warning(law, model, d):
    """Admissibility note for the (s, H, d) schedule; None when it passes."""
    if model.kind == "fbm":
        H = model.H
    elif model.kind == "multiscale":
        H = model.exponents[-1]
    else:
        H = 1.0  # stationary, smooth-covariance case
    try:
        chk = check_schedule(law.moment_order, H, d)
    except DomainError as exc:
        return f"schedule hypotheses violated for law {law.name}: {exc}"
    if not chk.valid:
        return (f"mesh exponent d = {d} below the admissibility bound "
                f"{chk.d_bound:.4g} for (s = {law.moment_order}, H = {H})")
    return None


@dataclass
class ExperimentReport:
    config: dict
    lam: float
    f_true_ref: float
    f_hat_ref: list
    sqrt_mse: float
    mise: Optional[float]
    mise_per_rep: list
    T_n_per_rep: list
    rep_seeds: list
    failures: list
    warnings: list
    shift_fallback_reps: int
    kernel_backend: str
    runtime_s: Optional[float] = None

    def to_json(self, include_runtime=True):
        payload = dataclasses.asdict(self)
        if not include_runtime:
            payload.pop("runtime_s")
        return json.dumps(payload, indent=2, sort_keys=True)

    def save(self, path, include_runtime=True):
        with open(path, "w") as fh:
            fh.write(self.to_json(include_runtime=include_runtime) + "\n")


def _mise_grid(config):
    lo, hi = config.mise_range
    count = int(round((hi - lo) / config.mise_step)) + 1
    return np.linspace(lo, hi, count)


def run_experiment(config, wavelet=None):
    """Monte Carlo accuracy experiment per the table protocol.

    sqrt_mse is sqrt(mean (f_hat(ref) - f(ref))^2) over replications; mise is
    the mean over replications of the trapezoid integral of (f_hat - f)^2
    over the mise grid.  A replication failure is recorded, and the run
    aborts if more than 10% of replications fail.
    """
    model = model_from_config(config.model)
    law = DurationLaw.from_name(config.law)
    mother = wavelet if wavelet is not None else build_mother()
    lam = lambda_schedule(config.n, config.lam, mother.spectral_support)
    resc = build_rescaled(mother, lam)
    warnings_list = []
    warn = _schedule_warning(law, model, config.d)
    if warn:
        warnings_list.append(warn)

    xi_ref = config.ref_freq
    f_true = float(model.density(xi_ref))
    grid_mise = _mise_grid(config) if config.compute_mise else None
    f_mise_true = model.density(grid_mise) if config.compute_mise else None

    f_hats, mises, Ts, seeds, failures = [], [], [], [], []
    fallback_count = 0
    t0 = time.time()
    for rep in range(config.replications):
        seeds.append([config.seed, rep])
        try:
            rng = rng_stream(config.seed, rep)
            grid = build_grid(law, config.n, config.d, rng)
            path = simulate_path(model, grid, rng, config.fbm_exact_cap, config.kappa)
            shifts = build_shifts_auto(grid.T_n, config.n, config.rho)
            if shifts.fallback:
                fallback_count += 1
            est = estimate_f(path, xi_ref, resc, shifts, stride=config.shift_stride)
            f_hats.append(est.f_hat)
            Ts.append(grid.T_n)
            if config.compute_mise:
                stride = config.mise_shift_stride or config.shift_stride
                curve = estimate_curve(path, grid_mise, resc, shifts, stride=stride)
                sq = (curve.f_hat - f_mise_true) ** 2
                if not np.all(np.isfinite(sq)):
                    raise DomainError("mise grid contains failed frequencies")
                mises.append(float(np.trapezoid(sq, grid_mise)))
        except IrrspecError as exc:
            failures.append({"rep": rep, "error": str(exc)})
    if len(failures) > 0.1 * config.replications:
        raise DomainError(
            f"{len(failures)}/{config.replications} replications failed; first: "
            f"{failures[0]['error']}")

    f_arr = np.asarray(f_hats)
    report = ExperimentReport(
        config=dataclasses.asdict(config),
        lam=lam,
        f_true_ref=f_true,
        f_hat_ref=f_arr.tolist(),
        sqrt_mse=float(np.sqrt(np.mean((f_arr - f_true) ** 2))),
        mise=float(np.mean(mises)) if mises else None,
        mise_per_rep=mises,
        T_n_per_rep=[float(t) for t in Ts],
        rep_seeds=seeds,
        failures=failures,
        warnings=warnings_list,
        shift_fallback_reps=fallback_count,
        kernel_backend="numba" if _kernels.HAVE_NUMBA else "numpy",
    )
    report.runtime_s = time.time() - t0
    return report


@dataclass
class CoverageResult:
    coverage: float
    level: float
    hits: int
    replications: int
    f_true: float


def run_coverage(config, level=0.95, wavelet=None):
    """Fraction of replications whose plug-in CI contains the true density."""
    if not 0.0 <= level < 1.0:
        raise ConfigError(f"confidence level {level} outside [0, 1)")
    model = model_from_config(config.model)
    law = DurationLaw.from_name(config.law)
    mother = wavelet if wavelet is not None else build_mother()
    lam = lambda_schedule(config.n, config.lam, mother.spectral_support)
    resc = build_rescaled(mother, lam)
    xi = config.ref_freq
    f_true = float(model.density(xi))
    hits = 0
    for rep in range(config.replications):
        rng = rng_stream(config.seed, rep)
        grid = build_grid(law, config.n, config.d, rng)
        path = simulate_path(model, grid, rng, config.fbm_exact_cap, config.kappa)
        shifts = build_shifts_auto(grid.T_n, config.n, config.rho)
        est = estimate_f(path, xi, resc, shifts, level=level,
                         stride=config.shift_stride)
        if abs(est.f_hat - f_true) <= est.ci_halfwidth:
            hits += 1
    return CoverageResult(coverage=hits / config.replications, level=level,
                          hits=hits, replications=config.replications,
                          f_true=f_true)


def summary_table_csv(reports, path):
    """Accuracy-table CSV: one row pair (sqrt MSE, MISE) per duration law.

    `reports` maps (law, column_label) -> ExperimentReport; columns are laid
    out in first-seen order, mirroring the reference tables.
    """
    columns = []
    laws = []
    for law, col in reports:
        if col not in columns:
            columns.append(col)
        if law not in laws:
            laws.append(law)
    with open(path, "w") as fh:
        fh.write(f"law,metric,{','.join(str(c) for c in columns)}\n")
        for law in laws:
            vals = [reports.get((law, c)) for c in columns]
            fh.write(law + ",sqrt_mse," + ",".join(
                f"{r.sqrt_mse:.6g}" if r else "" for r in vals) + "\n")
            if any(r is not None and r.mise is not None for r in vals):
                fh.write(law + ",mise," + ",".join(
                    f"{r.mise:.6g}" if r and r.mise is not None else ""
                    for r in vals) + "\n")


@dataclass
class RateStudy:
    ns: list
    rmses: list
    slope: float
    expected_slope: float


def run_rate_study(configs, wavelet=None):
    """OLS slope of log RMSE against log n across experiments of growing n.

    All configs must share the law, model, and mesh exponent; the reference
    slope is -2(1-d)/5, the density estimator's rate exponent.
    """
    if len(configs) < 3:
        raise DomainError("need at least 3 experiment sizes for a rate study")
    base = (configs[0].law, json.dumps(configs[0].model, sort_keys=True), configs[0].d)
    for c in configs[1:]:
        if (c.law, json.dumps(c.model, sort_keys=True), c.d) != base:
            raise DomainError("rate-study configs must share law, model and d")
    mother = wavelet if wavelet is not None else build_mother()
    ns, rmses = [], []
    for c in sorted(configs, key=lambda c: c.n):
        rep = run_experiment(c, wavelet=mother)
        ns.append(c.n)
        rmses.append(rep.sqrt_mse)
    fit = loglog_fit(np.asarray(ns, float), np.asarray(rmses, float), axis="scale")
    return RateStudy(ns=ns, rmses=rmses, slope=fit.slope,
                     expected_slope=-2.0 * (1.0 - configs[0].d) / 5.0)
