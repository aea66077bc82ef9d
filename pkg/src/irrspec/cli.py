"""Command-line front end: simulate, estimate, fit, and heartbeat analysis.

All outputs are plot-ready CSV/JSON; nothing renders.  Exit codes: 0 ok,
2 configuration error, 3 runtime error, 4 every requested frequency failed
its margins.
"""

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError, IrrspecError, MarginError
from .estimator import estimate_curve
from .harness import ExperimentConfig, run_coverage, run_experiment, simulate_path
from .inference import band_energy, loglog_fit, two_segment_fit
from .processes import ObservedPath, model_from_config
from .sampling import (DurationLaw, TimeGrid, build_grid, build_shifts_auto,
                       lambda_schedule, rng_stream)
from .estimator import sample_variance_J
from .wavelet import build_mother, build_rescaled

RR_LO_MS = 250.0
RR_HI_MS = 2000.0
LF_BAND_HZ = (0.04, 0.15)
HF_BAND_HZ = (0.15, 0.5)


def _read_series(path, rr_mode=False):
    """Load (t, x) rows, or an RR series in milliseconds.

    RR mode accumulates t_k = sum rr_i / 1000 and uses x_k = rr_k; rows with
    durations outside [250, 2000] ms are flagged but kept.
    """
    data = np.genfromtxt(path, delimiter=",", names=True, dtype=float,
                         encoding="utf-8")
    names = data.dtype.names
    flagged = 0
    if rr_mode:
        col = names[0]
        rr = np.atleast_1d(data[col]).astype(float)
        if np.any(rr <= 0):
            raise ConfigError("RR durations must be positive")
        flagged = int(np.sum((rr < RR_LO_MS) | (rr > RR_HI_MS)))
        t = np.cumsum(rr) / 1000.0
        t = t - t[0]
        x = rr.copy()
    else:
        if len(names) < 2:
            raise ConfigError(f"{path}: need columns t,x")
        t = np.atleast_1d(data[names[0]]).astype(float)
        x = np.atleast_1d(data[names[1]]).astype(float)
    if np.any(~np.isfinite(t)) or np.any(~np.isfinite(x)):
        raise ConfigError(f"{path}: non-finite entries")
    if np.any(np.diff(t) <= 0):
        raise ConfigError(f"{path}: times must be strictly increasing")
    return t, x, flagged


def _path_from_series(t, x):
    t = t - t[0]
    dt = np.diff(t)
    grid = TimeGrid(times=t, delta_n=float(np.mean(dt)))
    return ObservedPath(grid=grid, values=np.asarray(x, float))


def _freq_spec(spec, unit):
    try:
        lo, hi, count = spec.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError:
        raise ConfigError(f"bad frequency spec {spec!r}; use lo:hi:count")
    if not (0 < lo < hi) or count < 1:
        raise ConfigError(f"bad frequency spec {spec!r}")
    grid = np.geomspace(lo, hi, count)
    if unit == "hz":
        return grid * 2.0 * np.pi, grid
    return grid, grid / (2.0 * np.pi)


def _shift_stride(n, cap=2000):
    return max(1, (n + 1) // cap)


def cmd_simulate(args):
    if not 0.0 < args.d < 1.0:
        raise ConfigError(f"--d (mesh exponent) must lie in (0, 1), got {args.d}")
    if args.n < 16:
        raise ConfigError(f"--n must be at least 16, got {args.n}")
    model = model_from_config(args.model)
    law = DurationLaw.from_name(args.law)
    rng = rng_stream(args.seed, 0)
    grid = build_grid(law, args.n, args.d, rng)
    path = simulate_path(model, grid, rng)
    out = Path(args.out)
    path.to_csv(out)
    sidecar = {
        "model": model.config(),
        "law": law.name,
        "n": args.n,
        "d": args.d,
        "delta_n": grid.delta_n,
        "T_n": grid.T_n,
        "seed": args.seed,
    }
    out.with_suffix(".meta.json").write_text(
        json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out} (n={args.n}, T_n={grid.T_n:.4g}, delta_n={grid.delta_n:.4g})")
    return 0


def cmd_estimate(args):
    t, x, _ = _read_series(args.input)
    path = _path_from_series(t, x)
    xi_grid, nat_grid = _freq_spec(args.frequencies, args.unit)
    mother = build_mother()
    lam = lambda_schedule(path.grid.n, args.lam, mother.spectral_support)
    resc = build_rescaled(mother, lam)
    shifts = build_shifts_auto(path.grid.T_n, path.grid.n, args.rho)
    stride = args.stride or _shift_stride(path.grid.n)
    result = estimate_curve(path, xi_grid, resc, shifts, level=args.level,
                            stride=stride, threads=args.threads)
    out = Path(args.out)
    result.to_csv(out.with_suffix(".csv"))
    ok = result.ok
    with open(out.with_suffix(".loglog.csv"), "w") as fh:
        fh.write(f"log10_freq_{args.unit.replace('/', '')},log10_f_hat\n")
        for nu, f in zip(nat_grid[ok], result.f_hat[ok]):
            if f > 0:
                fh.write(f"{np.log10(nu):.12g},{np.log10(f):.12g}\n")
    result.to_json(out.with_suffix(".json"))
    n_fail = int(np.sum(~ok))
    print(f"estimated {ok.sum()}/{xi_grid.size} frequencies "
          f"(lambda={lam:.4g}, shifts={shifts.shifts[::stride].size})")
    if n_fail == xi_grid.size:
        print("all frequencies failed their margins", file=sys.stderr)
        return 4
    return 0


def cmd_hurst(args):
    t, x, _ = _read_series(args.input)
    path = _path_from_series(t, x)
    try:
        lo, hi, count = args.scales.split(":")
        scales = np.geomspace(float(lo), float(hi), int(count))
    except ValueError:
        raise ConfigError(f"bad scale spec {args.scales!r}; use lo:hi:count")
    mother = build_mother()
    shifts = build_shifts_auto(path.grid.T_n, path.grid.n, args.rho)
    stride = args.stride or _shift_stride(path.grid.n)
    js = np.array([sample_variance_J(path, shifts, mother, a=a, mode="plain",
                                     stride=stride) for a in scales])
    fit = loglog_fit(scales, js, axis="scale")
    payload = {
        "H_hat": fit.H_hat,
        "C_hat": fit.C_hat,
        "slope": fit.slope,
        "slope_stderr": fit.slope_stderr,
        "rss": fit.rss,
        "scales": scales.tolist(),
        "J": js.tolist(),
    }
    Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"H_hat = {fit.H_hat:.4f} (slope {fit.slope:.4f} "
          f"+/- {fit.slope_stderr:.4f}), wrote {args.out}")
    return 0


def _parse_zones(spec, t_lo, t_hi):
    zones = []
    for part in spec.split(","):
        try:
            start, end, label = part.split(":")
            start, end = float(start), float(end)
        except ValueError:
            raise ConfigError(f"bad zone {part!r}; use start:end:label")
        if not (t_lo <= start < end <= t_hi):
            raise ConfigError(
                f"zone {label!r} [{start}, {end}] outside the recording "
                f"[{t_lo:.4g}, {t_hi:.4g}]")
        zones.append((start, end, label))
    return zones


def cmd_heartbeat(args):
    t, x, flagged = _read_series(args.input, rr_mode=args.rr)
    if flagged:
        print(f"note: {flagged} RR rows outside [{RR_LO_MS:.0f}, {RR_HI_MS:.0f}] ms "
              "(kept)", file=sys.stderr)
    zones = _parse_zones(args.zones, t[0], t[-1]) if args.zones else \
        [(float(t[0]), float(t[-1]), "all")]
    mother = build_mother()
    lam = lambda_schedule(t.size, args.lam, mother.spectral_support)
    resc = build_rescaled(mother, lam)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    nu_grid = np.geomspace(args.freq_lo, args.freq_hi, args.freq_count)
    fit_mask_lo, fit_mask_hi = LF_BAND_HZ[0], HF_BAND_HZ[1]
    summary = {}
    for start, end, label in zones:
        sel = (t >= start) & (t <= end)
        if sel.sum() < 64:
            raise ConfigError(f"zone {label!r} has too few beats ({int(sel.sum())})")
        tz = t[sel]
        xz = x[sel] - np.mean(x[sel])   # the theory assumes a centered process
        path = _path_from_series(tz, xz)
        shifts = build_shifts_auto(path.grid.T_n, path.grid.n, args.rho)
        stride = args.stride or _shift_stride(path.grid.n)
        curve = estimate_curve(path, nu_grid * 2 * np.pi, resc, shifts,
                               level=args.level, stride=stride,
                               threads=args.threads)
        curve.to_csv(outdir / f"zone_{label}.csv")
        ok = curve.ok & (curve.f_hat > 0)
        nu_ok = nu_grid[ok]
        fit_sel = (nu_ok >= fit_mask_lo) & (nu_ok <= fit_mask_hi)
        report = {"zone": label, "start": start, "end": end,
                  "n_beats": int(sel.sum()), "lambda": lam}
        if fit_sel.sum() >= 6:
            nu_fit = nu_ok[fit_sel]
            f_fit = curve.f_hat[ok][fit_sel]
            single = loglog_fit(nu_fit, f_fit, axis="frequency")
            seg = two_segment_fit(np.log(nu_fit), np.log(f_fit))
            report["single_line"] = {"H_hat": single.H_hat, "slope": single.slope,
                                     "sse": single.rss}
            report["two_segment"] = {
                "breakpoint_hz": seg.breakpoint,
                "H_low": (-seg.left.slope - 1.0) / 2.0,
                "H_high": (-seg.right.slope - 1.0) / 2.0,
                "sse": seg.total_sse,
                "sse_ratio": seg.sse_ratio,
                "preferred": "two_segment" if seg.sse_ratio < args.sse_threshold
                             else "single_line",
            }
        try:
            report["lf_energy"] = band_energy(curve, LF_BAND_HZ, "hz")
            report["hf_energy"] = band_energy(curve, HF_BAND_HZ, "hz")
        except DomainError as exc:
            report["band_error"] = str(exc)
        summary[label] = report
    (outdir / "zones.json").write_text(json.dumps(summary, indent=2, sort_keys=True)
                                       + "\n")
    for label, rep in summary.items():
        if "two_segment" in rep:
            ts = rep["two_segment"]
            print(f"zone {label}: {ts['preferred']} (sse ratio {ts['sse_ratio']:.3f}, "
                  f"break {ts['breakpoint_hz']:.3f} Hz, "
                  f"H {ts['H_low']:.2f}/{ts['H_high']:.2f})")
        else:
            print(f"zone {label}: curve written")
    return 0


def cmd_experiment(args):
    cfg = ExperimentConfig.from_json(Path(args.config).read_text())
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    report = run_experiment(cfg)
    report.save(args.out)
    print(f"sqrt MSE at xi={cfg.ref_freq}: {report.sqrt_mse:.4g}"
          + (f", MISE: {report.mise:.4g}" if report.mise is not None else ""))
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def cmd_coverage(args):
    cfg = ExperimentConfig.from_json(Path(args.config).read_text())
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    res = run_coverage(cfg, level=args.level)
    print(f"coverage at level {args.level}: {res.coverage:.3f} "
          f"({res.hits}/{res.replications})")
    if args.out:
        Path(args.out).write_text(json.dumps(dataclasses.asdict(res), indent=2,
                                             sort_keys=True) + "\n")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="irrspec",
                                description="Wavelet spectral estimation for "
                                            "irregularly sampled Gaussian paths")
    p.add_argument("--seed", type=int, default=None, help="master seed override")
    p.add_argument("--threads", type=int, default=1)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate a path at random times")
    s.add_argument("--model", required=True, help='JSON, e.g. {"kind":"ou","alpha":1}')
    s.add_argument("--law", default="T2", help="duration law T1..T4")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--d", type=float, default=0.6)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate, seed_default=1)

    s = sub.add_parser("estimate", help="estimate the spectral density of a series")
    s.add_argument("--input", required=True)
    s.add_argument("--frequencies", default="0.05:0.8:24", metavar="LO:HI:COUNT")
    s.add_argument("--unit", choices=["hz", "rad"], default="hz")
    s.add_argument("--lam", type=float, default=None)
    s.add_argument("--level", type=float, default=0.95)
    s.add_argument("--rho", type=float, default=0.8)
    s.add_argument("--stride", type=int, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_estimate, seed_default=0)

    s = sub.add_parser("hurst", help="roughness index by scale regression")
    s.add_argument("--input", required=True)
    s.add_argument("--scales", default="1.6:9.6:16", metavar="LO:HI:COUNT")
    s.add_argument("--rho", type=float, default=0.8)
    s.add_argument("--stride", type=int, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_hurst, seed_default=0)

    s = sub.add_parser("heartbeat", help="RR-series band and segment analysis")
    s.add_argument("--input", required=True)
    s.add_argument("--rr", action="store_true", help="input is an RR series in ms")
    s.add_argument("--zones", default=None, metavar="START:END:LABEL[,...]")
    s.add_argument("--freq-lo", type=float, default=0.02)
    s.add_argument("--freq-hi", type=float, default=1.0)
    s.add_argument("--freq-count", type=int, default=25)
    s.add_argument("--lam", type=float, default=None)
    s.add_argument("--level", type=float, default=0.95)
    s.add_argument("--rho", type=float, default=0.8)
    s.add_argument("--stride", type=int, default=None)
    # estimated curves carry smooth correlated errors with ~10 effective dof
    # in the fit window, so a no-kink curve still yields a two-segment SSE
    # ratio near 0.3; measured separations put the decision cut at 0.12
    s.add_argument("--sse-threshold", type=float, default=0.12)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_heartbeat, seed_default=0)

    s = sub.add_parser("experiment", help="Monte Carlo accuracy experiment")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_experiment, seed_default=None)

    s = sub.add_parser("coverage", help="confidence-interval coverage experiment")
    s.add_argument("--config", required=True)
    s.add_argument("--level", type=float, default=0.95)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_coverage, seed_default=None)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed is None:
        args.seed = getattr(args, "seed_default", 0)
    try:
        return args.func(args)
    except (ConfigError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except IrrspecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
