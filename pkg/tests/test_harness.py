import json

import numpy as np
import pytest

import irrspec.harness as harness
from irrspec import (ExperimentConfig, run_coverage, run_experiment,
                     run_rate_study)
from irrspec.errors import ConfigError, DomainError


def _cfg(**kw):
    base = dict(model={"kind": "ou", "alpha": 1.0}, law="T1", n=800, d=0.6,
                replications=6, ref_freq=1.0, seed=13)
    base.update(kw)
    return ExperimentConfig(**base)


def test_report_reproducible(mother):
    cfg = _cfg()
    r1 = run_experiment(cfg, wavelet=mother)
    r2 = run_experiment(cfg, wavelet=mother)
    assert r1.to_json(include_runtime=False) == r2.to_json(include_runtime=False)
    assert r1.sqrt_mse >= 0
    assert len(r1.f_hat_ref) == cfg.replications
    assert r1.rep_seeds[3] == [13, 3]


def test_single_rep_determinism(mother):
    cfg = _cfg(replications=1)
    r1 = run_experiment(cfg, wavelet=mother)
    r2 = run_experiment(cfg, wavelet=mother)
    assert r1.to_json(include_runtime=False) == r2.to_json(include_runtime=False)


def test_mise_computed(mother):
    cfg = _cfg(compute_mise=True, mise_range=(0.7, 1.5), mise_step=0.2,
               replications=4)
    rep = run_experiment(cfg, wavelet=mother)
    assert rep.mise is not None and rep.mise >= 0
    assert len(rep.mise_per_rep) == 4


def test_t4_schedule_warning(mother):
    cfg = _cfg(model={"kind": "fbm", "H": 0.5}, law="T4", n=600, replications=2)
    rep = run_experiment(cfg, wavelet=mother)
    assert rep.warnings and "hypotheses" in rep.warnings[0] or "bound" in rep.warnings[0]
    ok = run_experiment(_cfg(model={"kind": "fbm", "H": 0.5}, law="T2", n=600,
                             replications=2), wavelet=mother)
    assert not ok.warnings


def test_all_failures_abort(mother):
    cfg = _cfg(ref_freq=0.01)  # below the record's resolvable band
    with pytest.raises(DomainError):
        run_experiment(cfg, wavelet=mother)


def test_config_validation_and_roundtrip():
    with pytest.raises(ConfigError):
        _cfg(replications=0)
    with pytest.raises(ConfigError):
        _cfg(d=1.5)
    cfg = _cfg(compute_mise=True)
    back = ExperimentConfig.from_json(cfg.to_json())
    assert back == cfg
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json(json.dumps({"model": {}, "law": "T1", "n": 100,
                                               "bogus": 1}))


def test_coverage_levels(mother):
    cfg = _cfg(replications=4)
    zero = run_coverage(cfg, level=0.0, wavelet=mother)
    assert zero.coverage == 0.0
    with pytest.raises(ConfigError):
        run_coverage(cfg, level=1.0, wavelet=mother)
    mid = run_coverage(cfg, level=0.95, wavelet=mother)
    assert 0.0 <= mid.coverage <= 1.0


def test_rate_study_stub_constant(mother, monkeypatch):
    # constant-RMSE control: injected estimator makes the slope vanish documentation
    class _Est:
        f_hat = 0.25
        ci_halfwidth = 0.0

    monkeypatch.setattr(harness, "estimate_f", lambda *a, **k: _Est())
    configs = [_cfg(n=n, replications=3) for n in (400, 800, 1600)]
    study = run_rate_study(configs, wavelet=mother)
    assert abs(study.slope) <= 1e-9


def test_rate_study_requires_shared_design(mother):
    with pytest.raises(DomainError):
        run_rate_study([_cfg(n=400), _cfg(n=800)], wavelet=mother)
    with pytest.raises(DomainError):
        run_rate_study([_cfg(n=400), _cfg(n=800), _cfg(n=1600, d=0.5)],
                       wavelet=mother)


def test_rate_study_negative_slope(mother):
    configs = [_cfg(n=n, replications=8, law="T2", ref_freq=1.0)
               for n in (500, 2000, 8000)]
    study = run_rate_study(configs, wavelet=mother)
    assert study.slope < 0
    assert study.rmses[0] > study.rmses[-1]
    assert study.expected_slope == pytest.approx(-2 * (1 - 0.6) / 5)
