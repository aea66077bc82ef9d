"""Wavelet-based spectral density estimation for Gaussian processes observed
at irregular or random times."""

from .errors import (ConfigError, ConvergenceError, DomainError, EmbeddingError,
                     FactorizationError, IrrspecError, MarginError, SizeError)
from .estimator import (CoeffRequest, DiscretizationReport, EstimateResult,
                        FrequencyEstimate, VarianceDiagnostics,
                        continuous_coeff_oracle, discretization_error_report,
                        empirical_coeff, estimate_curve, estimate_f,
                        sample_variance_J, variance_Sn)
from .harness import (CoverageResult, ExperimentConfig, ExperimentReport,
                      RateStudy, run_coverage, run_experiment, run_rate_study,
                      simulate_path)
from .inference import (LogLogFit, TwoSegmentFit, band_energy, loglog_fit,
                        two_segment_fit)
from .processes import (Fbm, MultiscaleFbm, ObservedPath, OrnsteinUhlenbeck,
                        add_polynomial_trend, eval_f, fbm_scale_constant,
                        gamma_cov, model_from_config, simulate_fbm_exact,
                        simulate_fbm_fast, simulate_multiscale, simulate_ou,
                        theoretical_I1)
from .sampling import (DurationLaw, ScheduleCheck, ShiftFamily, TimeGrid,
                       build_grid, build_shifts, build_shifts_auto,
                       check_schedule, gen_durations, lambda_schedule,
                       rng_stream)
from .wavelet import (MotherWavelet, RescaledWavelet, build_mother,
                      build_rescaled, eval_psi_hat, spectral_functionals)

__version__ = "0.1.0"
