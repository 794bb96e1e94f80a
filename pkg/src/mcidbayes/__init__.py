"""Generalized-Bayes inference for personalized clinical-significance thresholds.

The package fits a deliberately misspecified binary-quantile-regression
working model to (diagnostic measure, patient-reported outcome, profile)
data, samples the resulting generalized posterior for the threshold
coefficients with a data-augmented Gibbs sampler, and tunes the posterior
scale by bootstrap coverage matching so that credible intervals behave like
confidence intervals.
"""

from .data import Dataset
from .distributions import (AlParams, GigParams, TruncationInterval, al_cdf,
                            check_loss, gig_density, sample_gig, sample_mvn,
                            sample_trunc_normal)
from .experiments import (ExperimentConfig, ExperimentError, ReplicateRecord,
                          SummaryReport, coverage_curve, posterior_center_sweep,
                          risk_curve, run_experiment)
from .generators import (GeneratorSpec, TrueMcid, example1, example2, example3,
                         example4, generator_from_config, pi_hat,
                         population_study, working_tau)
from .gibbs import (ChainConfig, GibbsState, MixtureCoefs, PosteriorDraws,
                    PriorSpec, beta_conditional, credible_interval,
                    effective_sample_size, init_state, mcid_draws, run_chain,
                    update_beta, update_u, update_v1)
from .gpc import (CalibrationResult, CoverageEstimate, GpcConfig,
                  bootstrap_resample, calibrate, estimate_coverage, rm_step)
from .losses import (Datum, LossSpec, McidCoef, bqr_loss, bqr_loss_grad,
                     bqr_prob, empirical_risk, golden_section, mess_residual,
                     population_expectation, population_risk_1d, rhs_eta,
                     smooth_surrogate, zero_one_loss)
from .quadrature import QuadratureConfig, QuadratureError, integrate
from .rng import RngStream

__version__ = "0.1.0"

__all__ = [
    "AlParams", "CalibrationResult", "ChainConfig", "CoverageEstimate",
    "Dataset", "Datum", "ExperimentConfig", "ExperimentError", "GeneratorSpec",
    "GibbsState", "GigParams", "GpcConfig", "LossSpec", "McidCoef",
    "MixtureCoefs", "PosteriorDraws", "PriorSpec", "QuadratureConfig",
    "QuadratureError", "ReplicateRecord", "RngStream", "SummaryReport",
    "TrueMcid", "TruncationInterval", "al_cdf", "beta_conditional",
    "bootstrap_resample", "bqr_loss", "bqr_loss_grad", "bqr_prob", "calibrate",
    "check_loss", "coverage_curve", "credible_interval", "effective_sample_size",
    "empirical_risk", "estimate_coverage", "example1", "example2", "example3",
    "example4", "generator_from_config", "gig_density", "golden_section",
    "init_state", "integrate", "mcid_draws", "mess_residual", "pi_hat",
    "population_expectation", "population_risk_1d", "population_study",
    "posterior_center_sweep", "rhs_eta", "risk_curve", "rm_step", "run_chain",
    "run_experiment", "sample_gig", "sample_mvn", "sample_trunc_normal",
    "smooth_surrogate", "update_beta", "update_u", "update_v1", "working_tau",
    "zero_one_loss",
]
