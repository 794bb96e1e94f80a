"""Bootstrap coverage estimation and Robbins-Monro tuning of the scale eta.

The posterior scale eta controls how concentrated the generalized posterior
is, and therefore the frequentist coverage of its credible intervals.  The
calibration loop estimates the coverage c(eta) at the current eta by running
the sampler on B bootstrap resamples and checking how often the resulting
(1-alpha) interval for the new-patient threshold captures the full-data
posterior mean, then nudges eta by a Robbins-Monro step until the estimated
coverage sits at 1 - alpha.

Empirically coverage is increasing in eta, so the default update moves eta
up when coverage is short: eta_{t+1} = eta_t + k_t * ((1-alpha) - c_hat).
The opposite sign convention ("paper_literal") and a one-shot automatic
probe ("auto_detect") are also available; see ``GpcConfig.sign_mode``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .data import Dataset
from .generators import working_tau
from .gibbs import ChainConfig, PriorSpec, credible_interval, mcid_draws, run_chain
from .rng import RngStream, as_generator

__all__ = [
    "GpcConfig",
    "CalibrationResult",
    "CoverageEstimate",
    "bootstrap_resample",
    "estimate_coverage",
    "rm_step",
    "calibrate",
]

SIGN_MODES = ("paper_literal", "monotone_corrected", "auto_detect")


@dataclass(frozen=True)
class GpcConfig:
    alpha: float = 0.05
    b_boot: int = 100          # bootstrap replicates per coverage estimate
    eta0: float = 0.1
    k0: float = 1.0            # step scale: k_t = k0 / (t+1)^decay
    decay: float = 0.51
    eps: float = 0.02          # tolerance on |c_hat - (1-alpha)|
    t_max: int = 25
    eta_min: float = 1e-4
    max_step_frac: float = 0.5  # |delta eta| <= frac * eta_t per update
    sign_mode: str = "monotone_corrected"

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.b_boot < 1 or self.t_max < 1:
            raise ValueError("need b_boot >= 1 and t_max >= 1")
        if not self.eta0 > self.eta_min > 0.0:
            raise ValueError(f"need eta0 > eta_min > 0, got {self.eta0}, {self.eta_min}")
        if self.sign_mode not in SIGN_MODES:
            raise ValueError(f"sign_mode must be one of {SIGN_MODES}")
        if not 0.5 < self.decay <= 1.0:
            raise ValueError("decay must lie in (0.5, 1] for convergent steps")
        if not self.max_step_frac > 0:
            raise ValueError("max_step_frac must be positive")

    def step_size(self, t: int) -> float:
        return self.k0 / (t + 1.0) ** self.decay


@dataclass(frozen=True)
class CalibrationResult:
    eta_hat: float
    trace: tuple[tuple[int, float, float], ...]  # (t, eta_t, c_hat_t)
    terminated_by: str  # "tolerance" | "max_iterations"


@dataclass(frozen=True)
class CoverageEstimate:
    c_hat: float
    beta_hat: np.ndarray      # full-data posterior mean at this eta
    target: float             # beta_hat' z_tilde, the value intervals must capture
    intervals: np.ndarray     # (B, 2) per-replicate credible intervals


def bootstrap_resample(data: Dataset, rng: RngStream | np.random.Generator) -> Dataset:
    """n records drawn uniformly with replacement."""
    if data.n == 0:
        raise ValueError("cannot resample an empty dataset")
    gen = as_generator(rng)
    idx = gen.integers(0, data.n, size=data.n)
    return data.subset(idx)


def _bootstrap_interval(args) -> tuple[float, float]:
    """One bootstrap replicate: resample, rerun the chain, return the interval.

    Module-level so process pools can dispatch it.  Streams: child 0 of the
    replicate stream feeds the resample, child 1 the chain.
    """
    data, z_tilde, prior, chain_cfg, eta, alpha, stream = args
    boot = bootstrap_resample(data, stream.child(0))
    tau_b = working_tau(boot)
    draws = run_chain(boot, prior, tau_b, eta,
                      replace(chain_cfg, rng=stream.child(1)))
    return credible_interval(mcid_draws(draws, z_tilde), alpha)


def estimate_coverage(eta: float, data: Dataset, z_tilde: np.ndarray,
                      prior: PriorSpec, chain_cfg: ChainConfig, b_boot: int,
                      alpha: float, rng: RngStream,
                      map_fn: Callable = map) -> CoverageEstimate:
    """Bootstrap estimate of interval coverage at a fixed eta.

    One chain on the original data supplies the eta-dependent posterior-mean
    target; B chains on bootstrap resamples supply intervals.  The working
    skewness is recomputed from each dataset (original and resampled) as
    1 - pi_hat.  Replicate b uses stream ``rng.child(b)``, so the estimate is
    independent of how ``map_fn`` schedules the work.
    """
    z_tilde = np.asarray(z_tilde, dtype=float)
    tau0 = working_tau(data)
    full = run_chain(data, prior, tau0, eta, replace(chain_cfg, rng=rng.child(0)))
    beta_hat = full.betas.mean(axis=0)
    target = float(beta_hat @ z_tilde)

    jobs = [(data, z_tilde, prior, chain_cfg, eta, alpha, rng.child(b))
            for b in range(1, b_boot + 1)]
    intervals = np.array(list(map_fn(_bootstrap_interval, jobs)))
    covered = (intervals[:, 0] <= target) & (target <= intervals[:, 1])
    return CoverageEstimate(c_hat=float(covered.sum()) / b_boot,
                            beta_hat=beta_hat, target=target, intervals=intervals)


def rm_step(eta_t: float, c_hat: float, t: int, config: GpcConfig,
            direction: float | None = None) -> float:
    """One Robbins-Monro update of eta, clamped below at ``eta_min``.

    ``monotone_corrected`` steps eta up when coverage is short (coverage
    increasing in eta); ``paper_literal`` uses the opposite sign.  For
    ``auto_detect`` the caller must pass the probed ``direction`` (+-1).

    The increment is capped at ``max_step_frac * eta_t``: eta is a scale
    whose target value varies over orders of magnitude between problems, and
    an uncapped absolute step can overshoot a small root by a factor of ten
    when the coverage curve is steep.  The cap preserves the step direction.
    """
    if not eta_t > 0:
        raise ValueError(f"eta_t must be positive, got {eta_t}")
    if config.sign_mode == "monotone_corrected":
        sign = 1.0
    elif config.sign_mode == "paper_literal":
        sign = -1.0
    elif direction is None:
        raise ValueError("auto_detect requires the probed direction")
    else:
        sign = float(np.sign(direction)) or 1.0
    delta = sign * config.step_size(t) * ((1.0 - config.alpha) - c_hat)
    cap = config.max_step_frac * eta_t
    delta = min(max(delta, -cap), cap)
    return max(eta_t + delta, config.eta_min)


def calibrate(data: Dataset, z_tilde: np.ndarray, prior: PriorSpec,
              chain_cfg: ChainConfig, config: GpcConfig, rng: RngStream,
              coverage_fn: Callable[[float, RngStream], CoverageEstimate] | None = None,
              map_fn: Callable = map) -> CalibrationResult:
    """Robbins-Monro search for the eta whose estimated coverage is 1 - alpha.

    Iteration t evaluates the coverage with stream ``rng.child(t)`` and stops
    once |c_hat - (1-alpha)| <= eps at two consecutive iterations, or at
    ``t_max`` evaluations.  ``coverage_fn(eta, stream)`` may replace the
    bootstrap estimator (used for testing against synthetic coverage curves).
    """
    if coverage_fn is None:
        def coverage_fn(eta: float, stream: RngStream) -> CoverageEstimate:
            return estimate_coverage(eta, data, z_tilde, prior, chain_cfg,
                                     config.b_boot, config.alpha, stream, map_fn)

    direction = None
    if config.sign_mode == "auto_detect":
        # one-shot probe: which way does coverage move when eta grows?
        c_lo = coverage_fn(config.eta0, rng.child(config.t_max + 1)).c_hat
        c_hi = coverage_fn(config.eta0 * 1.5, rng.child(config.t_max + 2)).c_hat
        # if coverage increases in eta the corrected (positive) sign converges
        direction = 1.0 if c_hi >= c_lo else -1.0

    trace: list[tuple[int, float, float]] = []
    eta_t = config.eta0
    prev_ok = False
    for t in range(config.t_max):
        est = coverage_fn(eta_t, rng.child(t))
        trace.append((t, eta_t, est.c_hat))
        ok = abs(est.c_hat - (1.0 - config.alpha)) <= config.eps
        if ok and prev_ok:
            return CalibrationResult(eta_t, tuple(trace), "tolerance")
        prev_ok = ok
        if t == config.t_max - 1:
            break
        eta_t = rm_step(eta_t, est.c_hat, t, config, direction)
    return CalibrationResult(eta_t, tuple(trace), "max_iterations")
