"""Distribution kernels: asymmetric Laplace, GIG, truncated normal, MVN.

These are the sampling and density primitives the Gibbs sampler and the
loss functions are built on.  All samplers take an :class:`~mcidbayes.rng.RngStream`
(fresh stream) or a ``numpy.random.Generator`` (continue an existing stream)
and are deterministic given the stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import _kernels
from .rng import RngStream, as_generator

__all__ = [
    "AlParams",
    "GigParams",
    "TruncationInterval",
    "check_loss",
    "al_cdf",
    "sample_trunc_normal",
    "sample_gig",
    "gig_density",
    "sample_mvn",
]

GIG_A_FLOOR = _kernels.GIG_A_FLOOR


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if not 0.0 < tau < 1.0:
        raise ValueError(f"skewness tau must lie in (0, 1), got {tau}")
    return tau


@dataclass(frozen=True)
class AlParams:
    """Asymmetric Laplace location-scale family with skewness ``tau``."""

    tau: float
    location: float = 0.0
    scale: float = 1.0

    def __post_init__(self) -> None:
        _check_tau(self.tau)
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    def cdf(self, u):
        return al_cdf((np.asarray(u) - self.location) / self.scale, self.tau)


@dataclass(frozen=True)
class GigParams:
    """Generalized inverse Gaussian: density ~ x^{nu-1} exp(-(a/x + b*x)/2)."""

    nu: float
    a: float
    b: float

    def __post_init__(self) -> None:
        if self.a < 0:
            raise ValueError(f"GIG parameter a must be nonnegative, got {self.a}")
        if not self.b > 0:
            raise ValueError(f"GIG parameter b must be positive, got {self.b}")


@dataclass(frozen=True)
class TruncationInterval:
    """Open/closed support interval; +-inf endpoints allowed."""

    lower: float
    upper: float

    def __post_init__(self) -> None:
        if not self.lower < self.upper:
            raise ValueError(f"need lower < upper, got [{self.lower}, {self.upper}]")

    @classmethod
    def nonnegative(cls) -> "TruncationInterval":
        return cls(0.0, math.inf)

    @classmethod
    def negative(cls) -> "TruncationInterval":
        return cls(-math.inf, 0.0)


def check_loss(u, tau: float):
    """Asymmetric absolute ('check') loss rho_tau(u) = u*(tau - 1{u<0})."""
    _check_tau(tau)
    u = np.asarray(u, dtype=float)
    out = u * (tau - (u < 0))
    return float(out) if out.ndim == 0 else out


def al_cdf(u, tau: float):
    """CDF of the standard asymmetric Laplace with skewness ``tau``.

    F(u) = tau * exp(-rho_tau(u)) for u <= 0, else 1 - (1-tau) * exp(-rho_tau(u)).
    """
    _check_tau(tau)
    u = np.asarray(u, dtype=float)
    rho = u * (tau - (u < 0))
    out = np.where(u <= 0, tau * np.exp(-rho), 1.0 - (1.0 - tau) * np.exp(-rho))
    return float(out) if out.ndim == 0 else out


def sample_trunc_normal(
    mean: float,
    var: float,
    interval: TruncationInterval,
    rng: RngStream | np.random.Generator,
    size: int | None = None,
):
    """Draw from N(mean, var) conditioned on ``interval``.

    Uses the inverse CDF for moderate truncation and an exponential-proposal
    rejection sampler once the interval lies beyond ``TAIL_Z`` standard
    deviations from the mean, so far-tail intervals are handled exactly and
    without unbounded rejection loops.  Values lie strictly inside the
    interval.
    """
    if not var > 0:
        raise ValueError(f"variance must be positive, got {var}")
    gen = as_generator(rng)
    sd = math.sqrt(var)
    if size is None:
        return _kernels.trunc_normal_scalar(gen, float(mean), sd,
                                            float(interval.lower), float(interval.upper))
    out = np.empty(size)
    m = np.full(size, float(mean))
    s = np.full(size, sd)
    lo = np.full(size, float(interval.lower))
    hi = np.full(size, float(interval.upper))
    _kernels.trunc_normal_fill(gen, out, m, s, lo, hi)
    return out


def sample_gig(
    params: GigParams,
    rng: RngStream | np.random.Generator,
    size: int | None = None,
):
    """Draw from GIG(nu, a, b) for half-integer orders nu = +-1/2.

    nu = 1/2 goes through the reciprocal identity (1/X is inverse Gaussian)
    and nu = -1/2 is the inverse Gaussian itself; both are exact chi-square
    transform draws with no Bessel evaluations.  ``a`` is floored at
    ``GIG_A_FLOOR`` so degenerate a = 0 inputs stay proper.
    """
    gen = as_generator(rng)
    a = max(params.a, GIG_A_FLOOR)
    if params.nu == 0.5:
        if size is None:
            return _kernels.gig_half_scalar(gen, a, params.b)
        out = np.empty(size)
        _kernels.gig_half_fill(gen, out, np.full(size, a), params.b)
        return out
    if params.nu == -0.5:
        mu = math.sqrt(a / params.b)
        if size is None:
            return _kernels.inv_gauss_scalar(gen, mu, a)
        return np.array([_kernels.inv_gauss_scalar(gen, mu, a) for _ in range(size)])
    raise NotImplementedError(f"GIG sampling implemented for nu = +-1/2 only, got nu={params.nu}")


def _bessel_k_half_orders(order: float, t: float) -> float:
    # closed forms: K_{1/2}(t) = sqrt(pi/(2t)) e^{-t}; K_{3/2}(t) = K_{1/2}(t)(1 + 1/t)
    k_half = math.sqrt(math.pi / (2.0 * t)) * math.exp(-t)
    if order in (0.5, -0.5):
        return k_half
    if order in (1.5, -1.5):
        return k_half * (1.0 + 1.0 / t)
    raise NotImplementedError(f"Bessel closed form available for |nu| in {{1/2, 3/2}}, got {order}")


def gig_density(x, params: GigParams):
    """GIG(nu, a, b) density at x > 0, for nu in {1/2, -1/2, 3/2}."""
    if params.nu not in (0.5, -0.5, 1.5):
        raise NotImplementedError(f"gig_density supports nu in {{1/2, -1/2, 3/2}}, got {params.nu}")
    a = max(params.a, GIG_A_FLOOR)
    b = params.b
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("gig_density requires x > 0")
    t = math.sqrt(a * b)
    norm = (b / a) ** (params.nu / 2.0) / (2.0 * _bessel_k_half_orders(params.nu, t))
    out = norm * x ** (params.nu - 1.0) * np.exp(-0.5 * (a / x + b * x))
    return float(out) if out.ndim == 0 else out


def sample_mvn(
    mean: np.ndarray,
    cov: np.ndarray,
    rng: RngStream | np.random.Generator,
    size: int | None = None,
):
    """Multivariate normal draws via the lower Cholesky factor of ``cov``.

    A non-SPD covariance raises ``scipy.linalg.LinAlgError`` naming the
    offending leading minor.
    """
    gen = as_generator(rng)
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    lower = scipy.linalg.cholesky(cov, lower=True)
    if size is None:
        return mean + lower @ gen.standard_normal(mean.shape[0])
    return mean + gen.standard_normal((size, mean.shape[0])) @ lower.T
