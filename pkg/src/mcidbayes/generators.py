"""Synthetic data-generating processes used in the simulation studies.

Two families are covered:

* ``two_class`` -- Y is drawn first with P(Y=+1) = pi, then X | (Y, Z) is
  normal around a class-specific linear predictor.  The true personalized
  threshold is exactly linear: beta* = (a_plus + a_minus) / 2.  The
  population (no-covariate) study is the special case with z = (1,) and
  class means +-1, SD 2.
* ``pit`` -- X | Z is normal around mu(z) and the label is generated through
  the probability integral transform, Y ~ 2*Ber(F_{X|Z}(x|z)) - 1, so the
  conditional positive-outcome probability crosses 1/2 exactly at mu(z).
  With a quadratic mu(z) the true threshold is nonlinear and the linear
  working model is deliberately misspecified.

Covariate vectors are stored with an explicit leading intercept, z = (1, c).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import ndtr

from .data import Dataset
from .rng import RngStream, as_generator

__all__ = [
    "GeneratorSpec",
    "TrueMcid",
    "example1",
    "example2",
    "example3",
    "example4",
    "population_study",
    "generator_from_config",
    "pi_hat",
    "working_tau",
]

TAU_CLIP = (0.01, 0.99)


@dataclass(frozen=True)
class TrueMcid:
    """True threshold: either linear coefficients or a general function of z."""

    beta_star: np.ndarray | None = None
    fn: Callable[[np.ndarray], float] | None = None

    @property
    def kind(self) -> str:
        return "linear" if self.beta_star is not None else "function"

    def value(self, z: np.ndarray) -> float:
        z = np.asarray(z, dtype=float)
        if self.beta_star is not None:
            return float(self.beta_star @ z)
        return float(self.fn(z))


@dataclass(frozen=True)
class GeneratorSpec:
    variant: str
    pi: float = 0.5
    a_plus: np.ndarray | None = None
    a_minus: np.ndarray | None = None
    coef: np.ndarray | None = None
    quadratic: bool = False
    x_sd: float = 1.0
    z_mean: np.ndarray = field(default_factory=lambda: np.empty(0))
    z_sd: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self) -> None:
        if not 0.0 < self.pi < 1.0:
            raise ValueError(f"pi must lie in (0, 1), got {self.pi}")
        for name in ("a_plus", "a_minus", "coef", "z_mean", "z_sd"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, np.asarray(v, dtype=float))
        if (self.a_plus is None) != (self.a_minus is None):
            raise ValueError("a_plus and a_minus must be given together")
        if self.family == "two_class":
            if len(self.a_plus) != self.q or len(self.a_minus) != self.q:
                raise ValueError("class coefficient length must be 1 + #covariates")
        else:
            if self.coef is None or len(self.coef) != self.q:
                raise ValueError("coef length must be 1 + #covariates")

    @property
    def family(self) -> str:
        return "two_class" if self.a_plus is not None else "pit"

    @property
    def q(self) -> int:
        return 1 + len(self.z_mean)

    def mean_function(self, z: np.ndarray) -> float:
        """Center of X | Z = z for the pit family (z includes the intercept)."""
        z = np.asarray(z, dtype=float)
        val = float(self.coef @ z)
        if self.quadratic:
            val -= float(self.coef[1:] @ (z[1:] ** 2))
        return val

    def z_tilde_default(self) -> np.ndarray:
        """Default new-patient profile: the center of the covariate law."""
        return np.concatenate(([1.0], self.z_mean))

    # -- sampling ----------------------------------------------------------

    def generate(self, n: int, rng: RngStream | np.random.Generator) -> Dataset:
        """Draw n i.i.d. records.  Deterministic given the stream."""
        if n < 1:
            raise ValueError(f"need n >= 1, got {n}")
        gen = as_generator(rng)
        k = len(self.z_mean)
        if self.family == "two_class":
            y = np.where(gen.random(n) < self.pi, 1, -1)
            zc = self.z_mean + self.z_sd * gen.standard_normal((n, k))
            z = np.hstack([np.ones((n, 1)), zc])
            loc = np.where(y > 0, z @ self.a_plus, z @ self.a_minus)
            x = loc + self.x_sd * gen.standard_normal(n)
        else:
            zc = self.z_mean + self.z_sd * gen.standard_normal((n, k))
            z = np.hstack([np.ones((n, 1)), zc])
            mu = np.array([self.mean_function(z[i]) for i in range(n)])
            x = mu + self.x_sd * gen.standard_normal(n)
            p_pos = ndtr((x - mu) / self.x_sd)
            y = np.where(gen.random(n) < p_pos, 1, -1)
        return Dataset(x, y, z)

    # -- population structure ----------------------------------------------

    def true_mcid(self) -> TrueMcid:
        if self.family == "two_class":
            return TrueMcid(beta_star=0.5 * (self.a_plus + self.a_minus))
        if not self.quadratic:
            return TrueMcid(beta_star=self.coef.copy())
        return TrueMcid(fn=self.mean_function)

    def class_x_location_scale(self, y: int, z: np.ndarray) -> tuple[float, float]:
        """Location and scale of X given (Y=y, Z=z), for quadrature truncation."""
        z = np.asarray(z, dtype=float)
        if self.family == "two_class":
            a = self.a_plus if y > 0 else self.a_minus
            return float(a @ z), self.x_sd
        return self.mean_function(z), self.x_sd

    def class_conditional_density(self, y: int, z: np.ndarray, x):
        """Density of X given (Y=y, Z=z); vectorized over x."""
        if y not in (-1, 1):
            raise ValueError(f"y must be +-1, got {y}")
        x = np.asarray(x, dtype=float)
        loc, sd = self.class_x_location_scale(y, z)
        if self.family == "two_class":
            out = np.exp(-0.5 * ((x - loc) / sd) ** 2) / (sd * math.sqrt(2 * math.pi))
        else:
            # Bayes inversion of the probability-integral construction:
            # psi_{+1,z}(x) = m_z(x) f(x|z) / P(Y=+1|z) with P(Y=+1|z) = 1/2.
            f = np.exp(-0.5 * ((x - loc) / sd) ** 2) / (sd * math.sqrt(2 * math.pi))
            m = ndtr((x - loc) / sd)
            out = 2.0 * m * f if y > 0 else 2.0 * (1.0 - m) * f
        return float(out) if out.ndim == 0 else out


def example1() -> GeneratorSpec:
    return GeneratorSpec(
        variant="example1", pi=0.5,
        a_plus=(0.1, 0.55), a_minus=(-0.1, 0.45),
        x_sd=0.1, z_mean=(1.0,), z_sd=(0.1,))


def example2() -> GeneratorSpec:
    return GeneratorSpec(
        variant="example2", pi=0.5,
        a_plus=(0.05, 0.55, 1.05), a_minus=(-0.05, 0.49, 0.95),
        x_sd=1.0, z_mean=(1.0, 1.0), z_sd=(0.1, 0.1))


def example3() -> GeneratorSpec:
    return GeneratorSpec(
        variant="example3", pi=0.5,
        coef=(0.0, 1.0, 2.0), quadratic=False,
        x_sd=1.0, z_mean=(0.0, 0.0), z_sd=(1.0, 1.0))


def example4() -> GeneratorSpec:
    return GeneratorSpec(
        variant="example4", pi=0.5,
        coef=(0.0, 1.0, 2.0), quadratic=True,
        x_sd=1.0, z_mean=(0.0, 0.0), z_sd=(1.0, 1.0))


def population_study(pi: float = 0.7) -> GeneratorSpec:
    """Scalar-threshold study: X | Y=y ~ N(y, 2^2), no covariates."""
    return GeneratorSpec(
        variant="population", pi=pi,
        a_plus=(1.0,), a_minus=(-1.0,), x_sd=2.0)


_FACTORIES = {
    "example1": example1,
    "example2": example2,
    "example3": example3,
    "example4": example4,
}


def generator_from_config(cfg: dict) -> GeneratorSpec:
    """Build a generator from a config mapping {'variant': ..., ['pi': ...]}."""
    variant = cfg["variant"]
    if variant == "population":
        return population_study(pi=float(cfg.get("pi", 0.7)))
    if variant not in _FACTORIES:
        raise ValueError(f"unknown generator variant {variant!r}")
    spec = _FACTORIES[variant]()
    if "pi" in cfg and float(cfg["pi"]) != spec.pi:
        raise ValueError(f"{variant} has fixed pi={spec.pi}")
    return spec


def pi_hat(data: Dataset) -> float:
    """Empirical fraction of positive outcomes."""
    if data.n == 0:
        raise ValueError("pi_hat requires a nonempty dataset")
    return float(np.mean(data.y == 1))


def working_tau(data: Dataset) -> float:
    """Plug-in working skewness tau = 1 - pi_hat, clipped away from {0, 1}."""
    return float(np.clip(1.0 - pi_hat(data), *TAU_CLIP))
