"""Loss and risk functions for threshold inference.

Covers the 0-1 misclassification loss (optionally inverse-class weighted),
two smoothed surrogates, and the binary-quantile-regression (BQR) working
loss, together with quadrature evaluation of population risks and of the
stationarity identity characterizing the population BQR minimizer.

The BQR working model puts P(Y=+1 | x, z) = g_beta(x, z), an asymmetric
Laplace CDF in (x - beta'z)/eta, and the working loss is the negative
Bernoulli log-likelihood of that probability (the marginal density of
(x, z) is an additive constant in beta and is dropped, so absolute risk
values are only meaningful up to that constant -- minimizer locations are
unaffected).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .data import Dataset
from .generators import GeneratorSpec
from .quadrature import QuadratureConfig, integrate, gauss_expectation_nodes

__all__ = [
    "Datum",
    "LossSpec",
    "McidCoef",
    "zero_one_loss",
    "smooth_surrogate",
    "bqr_prob",
    "bqr_loss",
    "bqr_loss_grad",
    "empirical_risk",
    "population_expectation",
    "population_risk_1d",
    "mess_residual",
    "rhs_eta",
    "golden_section",
]

KINDS = ("zero_one", "linear_smooth", "quadratic_smooth", "bqr")


@dataclass(frozen=True)
class Datum:
    x: float
    y: int
    z: np.ndarray

    def __post_init__(self) -> None:
        if self.y not in (-1, 1):
            raise ValueError(f"y must be +-1, got {self.y}")
        object.__setattr__(self, "z", np.asarray(self.z, dtype=float))


@dataclass(frozen=True)
class McidCoef:
    """Threshold coefficients; scalar input is treated as the q=1 case."""

    beta: np.ndarray

    def __post_init__(self) -> None:
        beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        if not np.isfinite(beta).all():
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "beta", beta)

    @classmethod
    def from_theta(cls, theta: float) -> "McidCoef":
        return cls(np.array([float(theta)]))


@dataclass(frozen=True)
class LossSpec:
    """Which loss to evaluate, with its weighting and parameters.

    ``pi`` switches on inverse-class weighting w(+1) = 1/pi, w(-1) = 1/(1-pi);
    ``None`` means unweighted.  ``delta`` applies to the smoothed kinds,
    (``tau``, ``eta``) to the BQR kind.
    """

    kind: str
    pi: float | None = None
    delta: float | None = None
    tau: float | None = None
    eta: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.pi is not None and not 0.0 < self.pi < 1.0:
            raise ValueError(f"weighting pi must lie in (0, 1), got {self.pi}")
        if self.kind in ("linear_smooth", "quadratic_smooth"):
            if self.delta is None or not self.delta > 0:
                raise ValueError("smoothed losses need delta > 0")
        if self.kind == "bqr":
            if self.tau is None or not 0.0 < self.tau < 1.0:
                raise ValueError("bqr loss needs tau in (0, 1)")
            if self.eta is None or not self.eta > 0:
                raise ValueError("bqr loss needs eta > 0")

    @classmethod
    def zero_one(cls, pi: float | None = None) -> "LossSpec":
        return cls("zero_one", pi=pi)

    @classmethod
    def linear(cls, delta: float, pi: float | None = None) -> "LossSpec":
        return cls("linear_smooth", pi=pi, delta=delta)

    @classmethod
    def quadratic(cls, delta: float, pi: float | None = None) -> "LossSpec":
        return cls("quadratic_smooth", pi=pi, delta=delta)

    @classmethod
    def bqr_spec(cls, tau: float, eta: float) -> "LossSpec":
        return cls("bqr", tau=tau, eta=eta)

    def weight(self, y) -> np.ndarray | float:
        if self.pi is None:
            return np.ones_like(np.asarray(y, dtype=float))
        y = np.asarray(y)
        out = np.where(y > 0, 1.0 / self.pi, 1.0 / (1.0 - self.pi))
        return out

    def label(self) -> str:
        lab = self.kind
        if self.pi is not None:
            lab += "_weighted"
        return lab


# ---------------------------------------------------------------------------
# pointwise losses (vectorized over x / threshold)
# ---------------------------------------------------------------------------


def smooth_surrogate(u, variant: str, delta: float):
    """Smoothed step s_delta(u): 1 on u <= 0, 0 on u >= delta.

    ``linear`` ramps down linearly; ``quadratic`` uses the C^1 piecewise
    quadratic with its junction at delta/2.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    u = np.asarray(u, dtype=float)
    r = u / delta
    if variant == "linear":
        out = np.clip(1.0 - r, 0.0, 1.0)
    elif variant == "quadratic":
        out = np.where(
            u <= 0, 1.0,
            np.where(r <= 0.5, 1.0 - 2.0 * r ** 2,
                     np.where(r <= 1.0, 2.0 * (1.0 - r) ** 2, 0.0)))
    else:
        raise ValueError(f"variant must be 'linear' or 'quadratic', got {variant!r}")
    return float(out) if out.ndim == 0 else out


def _bqr_log_g_log_1mg(d: np.ndarray, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """log g and log(1 - g) at standardized offsets d = (x - beta'z)/eta.

    Evaluated branch-wise from the closed forms so both logs stay finite and
    accurate arbitrarily far into either tail.
    """
    d = np.asarray(d, dtype=float)
    log_g = np.empty_like(d)
    log_1mg = np.empty_like(d)
    left = d <= 0
    dl = d[left]
    w = (1.0 - tau) * np.exp(tau * dl)
    log_g[left] = math.log1p(-tau) + tau * dl
    log_1mg[left] = np.log1p(-w)
    dr = d[~left]
    v = tau * np.exp(-(1.0 - tau) * dr)
    log_g[~left] = np.log1p(-v)
    log_1mg[~left] = math.log(tau) - (1.0 - tau) * dr
    return log_g, log_1mg


def _loss_values(spec: LossSpec, x, y, threshold) -> np.ndarray:
    """Per-record loss under ``spec`` at threshold(s) beta'z, vectorized."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y)
    t = np.asarray(threshold, dtype=float)
    w = spec.weight(y)
    if spec.kind == "zero_one":
        # sign(0) := 0, so ties cost half the class weight
        vals = 0.5 * (1.0 - y * np.sign(x - t))
    elif spec.kind == "linear_smooth":
        vals = smooth_surrogate(y * (x - t), "linear", spec.delta)
    elif spec.kind == "quadratic_smooth":
        vals = smooth_surrogate(y * (x - t), "quadratic", spec.delta)
    else:
        log_g, log_1mg = _bqr_log_g_log_1mg((x - t) / spec.eta, spec.tau)
        vals = -0.5 * (1.0 + y) * log_g - 0.5 * (1.0 - y) * log_1mg
    return w * vals


def zero_one_loss(coef: McidCoef, d: Datum, spec: LossSpec) -> float:
    """Weighted misclassification loss w(y) * (1 - y*sign(x - beta'z)) / 2."""
    if spec.kind != "zero_one":
        raise ValueError(f"spec.kind must be 'zero_one', got {spec.kind!r}")
    return float(_loss_values(spec, d.x, d.y, coef.beta @ d.z))


def bqr_prob(coef: McidCoef, x, z, tau: float, eta: float):
    """Working-model probability g_beta(x, z) = P(Y=+1 | x, z).

    Equals 1 - F_tau((beta'z - x)/eta) with F_tau the asymmetric Laplace CDF;
    increasing in x, with value 1 - tau exactly at the threshold.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    z = np.asarray(z, dtype=float)
    d = (np.asarray(x, dtype=float) - coef.beta @ z) / eta
    d = np.asarray(d, dtype=float)
    out = np.empty_like(d)
    left = d <= 0
    out[left] = (1.0 - tau) * np.exp(tau * d[left])
    out[~left] = 1.0 - tau * np.exp(-(1.0 - tau) * d[~left])
    return float(out) if out.ndim == 0 else out


def bqr_loss(coef: McidCoef, d: Datum, tau: float, eta: float) -> float:
    """Negative working log-likelihood of the observed label."""
    spec = LossSpec.bqr_spec(tau, eta)
    return float(_loss_values(spec, d.x, d.y, coef.beta @ d.z))


def bqr_loss_grad(coef: McidCoef, d: Datum, tau: float, eta: float) -> np.ndarray:
    """Gradient of ``bqr_loss`` in beta (closed form, stable in both tails)."""
    off = (d.x - float(coef.beta @ d.z)) / eta
    if off <= 0:
        dlog_g = -tau / eta
        w = (1.0 - tau) * math.exp(tau * off)
        dlog_1mg = (tau / eta) * w / (1.0 - w)
    else:
        v = tau * math.exp(-(1.0 - tau) * off)
        dlog_g = -((1.0 - tau) / eta) * v / (1.0 - v)
        dlog_1mg = (1.0 - tau) / eta
    scal = -0.5 * (1.0 + d.y) * dlog_g - 0.5 * (1.0 - d.y) * dlog_1mg
    return scal * d.z


def empirical_risk(spec: LossSpec, data: Dataset, coef: McidCoef) -> float:
    """Mean per-record loss over the dataset."""
    if data.n == 0:
        raise ValueError("empirical_risk requires a nonempty dataset")
    return float(np.mean(_loss_values(spec, data.x, data.y, data.z @ coef.beta)))


# ---------------------------------------------------------------------------
# population quantities by quadrature
# ---------------------------------------------------------------------------


def _layer_points(center: float, scale: float, lo: float, hi: float) -> list[float]:
    """Breakpoints resolving an exponential boundary layer around ``center``."""
    pts = []
    for k in (1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0):
        for s in (-1.0, 1.0):
            p = center + s * k * scale
            if lo < p < hi:
                pts.append(p)
    return pts


def _loss_breakpoints(spec: LossSpec, theta: float, lo: float, hi: float) -> list[float]:
    pts = [lo, hi]
    if lo < theta < hi:
        pts.append(theta)
    if spec.kind in ("linear_smooth", "quadratic_smooth"):
        for off in (spec.delta, 0.5 * spec.delta):
            for s in (-1.0, 1.0):
                p = theta + s * off
                if lo < p < hi:
                    pts.append(p)
    if spec.kind == "bqr":
        scale = spec.eta / min(spec.tau, 1.0 - spec.tau)
        pts.extend(_layer_points(theta, scale, lo, hi))
    return pts


def population_expectation(gen: GeneratorSpec,
                           f: Callable[[np.ndarray, int], np.ndarray],
                           quad: QuadratureConfig = QuadratureConfig(),
                           breakpoints: Callable[[float, float, int], list[float]] | None = None,
                           z: np.ndarray | None = None) -> float:
    """E[f(X, Y)] for a covariate-free (or fixed-z) generator by quadrature.

    ``f(x_array, y)`` must be vectorized in x.  The X-domain per class is the
    class location +- ``quad.tail_sds`` scales; ``breakpoints(lo, hi, y)``
    may add interior split points.
    """
    if z is None:
        if gen.q != 1:
            raise ValueError("population_expectation needs a covariate-free generator")
        z = np.ones(1)
    total = []
    for y, prob in ((1, gen.pi), (-1, 1.0 - gen.pi)):
        loc, sd = gen.class_x_location_scale(y, z)
        lo, hi = loc - quad.tail_sds * sd, loc + quad.tail_sds * sd
        pts = [lo, hi] + (breakpoints(lo, hi, y) if breakpoints is not None else [])
        val = integrate(lambda xs, y=y: f(xs, y) * gen.class_conditional_density(y, z, xs),
                        pts, quad)
        total.append(prob * val)
    return math.fsum(total)


def population_risk_1d(spec: LossSpec, gen: GeneratorSpec, theta: float,
                       quad: QuadratureConfig = QuadratureConfig()) -> float:
    """Population risk E[w(Y) loss(theta; X, Y)] for a scalar-threshold study."""
    theta = float(theta)

    def f(xs, y):
        return _loss_values(spec, xs, y, theta)

    def breaks(lo, hi, y):
        return _loss_breakpoints(spec, theta, lo, hi)

    return population_expectation(gen, f, quad, breakpoints=breaks)


def _z_expectation(gen: GeneratorSpec,
                   fn: Callable[[np.ndarray], np.ndarray],
                   quad: QuadratureConfig) -> np.ndarray:
    """E_Z[fn(Z)] (vector-valued) over the generator's covariate law.

    Covariates are independent normals; the rule is a tensor Gauss-Legendre
    grid with the density folded into the weights, order-doubled until two
    successive estimates agree.
    """
    k = len(gen.z_mean)
    if k == 0:
        return np.asarray(fn(np.ones(1)), dtype=float)
    prev = None
    order = max(quad.start_order, 32)
    while order <= quad.max_order:
        rules = [gauss_expectation_nodes(gen.z_mean[j], gen.z_sd[j], order, quad.tail_sds)
                 for j in range(k)]
        grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
        wgrids = np.meshgrid(*[r[1] for r in rules], indexing="ij")
        coords = np.stack([g.ravel() for g in grids], axis=1)
        wts = np.prod(np.stack([w.ravel() for w in wgrids], axis=1), axis=1)
        vals = [wts[i] * np.asarray(fn(np.concatenate(([1.0], coords[i]))), dtype=float)
                for i in range(len(wts))]
        total = np.sum(vals, axis=0)
        if prev is not None and np.max(np.abs(total - prev)) <= quad.tol * (1.0 + np.max(np.abs(total))):
            return total
        prev = total
        order *= 2
    raise RuntimeError("covariate expectation did not converge")


def _class_mass_below(gen: GeneratorSpec, y: int, z: np.ndarray, t: float,
                      quad: QuadratureConfig) -> float:
    """integral of psi_{y,z} over (-inf, t], truncated at tail_sds scales."""
    loc, sd = gen.class_x_location_scale(y, z)
    lo, hi = loc - quad.tail_sds * sd, loc + quad.tail_sds * sd
    if t <= lo:
        return 0.0
    up = min(t, hi)
    return integrate(lambda xs: gen.class_conditional_density(y, z, xs), [lo, up], quad)


def _class_mass_above(gen: GeneratorSpec, y: int, z: np.ndarray, t: float,
                      quad: QuadratureConfig) -> float:
    loc, sd = gen.class_x_location_scale(y, z)
    lo, hi = loc - quad.tail_sds * sd, loc + quad.tail_sds * sd
    if t >= hi:
        return 0.0
    dn = max(t, lo)
    return integrate(lambda xs: gen.class_conditional_density(y, z, xs), [dn, hi], quad)


def mess_residual(coef: McidCoef, gen: GeneratorSpec, tau: float,
                  quad: QuadratureConfig = QuadratureConfig()) -> np.ndarray:
    """Residual of the small-scale stationarity equation at ``coef``.

    Returns the q-vector

        tau*pi * E_Z[Z * P(X <= beta'Z | +1, Z)]
          - (1-tau)*(1-pi) * E_Z[Z * P(X > beta'Z | -1, Z)],

    which is zero exactly at the population minimizer in the eta -> 0 limit.
    """
    pi = gen.pi

    def fn(z):
        t = float(coef.beta @ z)
        below = _class_mass_below(gen, 1, z, t, quad)
        above = _class_mass_above(gen, -1, z, t, quad)
        return z * math.fsum([tau * pi * below, -(1.0 - tau) * (1.0 - pi) * above])

    return _z_expectation(gen, fn, quad)


def rhs_eta(coef: McidCoef, gen: GeneratorSpec, tau: float, eta: float,
            quad: QuadratureConfig = QuadratureConfig()) -> np.ndarray:
    """Finite-eta correction term of the stationarity equation.

    The population BQR risk is stationary at beta iff
    ``mess_residual(beta) == rhs_eta(beta, eta)`` (the gradient is
    proportional to their difference), and rhs_eta -> 0 as eta -> 0.
    """
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    pi = gen.pi

    def fn(z):
        t = float(coef.beta @ z)

        # below threshold: odds g/(1-g) against the negative-class density
        def ratio_left(xs):
            w = (1.0 - tau) * np.exp(-tau * (t - xs) / eta)
            return w / (1.0 - w) * gen.class_conditional_density(-1, z, xs)

        # above threshold: inverse odds (1-g)/g against the positive-class density
        def ratio_right(xs):
            v = tau * np.exp(-(1.0 - tau) * (xs - t) / eta)
            return v / (1.0 - v) * gen.class_conditional_density(1, z, xs)

        layer = eta / min(tau, 1.0 - tau)
        loc_m, sd_m = gen.class_x_location_scale(-1, z)
        lo, hi = loc_m - quad.tail_sds * sd_m, min(t, loc_m + quad.tail_sds * sd_m)
        left = 0.0
        if hi > lo:
            left = integrate(ratio_left, [lo, hi] + _layer_points(t, layer, lo, hi), quad)
        loc_p, sd_p = gen.class_x_location_scale(1, z)
        lo2, hi2 = max(t, loc_p - quad.tail_sds * sd_p), loc_p + quad.tail_sds * sd_p
        right = 0.0
        if hi2 > lo2:
            right = integrate(ratio_right, [lo2, hi2] + _layer_points(t, layer, lo2, hi2), quad)
        return z * math.fsum([tau * (1.0 - pi) * left, -(1.0 - tau) * pi * right])

    return _z_expectation(gen, fn, quad)


def golden_section(f: Callable[[float], float], lo: float, hi: float,
                   tol: float = 1e-4) -> float:
    """Minimizer of a unimodal scalar function to within ``tol``."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)
