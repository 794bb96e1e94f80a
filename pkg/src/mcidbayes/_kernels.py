"""Numba-compiled scalar kernels for sampling and the Gibbs sweep.

Everything here operates on a ``numpy.random.Generator`` passed in by the
caller; numba advances the generator's state in place, so kernels and
ordinary numpy code can share one stream.  These kernels are the single
implementation used both by the public distribution API and by the chain
loop, which keeps the validated code path identical everywhere.

Truncated-normal draws use the inverse-CDF method, switching to a
rejection sampler with a (truncated) exponential proposal once the whole
interval lies more than ``TAIL_Z`` standard deviations from the mean,
where CDF differences lose all precision.  GIG(1/2) draws go through the
reciprocal inverse-Gaussian identity; the inverse-Gaussian draw itself is
the standard chi-square transform, written so the small root is computed
without subtractive cancellation.
"""

import math

import numpy as np
from numba import njit

SQRT2 = math.sqrt(2.0)
TAIL_Z = 4.0  # standardized offset beyond which the tail sampler takes over
GIG_A_FLOOR = 1e-12  # floor on the x^{-1} coefficient; keeps the draw proper
_PMIN = 1e-320
_PMAX = 1.0 - 1e-16


@njit(cache=True, inline="always")
def ndtr(x):
    return 0.5 * math.erfc(-x / SQRT2)


@njit(cache=True)
def ndtri(p):
    # Wichura's PPND16 rational approximations (double precision).
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r
                    + 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r
                  + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r
                + 1.3314166789178437745e2) * r + 3.3871328727963666080e0)
        den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r
                    + 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r
                  + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r
                + 4.2313330701600911252e1) * r + 1.0)
        return q * num / den
    r = p if q < 0.0 else 1.0 - p
    if r <= 0.0:
        return -math.inf if q < 0.0 else math.inf
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r
                    + 2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r
                  + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r
                + 4.63033784615654529590e0) * r + 1.42343711074968357734e0)
        den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r
                    + 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r
                  + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r
                + 2.05319162663775882187e0) * r + 1.0)
    else:
        r -= 5.0
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                    + 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r
                  + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r
                + 5.46378491116411436990e0) * r + 6.65790464350110377720e0)
        den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r
                    + 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r
                  + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r
                + 5.99832206555887937690e-1) * r + 1.0)
    val = num / den
    return -val if q < 0.0 else val


@njit(cache=True)
def _tail_std(rng, a, b):
    """Standard normal conditioned on [a, b], a > 0 (b may be inf).

    Rejection with an Exp(lam) proposal truncated to [a, b]; the squeeze
    exp(-(x-lam)^2/2) is the exact acceptance ratio, so the draw is exact
    and the expected iteration count is bounded for any a > 0.
    """
    lam = 0.5 * (a + math.sqrt(a * a + 4.0))
    if b == math.inf:
        pmax = 1.0
    else:
        pmax = -math.expm1(-lam * (b - a))
        if pmax <= 0.0:  # zero-mass sliver: conditional collapses onto a
            return a
    while True:
        x = a - math.log1p(-rng.random() * pmax) / lam
        d = x - lam
        if rng.random() <= math.exp(-0.5 * d * d):
            return x


@njit(cache=True, inline="always")
def _trunc_std(rng, a, b):
    """Standard normal conditioned on [a, b] with a < b (either may be inf)."""
    if a > TAIL_Z:
        return _tail_std(rng, a, b)
    if b < -TAIL_Z:
        return -_tail_std(rng, -b, -a)
    # one-sided with the cut >TAIL_Z into the opposite tail: truncation mass is
    # < 4e-5, so plain rejection is exact with ~1.00003 expected draws
    if a < -TAIL_Z and b == math.inf:
        while True:
            x = rng.standard_normal()
            if x >= a:
                return x
    if b > TAIL_Z and a == -math.inf:
        while True:
            x = rng.standard_normal()
            if x <= b:
                return x
    pa = ndtr(a) if a > -math.inf else 0.0
    pb = ndtr(b) if b < math.inf else 1.0
    p = pa + rng.random() * (pb - pa)
    if p < _PMIN:
        p = _PMIN
    elif p > _PMAX:
        p = _PMAX
    return ndtri(p)


@njit(cache=True, inline="always")
def trunc_normal_scalar(rng, mean, sd, lo, hi):
    """N(mean, sd^2) conditioned on (lo, hi); result lies strictly inside."""
    a = (lo - mean) / sd if lo > -math.inf else -math.inf
    b = (hi - mean) / sd if hi < math.inf else math.inf
    v = mean + sd * _trunc_std(rng, a, b)
    if v <= lo:
        v = math.nextafter(lo, math.inf)
    elif v >= hi:
        v = math.nextafter(hi, -math.inf)
    return v


@njit(cache=True)
def trunc_normal_fill(rng, out, mean, sd, lo, hi):
    for i in range(out.shape[0]):
        out[i] = trunc_normal_scalar(rng, mean[i], sd[i], lo[i], hi[i])


@njit(cache=True, inline="always")
def inv_gauss_scalar(rng, mu, lam):
    """Inverse-Gaussian(mu, lam) via the chi-square transform (exact)."""
    y = rng.standard_normal()
    y *= y
    h = mu * y / (2.0 * lam)
    # small root mu*q with q = 1 + h - sqrt(h^2 + 2h), in cancellation-free form
    q = 1.0 / (1.0 + h + math.sqrt(h * (h + 2.0)))
    if rng.random() * (1.0 + q) <= 1.0:  # prob mu/(mu + small root)
        return mu * q
    return mu / q


@njit(cache=True, inline="always")
def gig_half_scalar(rng, a, b):
    """GIG(1/2, a, b): reciprocal of an inverse-Gaussian(sqrt(b/a), b) draw."""
    if a < GIG_A_FLOOR:
        a = GIG_A_FLOOR
    return 1.0 / inv_gauss_scalar(rng, math.sqrt(b / a), b)


@njit(cache=True)
def gig_half_fill(rng, out, a, b):
    for i in range(out.shape[0]):
        out[i] = gig_half_scalar(rng, a[i], b)


# ---------------------------------------------------------------------------
# Gibbs sweep: full conditionals of the latent-variable BQR posterior.
# Latent u_i is a truncated normal around (x_i - beta'z_i) + eta*c1*v1_i with
# variance eta^2*c2^2*v1_i, truncated to the half-line matching y_i; latent
# v1_i is GIG(1/2, resid^2/(eta*c2)^2, 2 + c1^2/c2^2); beta is conjugate
# Gaussian given (u, v1).
# ---------------------------------------------------------------------------


@njit(cache=True)
def fill_u(rng, u, x, Z, beta, v1, ypos, eta, c1, c2):
    n, q = Z.shape
    ec1 = eta * c1
    ec2 = eta * c2
    for i in range(n):
        t = 0.0
        for j in range(q):
            t += Z[i, j] * beta[j]
        m = (x[i] - t) + ec1 * v1[i]
        s = ec2 * math.sqrt(v1[i])
        if ypos[i]:
            u[i] = trunc_normal_scalar(rng, m, s, 0.0, math.inf)
        else:
            u[i] = trunc_normal_scalar(rng, m, s, -math.inf, 0.0)


@njit(cache=True)
def fill_v1(rng, v1, u, x, Z, beta, eta, c2, b_gig):
    n, q = Z.shape
    inv_ec2_sq = 1.0 / (eta * eta * c2 * c2)
    for i in range(n):
        t = 0.0
        for j in range(q):
            t += Z[i, j] * beta[j]
        d = u[i] - (x[i] - t)
        v1[i] = gig_half_scalar(rng, d * d * inv_ec2_sq, b_gig)


@njit(cache=True)
def beta_terms(u, v1, x, Z, eta, c1, c2, prior_prec, prior_prec_mu, K, h):
    """Accumulate posterior precision K and linear term h for the beta draw.

    K = prior_prec + (eta*c2)^{-2} Z' diag(1/v1) Z
    h = prior_prec_mu + (eta*c2)^{-2} Z' diag(1/v1) r,  r_i = x_i + eta*c1*v1_i - u_i
    """
    n, q = Z.shape
    s = 1.0 / (eta * eta * c2 * c2)
    ec1 = eta * c1
    for j in range(q):
        h[j] = prior_prec_mu[j]
        for k in range(q):
            K[j, k] = prior_prec[j, k]
    for i in range(n):
        wi = s / v1[i]
        ri = x[i] + ec1 * v1[i] - u[i]
        wr = wi * ri
        for j in range(q):
            zij = Z[i, j]
            h[j] += wr * zij
            wz = wi * zij
            for k in range(j + 1):
                K[j, k] += wz * Z[i, k]
    for j in range(q):
        for k in range(j + 1, q):
            K[j, k] = K[k, j]


@njit(cache=True)
def chol_lower(K):
    """In-place lower Cholesky; returns 0 or the 1-based failing minor."""
    q = K.shape[0]
    for j in range(q):
        d = K[j, j]
        for k in range(j):
            d -= K[j, k] * K[j, k]
        if not (d > 0.0) or not math.isfinite(d):
            return j + 1
        d = math.sqrt(d)
        K[j, j] = d
        for i in range(j + 1, q):
            s = K[i, j]
            for k in range(j):
                s -= K[i, k] * K[j, k]
            K[i, j] = s / d
    return 0


@njit(cache=True)
def draw_beta_ws(rng, u, v1, x, Z, eta, c1, c2, prior_prec, prior_prec_mu, K, h, beta):
    """Draw beta ~ N(K^{-1}h, K^{-1}) using workspaces K (q,q) and h (q,).

    Returns 0, or the failing leading-minor index if K is not SPD.
    """
    q = Z.shape[1]
    beta_terms(u, v1, x, Z, eta, c1, c2, prior_prec, prior_prec_mu, K, h)
    info = chol_lower(K)
    if info != 0:
        return info
    # mu_n = K^{-1} h via L y = h then L' m = y, stored back into h
    for j in range(q):
        s = h[j]
        for k in range(j):
            s -= K[j, k] * h[k]
        h[j] = s / K[j, j]
    for j in range(q - 1, -1, -1):
        s = h[j]
        for k in range(j + 1, q):
            s -= K[k, j] * h[k]
        h[j] = s / K[j, j]
    # beta = mu_n + L^{-T} xi gives the exact N(mu_n, K^{-1}) draw
    for j in range(q):
        beta[j] = rng.standard_normal()
    for j in range(q - 1, -1, -1):
        s = beta[j]
        for k in range(j + 1, q):
            s -= K[k, j] * beta[k]
        beta[j] = s / K[j, j]
    for j in range(q):
        beta[j] += h[j]
    return 0


@njit(cache=True)
def run_sweeps(rng, x, Z, ypos, beta, u, v1, eta, c1, c2, b_gig,
               prior_prec, prior_prec_mu, total, burn, thin, out):
    """Systematic scan u -> v1 -> beta for ``total`` sweeps, storing retained
    post-burn-in thinned beta draws into ``out``.  Returns 0 or a Cholesky
    failure code from the beta step."""
    q = Z.shape[1]
    K = np.empty((q, q))
    h = np.empty(q)
    kept = 0
    for m in range(total):
        fill_u(rng, u, x, Z, beta, v1, ypos, eta, c1, c2)
        fill_v1(rng, v1, u, x, Z, beta, eta, c2, b_gig)
        info = draw_beta_ws(rng, u, v1, x, Z, eta, c1, c2,
                            prior_prec, prior_prec_mu, K, h, beta)
        if info != 0:
            return info
        if m >= burn and (m - burn) % thin == 0:
            for j in range(q):
                out[kept, j] = beta[j]
            kept += 1
    return 0
