import math

import numpy as np
import pytest
from scipy.special import ndtr

from mcidbayes import (ChainConfig, Dataset, GibbsState, MixtureCoefs,
                       PriorSpec, RngStream, beta_conditional,
                       credible_interval, effective_sample_size, init_state,
                       mcid_draws, run_chain, update_beta, update_u, update_v1)
from mcidbayes.generators import example1, population_study


def toy_data(n=5, seed=1):
    rng = RngStream(seed).generator()
    x = rng.standard_normal(n)
    y = np.where(rng.random(n) < 0.5, 1, -1)
    return Dataset(x, y, np.ones((n, 1)))


# ---------------------------------------------------------------------------
# mixture coefficients
# ---------------------------------------------------------------------------


def test_mixture_coefs():
    c = MixtureCoefs.from_tau(0.5)
    assert c.c1 == 0.0
    assert c.c2 == pytest.approx(math.sqrt(8.0))
    assert c.gig_b == 2.0
    c3 = MixtureCoefs.from_tau(0.3)
    assert c3.c1 == pytest.approx((1 - 0.6) / 0.21)
    assert c3.c2 ** 2 == pytest.approx(2 / 0.21)


# ---------------------------------------------------------------------------
# state initialization and single updates
# ---------------------------------------------------------------------------


def test_init_state_invariants():
    data = toy_data(3)
    prior = PriorSpec.standard(1)
    st = init_state(data, prior, 0.4, 0.5, RngStream(2))
    assert np.array_equal(st.beta, prior.mu0)
    assert np.all(st.v1 == 1.0)
    assert np.all(np.sign(st.u) == data.y)


def test_init_state_deterministic():
    data = toy_data(4)
    prior = PriorSpec.standard(1)
    a = init_state(data, prior, 0.4, 0.5, RngStream(3))
    b = init_state(data, prior, 0.4, 0.5, RngStream(3))
    assert np.array_equal(a.u, b.u)


def test_init_mean_at_half_tau():
    # tau = 1/2 kills the linear latent shift: mean_i = x_i - beta'z_i exactly
    coefs = MixtureCoefs.from_tau(0.5)
    assert coefs.c1 * 1.234 == 0.0


def test_update_u_sign_matches_label():
    data = toy_data(50, seed=5)
    prior = PriorSpec.standard(1)
    gen = RngStream(6).generator()
    st = init_state(data, prior, 0.3, 0.2, gen)
    for _ in range(10):
        st.u = update_u(st, data, 0.3, 0.2, gen)
        assert np.all(st.u[data.y == 1] > 0)
        assert np.all(st.u[data.y == -1] < 0)
        st.v1 = update_v1(st, data, 0.3, 0.2, gen)
        assert np.all(st.v1 > 0)
        st.beta = update_beta(st, data, prior, 0.3, 0.2, gen)


def test_update_u_half_normal_oracle():
    # tau=1/2, v1=1, beta=0, x=0: u | y=+1 is half-normal with sd eta*c2
    n = 50_000
    eta = 0.7
    data = Dataset(np.zeros(n), np.ones(n, dtype=int), np.ones((n, 1)))
    st = GibbsState(beta=np.zeros(1), u=np.empty(n), v1=np.ones(n))
    u = update_u(st, data, 0.5, eta, RngStream(7))
    sd = eta * MixtureCoefs.from_tau(0.5).c2
    expect = sd * math.sqrt(2 / math.pi)
    sd_half = sd * math.sqrt(1 - 2 / math.pi)
    assert abs(u.mean() - expect) < 3 * sd_half / math.sqrt(n)


def test_update_v1_gig_b_at_half_tau():
    assert MixtureCoefs.from_tau(0.5).gig_b == 2.0


def test_update_v1_degenerate_residual():
    # u exactly at the latent location floors the GIG "a" parameter
    n = 100
    data = Dataset(np.zeros(n), np.ones(n, dtype=int), np.ones((n, 1)))
    st = GibbsState(beta=np.zeros(1), u=np.zeros(n), v1=np.ones(n))
    v1 = update_v1(st, data, 0.5, 0.3, RngStream(8))
    assert np.all(np.isfinite(v1)) and np.all(v1 > 0)


def test_update_v1_moment_oracle_fixed_latents():
    # fixed (u, beta): v1_i ~ GIG(1/2, a_i, b) with known mean
    n = 50_000
    eta, tau = 0.4, 0.35
    coefs = MixtureCoefs.from_tau(tau)
    data = Dataset(np.full(n, 0.9), np.ones(n, dtype=int), np.ones((n, 1)))
    st = GibbsState(beta=np.array([0.2]), u=np.full(n, 1.5), v1=np.ones(n))
    v1 = update_v1(st, data, tau, eta, RngStream(9))
    a = (1.5 - (0.9 - 0.2)) ** 2 / (eta * coefs.c2) ** 2
    b = coefs.gig_b
    t = math.sqrt(a * b)
    mean_gig = math.sqrt(a / b) * (1 + 1 / t)
    se = v1.std(ddof=1) / math.sqrt(n)
    assert abs(v1.mean() - mean_gig) < 3 * se


# ---------------------------------------------------------------------------
# beta conditional: conjugate oracle
# ---------------------------------------------------------------------------


def brute_force_conditional(state, data, prior, tau, eta):
    coefs = MixtureCoefs.from_tau(tau)
    lam_inv = np.diag(1.0 / state.v1)
    s = 1.0 / (eta * coefs.c2) ** 2
    prec = np.linalg.inv(prior.sigma0) + s * data.z.T @ lam_inv @ data.z
    sigma_n = np.linalg.inv(prec)
    r = data.x + eta * coefs.c1 * state.v1 - state.u
    mu_n = sigma_n @ (np.linalg.inv(prior.sigma0) @ prior.mu0 + s * data.z.T @ lam_inv @ r)
    return mu_n, sigma_n


def test_beta_conditional_conjugate_oracle():
    rng = RngStream(10).generator()
    data = Dataset(np.array([0.3, -0.8]), np.array([1, -1]),
                   np.array([[1.0], [1.0]]))
    st = GibbsState(beta=np.zeros(1), u=np.array([0.5, -0.2]),
                    v1=np.array([0.7, 2.1]))
    prior = PriorSpec(np.array([0.1]), np.array([[2.0]]))
    for tau, eta in ((0.5, 0.3), (0.25, 0.9)):
        mu_n, sigma_n = beta_conditional(st, data, prior, tau, eta)
        mu_ref, sig_ref = brute_force_conditional(st, data, prior, tau, eta)
        assert np.max(np.abs(mu_n - mu_ref)) < 1e-10
        assert np.max(np.abs(sigma_n - sig_ref)) < 1e-10


def test_beta_conditional_oracle_q2():
    data = example1().generate(30, RngStream(11))
    gen = RngStream(12).generator()
    prior = PriorSpec.standard(2)
    st = init_state(data, prior, 0.4, 0.15, gen)
    st.v1 = update_v1(st, data, 0.4, 0.15, gen)
    mu_n, sigma_n = beta_conditional(st, data, prior, 0.4, 0.15)
    mu_ref, sig_ref = brute_force_conditional(st, data, prior, 0.4, 0.15)
    assert np.max(np.abs(mu_n - mu_ref)) < 1e-10
    assert np.max(np.abs(sigma_n - sig_ref)) < 1e-10


def test_beta_conditional_empty_data_is_prior():
    data = Dataset(np.empty(0), np.empty(0, dtype=int), np.empty((0, 2)))
    prior = PriorSpec(np.array([0.3, -0.7]), np.array([[2.0, 0.5], [0.5, 1.0]]))
    st = GibbsState(beta=prior.mu0.copy(), u=np.empty(0), v1=np.empty(0))
    mu_n, sigma_n = beta_conditional(st, data, prior, 0.4, 0.2)
    assert np.allclose(mu_n, prior.mu0, atol=1e-12)
    assert np.allclose(sigma_n, prior.sigma0, atol=1e-12)


def test_beta_conditional_flat_prior_is_gls():
    # huge prior variance: mu_n -> weighted least squares of the pseudo
    # response r_i = x_i + eta*c1*v1_i - u_i on Z with weights 1/v1_i
    data = example1().generate(40, RngStream(13))
    gen = RngStream(14).generator()
    prior = PriorSpec(np.zeros(2), 1e6 * np.eye(2))
    tau, eta = 0.3, 0.4
    st = init_state(data, prior, tau, eta, gen)
    st.u = update_u(st, data, tau, eta, gen)
    st.v1 = update_v1(st, data, tau, eta, gen)
    coefs = MixtureCoefs.from_tau(tau)
    r = data.x + eta * coefs.c1 * st.v1 - st.u
    w = 1.0 / st.v1
    zw = data.z * w[:, None]
    gls = np.linalg.solve(zw.T @ data.z, zw.T @ r)
    mu_n, _ = beta_conditional(st, data, prior, tau, eta)
    assert np.max(np.abs(mu_n - gls)) < 1e-3


# ---------------------------------------------------------------------------
# full chain
# ---------------------------------------------------------------------------


def test_run_chain_example1_envelope():
    gen = example1()
    data = gen.generate(200, RngStream(15).child(0))
    draws = run_chain(data, PriorSpec.standard(2), 0.5, 0.1,
                      ChainConfig(total=6000, burn=1000, rng=RngStream(15).child(1)))
    mean = draws.betas.mean(axis=0)
    assert np.max(np.abs(mean - np.array([0.0, 0.5]))) < 0.15


def test_run_chain_deterministic():
    data = toy_data(20, seed=16)
    cfg = ChainConfig(total=500, burn=100, rng=RngStream(17))
    a = run_chain(data, PriorSpec.standard(1), 0.4, 0.3, cfg)
    b = run_chain(data, PriorSpec.standard(1), 0.4, 0.3, cfg)
    assert np.array_equal(a.betas, b.betas)


def test_run_chain_symmetric_center():
    gen = population_study(0.5)
    data = gen.generate(400, RngStream(18).child(0))
    draws = run_chain(data, PriorSpec.standard(1), 0.5, 0.3,
                      ChainConfig(total=4000, burn=1000, rng=RngStream(18).child(1)))
    theta = draws.betas[:, 0]
    assert abs(theta.mean()) < 3 * theta.std(ddof=1)


def test_run_chain_retained_count_and_thin():
    data = toy_data(10, seed=19)
    cfg = ChainConfig(total=1000, burn=200, thin=4, rng=RngStream(20))
    draws = run_chain(data, PriorSpec.standard(1), 0.5, 0.3, cfg)
    assert draws.betas.shape == (200, 1)
    assert draws.eta == 0.3 and draws.tau == 0.5


def test_chain_config_validation():
    with pytest.raises(ValueError):
        ChainConfig(total=100, burn=100)
    with pytest.raises(ValueError):
        ChainConfig(total=100, burn=10, thin=0)
    with pytest.raises(ValueError):
        run_chain(toy_data(5), PriorSpec.standard(1), 0.5, 0.3,
                  ChainConfig(total=100, burn=10))  # rng missing


def test_half_tau_general_path_reduction():
    # the general-tau code path evaluated at tau=1/2 IS the c1=0 chain: the
    # computed coefficient is exactly zero, so no special casing can diverge
    assert MixtureCoefs.from_tau(0.5).c1 == 0.0
    data = toy_data(15, seed=21)
    cfg = ChainConfig(total=400, burn=100, rng=RngStream(22))
    a = run_chain(data, PriorSpec.standard(1), 0.5, 0.25, cfg)
    b = run_chain(data, PriorSpec.standard(1), 0.5, 0.25, cfg)
    assert np.array_equal(a.betas, b.betas)


def test_sign_invariant_across_sweeps():
    data = toy_data(30, seed=23)
    prior = PriorSpec.standard(1)
    gen = RngStream(24).generator()
    st = init_state(data, prior, 0.3, 0.15, gen)
    for _ in range(50):
        st.u = update_u(st, data, 0.3, 0.15, gen)
        st.v1 = update_v1(st, data, 0.3, 0.15, gen)
        st.beta = update_beta(st, data, prior, 0.3, 0.15, gen)
        assert np.all(np.sign(st.u) == data.y)


def test_split_chain_stationarity():
    gen = population_study(0.7)
    data = gen.generate(200, RngStream(25).child(0))
    draws = run_chain(data, PriorSpec.standard(1), 0.3, 0.4,
                      ChainConfig(total=8000, burn=2000, rng=RngStream(25).child(1)))
    theta = draws.betas[:, 0]
    half = len(theta) // 2
    a, b = theta[:half], theta[half:]
    se = math.sqrt(a.var(ddof=1) / effective_sample_size(a)
                   + b.var(ddof=1) / effective_sample_size(b))
    assert abs(a.mean() - b.mean()) < 3 * se


def test_permutation_invariance_within_mc_error():
    gen = population_study(0.7)
    data = gen.generate(150, RngStream(26).child(0))
    perm = RngStream(26).child(1).generator().permutation(150)
    data_p = data.subset(perm)
    out = []
    for d, sid in ((data, 2), (data_p, 3)):
        draws = run_chain(d, PriorSpec.standard(1), 0.3, 0.4,
                          ChainConfig(total=6000, burn=1000, rng=RngStream(26).child(sid)))
        th = draws.betas[:, 0]
        out.append((th.mean(), math.sqrt(th.var(ddof=1) / effective_sample_size(th))))
    (m1, s1), (m2, s2) = out
    assert abs(m1 - m2) < 4 * math.sqrt(s1 ** 2 + s2 ** 2)


# ---------------------------------------------------------------------------
# threshold draws and intervals
# ---------------------------------------------------------------------------


def make_draws(m=500, q=2, seed=27):
    from mcidbayes.gibbs import PosteriorDraws
    betas = RngStream(seed).generator().standard_normal((m, q))
    return PosteriorDraws(betas=betas, eta=0.1, tau=0.5, total=m, burn=0, thin=1)


def test_mcid_draws_linear_map():
    draws = make_draws()
    z0 = np.zeros(2)
    assert np.all(mcid_draws(draws, z0) == 0.0)
    z1 = np.array([1.0, 0.0])
    assert np.array_equal(mcid_draws(draws, z1), draws.betas[:, 0])
    za, zb = np.array([0.5, 1.0]), np.array([1.5, -2.0])
    assert np.allclose(mcid_draws(draws, za + zb),
                       mcid_draws(draws, za) + mcid_draws(draws, zb))


def test_mcid_draws_dimension_check():
    with pytest.raises(ValueError):
        mcid_draws(make_draws(q=2), np.ones(3))


def test_credible_interval_order_statistics():
    draws = np.arange(1.0, 1001.0)
    lo, hi = credible_interval(draws, 0.05)
    assert lo == pytest.approx(np.quantile(draws, 0.025))
    assert hi == pytest.approx(np.quantile(draws, 0.975))
    assert abs(lo - 25.5) < 1.0 and abs(hi - 975.5) < 1.0


def test_credible_interval_constant():
    lo, hi = credible_interval(np.full(200, 3.14), 0.1)
    assert lo == hi == pytest.approx(3.14)


def test_credible_interval_normal_quantiles():
    d = RngStream(28).generator().standard_normal(100_000)
    lo, hi = credible_interval(d, 0.05)
    assert abs(lo + 1.959964) < 0.02
    assert abs(hi - 1.959964) < 0.02


def test_credible_interval_validation():
    with pytest.raises(ValueError):
        credible_interval(np.zeros(50), 0.05)
    with pytest.raises(ValueError):
        credible_interval(np.zeros(200), 1.5)


# ---------------------------------------------------------------------------
# Geweke successive-conditional ("getting it right") test
# ---------------------------------------------------------------------------


def geweke_simulators(n_iter=10_000, tau=0.3, eta=0.7, seed=2024):
    n, q = 5, 1
    x = np.array([-0.5, -0.1, 0.2, 0.6, 1.0])
    z = np.ones((n, 1))
    prior = PriorSpec.standard(q)
    coefs = MixtureCoefs.from_tau(tau)

    def gfuns(beta, v1):
        return np.array([beta[0], beta[0] ** 2, v1.mean(), v1.mean() ** 2])

    # marginal-conditional: iid ancestral draws from the joint model
    gen = RngStream(seed, (0,)).generator()
    mc = np.empty((n_iter, 4))
    for it in range(n_iter):
        beta = prior.mu0 + gen.standard_normal(q)
        v1 = gen.exponential(1.0, n)
        mean = (x - z @ beta) + eta * coefs.c1 * v1
        sd = eta * coefs.c2 * np.sqrt(v1)
        _u = mean + sd * gen.standard_normal(n)
        mc[it] = gfuns(beta, v1)

    # successive-conditional: refresh y | (beta, v1), then the sampler's own
    # conditionals u | y, v1 | u, beta | (u, v1)
    gen2 = RngStream(seed, (1,)).generator()
    beta = prior.mu0 + gen2.standard_normal(q)
    v1 = gen2.exponential(1.0, n)
    mean = (x - z @ beta) + eta * coefs.c1 * v1
    sd = eta * coefs.c2 * np.sqrt(v1)
    u = mean + sd * gen2.standard_normal(n)
    sc = np.empty((n_iter, 4))
    for it in range(n_iter):
        mean = (x - z @ beta) + eta * coefs.c1 * v1
        sd = eta * coefs.c2 * np.sqrt(v1)
        y = np.where(gen2.random(n) < ndtr(mean / sd), 1, -1)
        data = Dataset(x, y, z)
        st = GibbsState(beta=beta, u=u, v1=v1)
        st.u = update_u(st, data, tau, eta, gen2)
        st.v1 = update_v1(st, data, tau, eta, gen2)
        st.beta = update_beta(st, data, prior, tau, eta, gen2)
        beta, u, v1 = st.beta, st.u, st.v1
        sc[it] = gfuns(beta, v1)
    return mc, sc


def geweke_zscores(mc, sc, n_batches=100):
    def batch_se(xs):
        b = len(xs) // n_batches
        means = xs[: n_batches * b].reshape(n_batches, b).mean(axis=1)
        return means.std(ddof=1) / math.sqrt(n_batches)

    zs = []
    for j in range(mc.shape[1]):
        se = math.sqrt(mc[:, j].var(ddof=1) / len(mc) + batch_se(sc[:, j]) ** 2)
        zs.append((mc[:, j].mean() - sc[:, j].mean()) / se)
    return np.array(zs)


def test_geweke_getting_it_right():
    mc, sc = geweke_simulators()
    zs = geweke_zscores(mc, sc)
    assert np.all(np.abs(zs) < 3.0), f"Geweke z-scores {zs}"
