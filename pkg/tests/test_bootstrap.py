"""Residual summaries, kernel density, resampling, and interval assembly."""

import math

import numpy as np
import pytest

from changeplane import (
    BootstrapConfig,
    ScenarioSpec,
    SearchConfig,
    ValidationError,
    confidence_intervals,
    fit,
    kernel_density_at_zero,
    neighborhood_set,
    orthonormal_complement,
    parametric_bootstrap,
    residual_resampler,
    residual_summary,
    simulate_scenario,
)
from changeplane.bootstrap import neighborhood_radius_ok
from changeplane.limitlaw import LimitDraw
from changeplane.midpoint import MidpointConfig


def _m1_fit(n=400, seed=81):
    spec = ScenarioSpec(model=1, scenario=1)
    ds = simulate_scenario(spec, n, seed=seed)
    res = fit(ds, SearchConfig(seed=1), MidpointConfig(seed=2))
    return spec, ds, res


def test_residual_summary_hand_checked():
    spec, ds, res = _m1_fit()
    summ = residual_summary(ds, res.theta_hat)
    u = ds.x @ res.theta_hat.omega - res.theta_hat.gamma
    assert np.array_equal(summ.u_hat, u)
    mask = u <= 0
    fitted = np.where(mask, ds.z @ res.theta_hat.beta, ds.z @ res.theta_hat.delta)
    eps = ds.y - fitted
    assert np.array_equal(summ.eps_hat, eps)
    # centered divisor-n second moments
    assert summ.sigma2 == pytest.approx(np.mean((eps - eps.mean()) ** 2), rel=1e-12)
    assert summ.tau2 == pytest.approx(np.mean((u - u.mean()) ** 2), rel=1e-12)
    # bandwidth rule 2 * sd * n^(-1/5)
    assert summ.eta1 == pytest.approx(2 * math.sqrt(summ.tau2) * ds.n ** -0.2)
    assert summ.eta2 == pytest.approx(2 * math.sqrt(summ.sigma2) * ds.n ** -0.2)
    # plug-in covariances: sigma^2 times inverse one-sided Gram / n
    m_left = ds.z[mask].T @ ds.z[mask] / ds.n
    assert np.allclose(summ.cov_w1, summ.sigma2 * np.linalg.inv(m_left), atol=1e-10)


def test_kde_exact_formula_fixed_bandwidth():
    u = np.array([-1.0, 0.0, 0.5, 2.0])
    h = 0.7
    expect = np.mean(np.exp(-0.5 * (u / h) ** 2) / math.sqrt(2 * math.pi)) / h
    assert kernel_density_at_zero(u, bandwidth=h) == pytest.approx(expect, rel=1e-12)


def test_kde_density_oracles():
    """Known densities at zero: U(-2,2) gives 1/4, N(0,1) gives 1/sqrt(2 pi)."""
    rng = np.random.default_rng(202)
    u = rng.uniform(-2, 2, 100_000)
    v = rng.standard_normal(100_000)
    assert abs(kernel_density_at_zero(u) - 0.25) < 0.01
    assert abs(kernel_density_at_zero(v) - 1 / math.sqrt(2 * math.pi)) < 0.01


def test_residual_resampler_moments():
    spec, ds, res = _m1_fit()
    summ = residual_summary(ds, res.theta_hat)
    sampler = residual_resampler(summ.eps_hat, summ.eps_bar, ds.n)
    rng = np.random.default_rng(7)
    draws = sampler(rng, 400_000)
    target_var = summ.sigma2 + summ.eta2 ** 2
    assert abs(draws.mean()) < 0.005
    assert np.var(draws) == pytest.approx(target_var, rel=0.02)


def test_orthonormal_complement_identities():
    rng = np.random.default_rng(9)
    for p in range(2, 9):
        omega = rng.standard_normal(p)
        omega /= np.linalg.norm(omega)
        basis = orthonormal_complement(omega)
        assert basis.shape == (p, p - 1)
        assert np.max(np.abs(basis.T @ basis - np.eye(p - 1))) < 1e-10
        assert np.max(np.abs(basis.T @ omega)) < 1e-10
        proj = np.outer(omega, omega) + basis @ basis.T
        assert np.max(np.abs(proj - np.eye(p))) < 1e-10


def test_neighborhood_set_rule():
    spec, ds, res = _m1_fit(n=300)
    summ = residual_summary(ds, res.theta_hat)
    cfg = BootstrapConfig(seed=3)
    idx, t_hat = neighborhood_set(ds, summ.u_hat, cfg)
    r = math.ceil(300 ** (2.0 / 3.0))
    assert idx.size == r
    a = np.abs(summ.u_hat)
    assert t_hat == np.sort(a)[r - 1]
    assert np.all(np.isin(np.argsort(a, kind="stable")[:r], idx))
    # for model 1 the radius should track r / (2 f0 n) (f0 = 1/4)
    assert neighborhood_radius_ok(t_hat, r, 0.25, 300)


def test_neighborhood_set_stable_under_ties():
    spec = ScenarioSpec(model=1, scenario=1)
    ds = simulate_scenario(spec, 50, seed=5)
    u = np.zeros(50)  # all tied
    idx, t_hat = neighborhood_set(ds, u, BootstrapConfig())
    r = math.ceil(50 ** (2.0 / 3.0))
    assert np.array_equal(idx, np.arange(r))  # stable order keeps row order
    assert t_hat == 0.0


def _fake_draws(b, d, p, seed):
    rng = np.random.default_rng(seed)
    draws = []
    for _ in range(b):
        # mirror the real map omega_dev = obar @ g1: identically zero at p = 1
        om = rng.standard_normal(p) if p > 1 else np.zeros(1)
        g2 = float(rng.standard_normal())
        draws.append(
            LimitDraw(
                w1=rng.standard_normal(d),
                w2=rng.standard_normal(d),
                g1_mean=np.zeros(max(p - 1, 0)),
                g2_mean=g2,
                omega_dev_mean=om,
                gamma_dev_mean=g2,
                g1_mode=np.zeros(max(p - 1, 0)),
                g2_mode=g2,
                omega_dev_mode=om,
                gamma_dev_mode=g2,
                mode_unique=True,
                k_final=8.0,
                n_jumps=10,
                exact=True,
            )
        )
    return draws


def test_confidence_interval_inversion_oracle():
    """est - q_hi / scale .. est - q_lo / scale, checked against numpy
    quantiles on synthetic draws."""
    spec = ScenarioSpec(model=1, scenario=1)
    theta = spec.theta0
    draws = _fake_draws(500, theta.d, theta.p, seed=11)
    cfg = BootstrapConfig(b_draws=500, level=0.9)
    cis = confidence_intervals(theta, draws, cfg, n=100)
    w1_1 = np.array([d.w1[0] for d in draws])
    lo, hi = np.quantile(w1_1, [0.05, 0.95])
    row = cis["beta1"]
    est = theta.beta[0]
    assert row.lo == pytest.approx(min(est - hi / 10.0, est))
    assert row.hi == pytest.approx(max(est - lo / 10.0, est))
    gm = np.array([d.gamma_dev_mean for d in draws])
    lo_g, hi_g = np.quantile(gm, [0.05, 0.95])
    grow = cis["gamma"]
    assert grow.lo == pytest.approx(min(theta.gamma - hi_g / 100.0, theta.gamma))
    assert grow.hi == pytest.approx(max(theta.gamma - lo_g / 100.0, theta.gamma))


def test_confidence_intervals_nest_with_level():
    spec = ScenarioSpec(model=1, scenario=1)
    theta = spec.theta0
    draws = _fake_draws(400, theta.d, theta.p, seed=12)
    wide = confidence_intervals(theta, draws, BootstrapConfig(level=0.95), n=200)
    narrow = confidence_intervals(theta, draws, BootstrapConfig(level=0.8), n=200)
    for name in wide.names():
        w, nn = wide[name], narrow[name]
        assert w.lo <= nn.lo and nn.hi <= w.hi


def test_confidence_intervals_contain_estimate_and_p1_omega_degenerate():
    spec = ScenarioSpec(model=1, scenario=1)
    theta = spec.theta0
    draws = _fake_draws(300, theta.d, theta.p, seed=13)
    cis = confidence_intervals(theta, draws, BootstrapConfig(level=0.95), n=150)
    for row in cis.rows:
        assert row.lo <= row.estimate <= row.hi
    # p = 1: omega deviations are identically zero, interval collapses
    om = cis["omega1"]
    assert om.lo == om.estimate == om.hi == 1.0


def test_contrast_validation_and_combination():
    spec = ScenarioSpec(model=1, scenario=1)
    theta = spec.theta0
    d, p = theta.d, theta.p
    draws = _fake_draws(250, d, p, seed=14)
    # contrast on gamma alone reproduces the gamma interval
    c = np.zeros(2 * d + p + 1)
    c[-1] = 1.0
    cfg = BootstrapConfig(level=0.9, contrasts=(tuple(c),))
    cis = confidence_intervals(theta, draws, cfg, n=100)
    g, ct = cis["gamma"], cis["contrast1"]
    assert ct.lo == pytest.approx(g.lo) and ct.hi == pytest.approx(g.hi)

    with pytest.raises(ValidationError, match="length"):
        confidence_intervals(
            theta, draws, BootstrapConfig(contrasts=((1.0, 0.0),)), n=100
        )
    zero = tuple(np.zeros(2 * d + p + 1))
    with pytest.raises(ValidationError, match="zero"):
        confidence_intervals(theta, draws, BootstrapConfig(contrasts=(zero,)), n=100)


def test_parametric_bootstrap_deterministic_and_covering():
    spec, ds, res = _m1_fit(n=500, seed=21)
    cfg = BootstrapConfig(b_draws=150, level=0.95, seed=77)
    draws1 = parametric_bootstrap(ds, res.theta_hat, cfg)
    draws2 = parametric_bootstrap(ds, res.theta_hat, cfg)
    assert len(draws1) == 150
    assert all(
        a.g2_mean == b.g2_mean and np.array_equal(a.w1, b.w1)
        for a, b in zip(draws1, draws2)
    )
    cis = confidence_intervals(res.theta_hat, draws1, cfg, ds.n)
    truth = spec.theta0
    assert cis["gamma"].covers(truth.gamma)
    assert cis["beta1"].covers(truth.beta[0])
