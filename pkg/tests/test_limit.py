"""Limit-law machinery: jump processes, the capture cost, and its minimizers."""

import numpy as np
import pytest

from changeplane import (
    ScenarioSpec,
    extend_jump_process,
    limit_corridor,
    limit_mean_midargmin,
    limit_mode_midargmin,
    minimize_q02,
    sample_jump_process,
    sample_limit_distribution,
    sample_w,
    scenario_limit_spec,
    sigma_covariances,
)
from changeplane.limitlaw import (
    JumpProcessDraw,
    _capture_cost,
    _certified_minimizer,
    default_window,
    g1_box_halfwidth,
    levelset_extents,
    window_is_sufficient,
)


def _draw_p1(u_minus, e_minus, u_plus, e_plus, k=5.0):
    return JumpProcessDraw(
        k=k,
        u_minus=np.asarray(u_minus, dtype=float),
        xt_minus=np.zeros((len(u_minus), 0)),
        e_minus=np.asarray(e_minus, dtype=float),
        u_plus=np.asarray(u_plus, dtype=float),
        xt_plus=np.zeros((len(u_plus), 0)),
        e_plus=np.asarray(e_plus, dtype=float),
        x_bound=1.0,
        q=1,
    )


def test_capture_cost_hand_case_p1():
    # minus jump at u is captured iff g2 < -u; plus jump iff g2 >= u
    draw = _draw_p1([1.0, 3.0], [-2.0, 5.0], [2.0], [-1.0])
    probes = np.array([[0.0], [-2.0], [-4.0], [2.5], [-1.0]])
    cost, cap_m, cap_p = _capture_cost(draw, probes)
    assert cost.tolist() == [0.0, -2.0, 3.0, -1.0, 0.0]
    assert cap_m[1].tolist() == [True, False]
    assert cap_p[3].tolist() == [True]
    # g2 = -1 captures nothing: the minus boundary is strict
    assert not cap_m[4].any() and not cap_p[4].any()


def test_minimize_q02_hand_case_p1():
    draw = _draw_p1([1.0, 3.0], [-2.0, 5.0], [2.0], [-1.0])
    res = minimize_q02(draw, 5.0)
    assert res.exact
    assert res.q_min == -2.0
    # captured minus jumps flip to +1; uncaptured plus jumps keep +1
    assert res.v_minus.tolist() == [1, -1]
    assert res.v_plus.tolist() == [1]
    # the argmin cell is the g2 interval [-3, -1)
    c = limit_corridor(draw, res, res.g1)
    assert c.c_l == -3.0 and c.c_u == -1.0
    assert c.c_l <= res.g2 < c.c_u


def test_minimize_q02_zero_when_all_costs_positive():
    draw = _draw_p1([1.0, 2.0], [3.0, 4.0], [1.5], [2.0])
    res = minimize_q02(draw, 5.0)
    assert res.q_min == 0.0  # capturing nothing is optimal


def test_minimize_q02_hand_case_p2():
    """Two minus jumps and one plus jump in the plane: the best cell
    captures the second minus jump and the plus jump, worked out by hand
    from the three capture inequalities."""
    draw = JumpProcessDraw(
        k=3.0,
        u_minus=np.array([1.0, 2.0]),
        xt_minus=np.array([[1.0], [-1.0]]),
        e_minus=np.array([4.0, -3.0]),
        u_plus=np.array([1.5]),
        xt_plus=np.array([[0.5]]),
        e_plus=np.array([-2.0]),
        x_bound=1.0,
        q=2,
    )
    res = minimize_q02(draw, 3.0)
    assert res.exact
    assert res.q_min == pytest.approx(-5.0)
    assert res.v_minus.tolist() == [-1, 1]
    assert res.v_plus.tolist() == [-1]  # captured plus jump flips to -1
    # feasible cell: 1.5 g1 < -3.5 and 0.5 g1 + 1.5 <= g2 < -2 - g1
    assert res.g1[0] < -3.5 / 1.5
    assert 0.5 * res.g1[0] + 1.5 <= res.g2 < -2.0 - res.g1[0]


def test_minimize_q02_beats_random_probes():
    spec = scenario_limit_spec(ScenarioSpec(model=2, scenario=1))
    k = default_window(spec.f0)
    rng = np.random.default_rng(55)
    for seed in (1, 2, 3):
        draw = sample_jump_process(spec, k, seed=seed)
        res = minimize_q02(draw, k)
        assert res.q_min <= 0.0
        b1 = g1_box_halfwidth(draw, k)
        probes = np.column_stack(
            [rng.uniform(-b1, b1, 20_000), rng.uniform(-k, k, 20_000)]
        )
        cost, _, _ = _capture_cost(draw, probes)
        assert res.q_min <= cost.min() + 1e-12


def test_jump_process_statistics():
    spec = scenario_limit_spec(ScenarioSpec(model=1, scenario=1))
    k = 40.0
    gaps = []
    costs = []
    for seed in range(60):
        draw = sample_jump_process(spec, k, seed=seed)
        for u in (draw.u_minus, draw.u_plus):
            gaps.extend(np.diff(np.concatenate([[0.0], u])))
        costs.extend(draw.e_minus)
        costs.extend(draw.e_plus)
    # exponential gaps at rate f0; cost mean E[(c'z)^2] = 10 for model 1
    assert np.mean(gaps) == pytest.approx(1.0 / spec.f0, rel=0.05)
    assert np.mean(costs) == pytest.approx(10.0, rel=0.1)


def test_jump_marks_respect_support():
    spec = scenario_limit_spec(ScenarioSpec(model=3, scenario=1))
    draw = sample_jump_process(spec, 20.0, seed=8)
    assert np.linalg.norm(spec.obar.T @ spec.omega0) < 1e-12
    for xt in (draw.xt_minus, draw.xt_plus):
        assert xt.shape[1] == spec.p - 1
        assert np.max(np.abs(xt)) <= spec.x_bound + 1e-12


def test_extension_keeps_prefix():
    spec = scenario_limit_spec(ScenarioSpec(model=2, scenario=1))
    draw = sample_jump_process(spec, 6.0, seed=14)
    before = (
        draw.u_minus.copy(), draw.xt_minus.copy(), draw.e_minus.copy(),
        draw.u_plus.copy(), draw.xt_plus.copy(), draw.e_plus.copy(),
    )
    extend_jump_process(draw, spec, 24.0)
    assert draw.k == 24.0
    assert draw.u_minus.size >= before[0].size
    assert np.array_equal(draw.u_minus[: before[0].size], before[0])
    assert np.array_equal(draw.xt_minus[: before[1].shape[0]], before[1])
    assert np.array_equal(draw.e_minus[: before[2].size], before[2])
    assert np.array_equal(draw.u_plus[: before[3].size], before[3])
    assert np.array_equal(draw.e_plus[: before[5].size], before[5])
    # horizon actually reached
    assert draw.u_minus[-1] > 4 * 24.0 and draw.u_plus[-1] > 4 * 24.0


def test_jump_process_deterministic():
    spec = scenario_limit_spec(ScenarioSpec(model=2, scenario=1))
    a = sample_jump_process(spec, 8.0, seed=3)
    b = sample_jump_process(spec, 8.0, seed=3)
    assert np.array_equal(a.u_minus, b.u_minus)
    assert np.array_equal(a.e_plus, b.e_plus)
    c = sample_jump_process(spec, 8.0, seed=4)
    assert not np.array_equal(a.u_minus, c.u_minus)


def test_gate_counts_band():
    draw = _draw_p1([1.0, 11.0], [1.0, 1.0], [25.0], [1.0], k=5.0)
    gm, gp = draw.gate_counts(5.0)
    assert gm == 1  # u = 11 lies in (10, 20]
    assert gp == 0  # u = 25 is beyond 4k
    assert not window_is_sufficient(draw, minimize_q02(draw, 5.0), 5.0)


def test_levelset_extents_and_interiority():
    spec = scenario_limit_spec(ScenarioSpec(model=1, scenario=1))
    draw, res = _certified_minimizer(spec, 0, seed=31, k_init=None, max_doublings=16)
    lo, hi = levelset_extents(draw, res, draw.k)
    c = limit_corridor(draw, res, res.g1)
    assert lo[-1] == max(c.c_l, -0.99 * draw.k)
    assert hi[-1] == min(c.c_u, 0.99 * draw.k)
    assert window_is_sufficient(draw, res, draw.k)


@pytest.mark.parametrize("model", [1, 2])
def test_limit_midpoints_stay_in_level_set(model):
    spec = scenario_limit_spec(ScenarioSpec(model=model, scenario=1))
    rng = np.random.default_rng(77)
    for b in range(6):
        draw, res = _certified_minimizer(spec, b, seed=19, k_init=None, max_doublings=16)
        g1m, g2m = limit_mean_midargmin(draw, res, rng)
        cm = limit_corridor(draw, res, g1m)
        assert cm.c_l <= g2m < cm.c_u
        cost_m, _, _ = _capture_cost(draw, np.append(g1m, g2m)[None, :])
        assert cost_m[0] == pytest.approx(res.q_min, abs=1e-12)

        g1o, g2o, unique = limit_mode_midargmin(draw, res)
        co = limit_corridor(draw, res, g1o)
        assert co.c_l <= g2o < co.c_u
        # the mode direction maximizes the corridor width (LP tolerance)
        assert co.c_r >= cm.c_r - 1e-6
        if model == 1:
            assert unique
            assert g1m.size == 0 and g1o.size == 0
            assert g2m == g2o  # p = 1: both midpoints are the g2 midpoint


def test_sample_w_covariance():
    spec = scenario_limit_spec(ScenarioSpec(model=1, scenario=1))
    draws = sample_w(spec.cov_w1, seed_or_rng=6, size=60_000)
    emp = draws.T @ draws / draws.shape[0]
    rel = np.linalg.norm(emp - spec.cov_w1) / np.linalg.norm(spec.cov_w1)
    assert rel < 0.02
    assert np.max(np.abs(draws.mean(axis=0))) < 0.02


@pytest.mark.parametrize("model", [1, 2, 3])
def test_sigma_covariances_analytic(model):
    """Sigma_j = sigma^2 (P(side) E[zz'])^{-1} since Z is independent of X
    in every benchmark design."""
    spec = ScenarioSpec(model=model, scenario=1, sigma=1.3)
    s1, s2 = sigma_covariances(spec)
    e_zz = spec.e_zz
    expected1 = 1.3 ** 2 * np.linalg.inv(spec.p_left * e_zz)
    expected2 = 1.3 ** 2 * np.linalg.inv((1 - spec.p_left) * e_zz)
    assert np.allclose(s1, expected1, rtol=1e-10)
    assert np.allclose(s2, expected2, rtol=1e-10)


def test_model1_w1_covariance_value():
    # sigma = 1: Sigma_1 = (4/3) [[2,-2],[-2,4]]
    spec = scenario_limit_spec(ScenarioSpec(model=1, scenario=1))
    target = (4.0 / 3.0) * np.array([[2.0, -2.0], [-2.0, 4.0]])
    assert np.allclose(spec.cov_w1, target, rtol=1e-12)


def test_sample_limit_distribution_shapes_and_seeding():
    spec = scenario_limit_spec(ScenarioSpec(model=2, scenario=1))
    out = sample_limit_distribution(spec, 4, seed=23, which="both", n_mc=512)
    assert len(out) == 4
    for d in out:
        assert d.w1.shape == (2,) and d.omega_dev_mean.shape == (2,)
        assert np.isfinite(d.gamma_dev_mean) and np.isfinite(d.gamma_dev_mode)
        assert d.k_final >= default_window(spec.f0)
    again = sample_limit_distribution(spec, 4, seed=23, which="both", n_mc=512)
    assert out[2].g2_mean == again[2].g2_mean
    assert np.array_equal(out[2].w1, again[2].w1)


def test_small_window_certification_grows():
    spec = scenario_limit_spec(ScenarioSpec(model=1, scenario=1))
    out = sample_limit_distribution(spec, 3, seed=29, k_init=0.5, which="mean")
    assert all(d.k_final > 0.5 for d in out)
