"""Level sets, corridors, cap sampling, and the two midpoint representatives."""

import math

import numpy as np
import pytest

from changeplane import (
    ChangePlaneParams,
    Dataset,
    ScenarioSpec,
    ValidationError,
    canonicalize_orientation,
    corridor,
    induced_signs,
    mean_midargmin,
    mode_midargmin,
    simulate_scenario,
    subgroup_mask,
)
from changeplane.midpoint import MidpointConfig, _mean_impl, _mode_impl, sample_cap


def _level_from_truth(model, n, seed):
    spec = ScenarioSpec(model=model, scenario=1)
    ds = simulate_scenario(spec, n, seed=seed)
    level = induced_signs(ds, spec.theta0.omega, spec.theta0.gamma)
    return ds, level, spec


def test_induced_signs_tie_is_minus():
    ds = Dataset(
        y=np.zeros(2),
        z=np.ones((2, 1)),
        x=np.array([[1.0], [2.0]]),
    )
    level = induced_signs(ds, np.array([1.0]), 1.0)
    assert level.v.tolist() == [-1, 1]


def test_corridor_hand_example():
    ds = Dataset(
        y=np.zeros(4),
        z=np.ones((4, 1)),
        x=np.array([[0.0], [1.0], [3.0], [5.0]]),
    )
    level = induced_signs(ds, np.array([1.0]), 2.0)
    c = corridor(ds, np.array([1.0]), level)
    assert c.c_l == 1.0  # largest projection with v = -1
    assert c.c_u == 3.0  # smallest projection with v = +1
    assert c.c_r == 2.0  # width c_u - c_l
    # every gamma in [c_l, c_u) reproduces the sign pattern
    for g in (1.0, 1.5, 2.999):
        again = induced_signs(ds, np.array([1.0]), g)
        assert np.array_equal(again.v, level.v)
    # the flipped direction cannot reproduce it
    flipped = corridor(ds, np.array([-1.0]), level)
    assert flipped.c_r <= 0


def test_corridor_orthogonal_direction_fails():
    # separable along x1; a direction orthogonal to the separation has
    # a nonpositive corridor
    eps = 0.25
    x = np.array([[1.0, eps], [1.0, -eps], [-1.0, eps], [-1.0, -eps]])
    ds = Dataset(y=np.zeros(4), z=np.ones((4, 1)), x=x)
    level = induced_signs(ds, np.array([1.0, 0.0]), 0.0)
    assert level.v.tolist() == [1, 1, -1, -1]
    c = corridor(ds, np.array([0.0, 1.0]), level)
    assert c.c_r <= 0


def test_mean_midpoint_symmetric_square():
    """Four points at (+-1, +-eps) split by sign of x1: by symmetry the
    corridor-weighted average points along e1 with threshold 0."""
    eps = 0.3
    x = np.array([[1.0, eps], [1.0, -eps], [-1.0, eps], [-1.0, -eps]])
    ds = Dataset(y=np.zeros(4), z=np.ones((4, 1)), x=x)
    level = induced_signs(ds, np.array([1.0, 0.0]), 0.0)
    om, g, _ = _mean_impl(ds, level, MidpointConfig(m_candidates=4096, seed=8))
    assert abs(om[0] - 1.0) < 1e-2
    assert abs(om[1]) < 1e-2
    assert abs(g) < 1e-2


def test_corridor_empty_side_is_infinite():
    ds = Dataset(
        y=np.zeros(2),
        z=np.ones((2, 1)),
        x=np.array([[0.0], [1.0]]),
    )
    level = induced_signs(ds, np.array([1.0]), 5.0)  # everything left
    c = corridor(ds, np.array([1.0]), level)
    assert c.c_l == 1.0
    assert c.c_u == np.inf


def test_sample_cap_p1():
    pts = sample_cap(np.array([1.0]), math.pi / 8, 50, 7)
    assert np.all(pts == 1.0)
    both = sample_cap(np.array([-1.0]), math.pi, 4000, 7)
    frac = np.mean(both[:, 0] > 0)
    assert 0.45 < frac < 0.55


def test_sample_cap_p2_uniform_arc():
    """For the circle the cap is an arc, so the signed angle from the
    center must be uniform on [-a, a]."""
    a = 0.9
    center = np.array([math.cos(0.3), math.sin(0.3)])
    pts = sample_cap(center, a, 20_000, 11)
    assert np.allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-12)
    assert np.min(pts @ center) >= math.cos(a) - 1e-12
    ang = np.arctan2(pts[:, 1], pts[:, 0]) - 0.3
    ang = (ang + math.pi) % (2 * math.pi) - math.pi
    assert abs(np.mean(ang)) < 4 * a / math.sqrt(3 * 20_000)
    assert np.var(ang) == pytest.approx(a * a / 3, rel=0.05)


def test_sample_cap_p3_colatitude_density():
    # density sin(t) on [0, a]: E[t] = (sin a - a cos a) / (1 - cos a)
    a = math.pi / 4
    center = np.array([0.0, 0.0, 1.0])
    pts = sample_cap(center, a, 30_000, 12)
    dots = np.clip(pts @ center, -1, 1)
    assert np.min(dots) >= math.cos(a) - 1e-12
    t = np.arccos(dots)
    expect = (math.sin(a) - a * math.cos(a)) / (1 - math.cos(a))
    assert np.mean(t) == pytest.approx(expect, abs=0.01)
    # azimuth symmetry
    assert abs(np.mean(pts[:, 0])) < 0.01
    assert abs(np.mean(pts[:, 1])) < 0.01


@pytest.mark.parametrize("model", [2, 3])
def test_mean_midpoint_reproduces_level_set(model):
    ds, level, _ = _level_from_truth(model, 150, seed=40 + model)
    omega, gamma, diag = _mean_impl(ds, level, MidpointConfig(seed=5))
    assert np.linalg.norm(omega) == pytest.approx(1.0, abs=1e-12)
    got = induced_signs(ds, omega, gamma)
    assert np.array_equal(got.v, level.v)  # exact mask reproduction
    c = corridor(ds, omega, level)
    assert gamma == pytest.approx(0.5 * (c.c_l + c.c_u), abs=1e-12)
    assert diag.method == "mean"
    assert diag.n_positive > 0


@pytest.mark.parametrize("model", [2, 3])
def test_mode_midpoint_maximizes_corridor(model):
    """The max-margin direction beats 20000 sampled directions that
    reproduce the same sign pattern."""
    ds, level, _ = _level_from_truth(model, 120, seed=50 + model)
    omega, gamma, diag = _mode_impl(ds, level, MidpointConfig(seed=6))
    got = induced_signs(ds, omega, gamma)
    assert np.array_equal(got.v, level.v)
    best = corridor(ds, omega, level).c_r
    assert best > 0

    rng = np.random.default_rng(60 + model)
    cand = rng.standard_normal((20_000, ds.p))
    cand /= np.linalg.norm(cand, axis=1, keepdims=True)
    radii = np.array([corridor(ds, c, level).c_r for c in cand])
    assert best >= radii.max() - 1e-3
    assert diag.method == "mode-qp"
    assert diag.gamma_star == pytest.approx(corridor(ds, omega, level).c_l)


def test_midpoints_p1_fast_path():
    ds, level, spec = _level_from_truth(1, 100, seed=70)
    om_a, ga_a = mean_midargmin(ds, level)
    om_b, gb = mode_midargmin(ds, level)
    assert np.array_equal(om_a, level.omega1)
    assert np.array_equal(om_a, om_b)
    assert ga_a == gb
    c = corridor(ds, level.omega1, level)
    assert ga_a == pytest.approx(0.5 * (c.c_l + c.c_u))


def test_midpoint_permutation_invariance():
    ds, level, _ = _level_from_truth(2, 90, seed=71)
    rng = np.random.default_rng(72)
    perm = rng.permutation(ds.n)
    ds_p = Dataset(ds.y[perm], ds.z[perm], ds.x[perm])
    from changeplane.midpoint import LevelSet

    level_p = LevelSet(v=level.v[perm], omega1=level.omega1, gamma1=level.gamma1)
    cfg = MidpointConfig(seed=9)
    om1, g1, _ = _mean_impl(ds, level, cfg)
    om2, g2, _ = _mean_impl(ds_p, level_p, cfg)
    assert np.array_equal(om1, om2)
    assert g1 == g2


def test_midpoint_rejects_one_sided_level():
    ds = simulate_scenario(ScenarioSpec(model=2, scenario=1), 50, seed=73)
    level = induced_signs(ds, np.array([1.0, 0.0]), 100.0)
    with pytest.raises(ValidationError):
        mean_midargmin(ds, level)
    with pytest.raises(ValidationError):
        mode_midargmin(ds, level)


def test_canonicalize_orientation():
    theta = ChangePlaneParams(
        beta=np.array([1.0]),
        delta=np.array([2.0]),
        omega=np.array([0.0, -1.0]),
        gamma=0.5,
    )
    canon = canonicalize_orientation(theta)
    assert np.array_equal(canon.omega, np.array([0.0, 1.0]))
    assert canon.gamma == -0.5
    assert canon.beta[0] == 2.0 and canon.delta[0] == 1.0
    # already canonical: unchanged, and applying twice is stable
    assert canonicalize_orientation(canon) is canon
    with pytest.raises(ValidationError):
        canonicalize_orientation(
            ChangePlaneParams(
                beta=np.array([1.0]),
                delta=np.array([1.0]),
                omega=np.array([0.0, 0.0]),
                gamma=0.0,
            )
        )


def test_mask_equivalence_of_midpoints():
    # both representatives induce the same subgroups as the witness plane
    ds, level, _ = _level_from_truth(3, 140, seed=74)
    for func in (mean_midargmin, mode_midargmin):
        om, g = func(ds, level, MidpointConfig(seed=13))
        mask = subgroup_mask(ds, om, g)
        assert np.array_equal(mask, level.v == -1)
