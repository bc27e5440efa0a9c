"""Sampling from the joint limit law of the change-plane estimator.

The regression coefficients have a Gaussian limit (W1, W2).  The plane
parameters converge at rate n to the level-set midpoints of the minimizer
of a two-sided compound Poisson process: jumps arrive at rate f0 on each
side of the plane, each carrying a mark (z, x) drawn from the design on
the plane and a noise draw.  Reassigning a jump to the other side costs

    e = (c @ z)^2 +/- 2 eps (c @ z),      c = beta0 - delta0,

with + on the minus side and - on the plus side, and the process
Q(g1, g2) sums the costs of the jumps captured by the perturbed plane
with tilt g1 (coordinates in the tangent basis obar) and shift g2.  Q is
piecewise constant, so its minimum is found exactly by enumerating the
cells of the induced hyperplane arrangement inside a search window,
which grows until the minimizing cell is strictly interior.  Mean and
mode midpoints of the argmin level set mirror the finite-sample ones: an
integral average of the tilt weighted by corridor width, and the
widest-corridor tilt found by linear programming.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations, product

import numpy as np
from scipy.optimize import linprog

from ._rng import as_generator, child_rng, derive_seed
from .data import ScenarioSpec, check_unit
from .errors import NumericalError, ValidationError
from .midpoint import Corridor

# Capture geometry inside the search window: |g2| <= k and per-coordinate
# |g1_c| <= BOX_SCALE * k / (x_bound * sqrt(p-1)), so |g1 @ xt - g2| stays
# below 1.9 k and jumps beyond 2k can never change capture state.  Jumps
# are generated out to 4k; the spare (2k, 4k] band certifies via the
# arrival gate that the window is not cutting anything off.
BOX_SCALE = 0.9

# Abort exact cell enumeration beyond this many probe points and fall back
# to randomized probing.
ENUM_BUDGET = 300_000


@dataclass(frozen=True)
class LimitSpec:
    """Ingredients of the limit experiment.

    g_sampler(rng, m) draws marks (z, x) from the design conditioned on
    the true plane; eps_sampler(rng, m) draws noise (None means
    N(0, sigma2)).  obar spans the tangent of the sphere at omega0;
    x_bound bounds ||x|| almost surely.
    """

    f0: float
    sigma2: float
    contrast: np.ndarray
    omega0: np.ndarray
    gamma0: float
    obar: np.ndarray
    cov_w1: np.ndarray
    cov_w2: np.ndarray
    g_sampler: object
    x_bound: float
    eps_sampler: object = None

    def __post_init__(self):
        if not (math.isfinite(self.f0) and self.f0 > 0):
            raise ValidationError(f"f0 must be positive, got {self.f0!r}")
        if not (math.isfinite(self.sigma2) and self.sigma2 >= 0):
            raise ValidationError(f"sigma2 must be >= 0, got {self.sigma2!r}")
        if not (math.isfinite(self.x_bound) and self.x_bound > 0):
            raise ValidationError(f"x_bound must be positive, got {self.x_bound!r}")
        check_unit(self.omega0, "omega0")

    @property
    def d(self) -> int:
        return self.contrast.shape[0]

    @property
    def p(self) -> int:
        return self.omega0.shape[0]

    def draw_eps(self, rng: np.random.Generator, m: int) -> np.ndarray:
        if self.eps_sampler is not None:
            return np.asarray(self.eps_sampler(rng, m), dtype=float)
        return rng.normal(0.0, math.sqrt(self.sigma2), size=m)


def scenario_limit_spec(spec: ScenarioSpec) -> LimitSpec:
    """Analytic limit experiment for one of the benchmark designs."""
    from ._linalg import orthonormal_complement

    theta0 = spec.theta0
    cov1, cov2 = sigma_covariances(spec)
    return LimitSpec(
        f0=spec.f0,
        sigma2=spec.sigma ** 2,
        contrast=theta0.beta - theta0.delta,
        omega0=theta0.omega,
        gamma0=theta0.gamma,
        obar=orthonormal_complement(theta0.omega),
        cov_w1=cov1,
        cov_w2=cov2,
        g_sampler=spec.sample_on_plane,
        x_bound=spec.x_bound,
    )


def sigma_covariances(source) -> tuple:
    """(Sigma1, Sigma2): covariances of the coefficient limits W1, W2.

    For a ScenarioSpec these are sigma^2 times the inverses of the
    one-sided second moments E[z z' 1{side}] (analytic).  For an observed
    pair (Dataset, theta) the empirical plug-ins are used.
    """
    if isinstance(source, ScenarioSpec):
        e_zz = source.e_zz
        q = source.p_left
        s2 = source.sigma ** 2
        return (
            s2 * np.linalg.inv(q * e_zz),
            s2 * np.linalg.inv((1.0 - q) * e_zz),
        )
    ds, theta = source
    from .bootstrap import residual_summary

    summ = residual_summary(ds, theta)
    return summ.cov_w1, summ.cov_w2


def sample_w(sigma: np.ndarray, seed_or_rng, size: int | None = None) -> np.ndarray:
    """Draw N(0, sigma); shape (d,) or (size, d)."""
    sigma = np.asarray(sigma, dtype=float)
    rng = as_generator(seed_or_rng)
    chol = np.linalg.cholesky(sigma)
    if size is None:
        return chol @ rng.standard_normal(sigma.shape[0])
    return rng.standard_normal((size, sigma.shape[0])) @ chol.T


# --------------------------------------------------------------------------
# Jump process
# --------------------------------------------------------------------------


@dataclass
class JumpProcessDraw:
    """One realization of the two-sided marked jump process.

    Per side: ``u`` holds the cumulative exponential arrival positions
    (ascending; generation runs until one jump exceeds 4k, which is kept),
    ``xt`` the tangent coordinates obar' x of the marks, ``e`` the
    reassignment costs.  The side generators are retained so the window
    can grow without changing jumps already drawn.
    """

    k: float
    u_minus: np.ndarray
    xt_minus: np.ndarray
    e_minus: np.ndarray
    u_plus: np.ndarray
    xt_plus: np.ndarray
    e_plus: np.ndarray
    x_bound: float
    q: int  # dimension of (g1, g2) = (p - 1) + 1
    rng_minus: np.random.Generator = field(repr=False, default=None)
    rng_plus: np.random.Generator = field(repr=False, default=None)

    def gate_counts(self, k: float) -> tuple:
        """Arrivals per side inside the certification band (2k, 4k]."""
        lo, hi = 2.0 * k, 4.0 * k
        return (
            int(np.count_nonzero((self.u_minus > lo) & (self.u_minus <= hi))),
            int(np.count_nonzero((self.u_plus > lo) & (self.u_plus <= hi))),
        )


def _draw_side(spec: LimitSpec, rng, horizon: float, noise_sign: float, start=0.0):
    """Extend one jump stream past ``horizon``.

    Per jump the draw order is fixed (gap, mark, noise) so a stream
    extended under a larger horizon reproduces its earlier jumps exactly.
    """
    us, xts, es = [], [], []
    c = spec.contrast
    u = float(start)
    while u <= horizon:
        u += rng.exponential(1.0 / spec.f0)
        z, x = spec.g_sampler(rng, 1)
        eps = float(spec.draw_eps(rng, 1)[0])
        cz = float(c @ z[0])
        us.append(u)
        xts.append(spec.obar.T @ x[0])
        es.append(cz * cz + noise_sign * 2.0 * eps * cz)
    return us, xts, es


def sample_jump_process(spec: LimitSpec, k: float, seed: int) -> JumpProcessDraw:
    """Draw both jump streams out to 4k (one overshooting jump kept each)."""
    if not (math.isfinite(k) and k > 0):
        raise ValidationError(f"window k must be positive, got {k!r}")
    rng_m = child_rng(seed, 0)
    rng_p = child_rng(seed, 1)
    um, xtm, em = _draw_side(spec, rng_m, 4.0 * k, +1.0)
    up, xtp, ep = _draw_side(spec, rng_p, 4.0 * k, -1.0)
    pm1 = spec.p - 1
    return JumpProcessDraw(
        k=float(k),
        u_minus=np.asarray(um),
        xt_minus=np.asarray(xtm, dtype=float).reshape(len(um), pm1),
        e_minus=np.asarray(em),
        u_plus=np.asarray(up),
        xt_plus=np.asarray(xtp, dtype=float).reshape(len(up), pm1),
        e_plus=np.asarray(ep),
        x_bound=spec.x_bound,
        q=pm1 + 1,
        rng_minus=rng_m,
        rng_plus=rng_p,
    )


def extend_jump_process(draw: JumpProcessDraw, spec: LimitSpec, new_k: float) -> None:
    """Grow the window in place; existing jumps are untouched."""
    if new_k <= draw.k:
        return
    horizon = 4.0 * new_k
    pm1 = spec.p - 1
    if draw.u_minus[-1] <= horizon:
        um, xtm, em = _draw_side(spec, draw.rng_minus, horizon, +1.0, start=draw.u_minus[-1])
        draw.u_minus = np.concatenate([draw.u_minus, um])
        draw.xt_minus = np.vstack([draw.xt_minus, np.asarray(xtm, dtype=float).reshape(len(um), pm1)])
        draw.e_minus = np.concatenate([draw.e_minus, em])
    if draw.u_plus[-1] <= horizon:
        up, xtp, ep = _draw_side(spec, draw.rng_plus, horizon, -1.0, start=draw.u_plus[-1])
        draw.u_plus = np.concatenate([draw.u_plus, up])
        draw.xt_plus = np.vstack([draw.xt_plus, np.asarray(xtp, dtype=float).reshape(len(up), pm1)])
        draw.e_plus = np.concatenate([draw.e_plus, ep])
    draw.k = float(new_k)


# --------------------------------------------------------------------------
# Exact minimization of the capture cost
# --------------------------------------------------------------------------


def g1_box_halfwidth(draw: JumpProcessDraw, k: float) -> float:
    """Per-coordinate half width of the tilt box inside window k."""
    if draw.q == 1:
        return 0.0
    return BOX_SCALE * k / (draw.x_bound * math.sqrt(draw.q - 1))


@dataclass(frozen=True)
class QMinResult:
    """Minimizer of the capture cost inside the window.

    v_minus / v_plus are the induced signs of every jump (-1 keeps a
    minus jump on its side, +1 marks it captured; mirrored for plus).
    (g1, g2) is a point strictly inside the minimizing cell, q_min the
    attained cost, exact whether full cell enumeration was used.
    """

    v_minus: np.ndarray
    v_plus: np.ndarray
    g1: np.ndarray
    g2: float
    q_min: float
    n_probes: int
    exact: bool


def _capture_cost(draw: JumpProcessDraw, probes: np.ndarray) -> tuple:
    """Cost and capture indicators at each probe (g1, g2) row."""
    g1 = probes[:, :-1]
    g2 = probes[:, -1]
    tm = g1 @ draw.xt_minus.T - g2[:, None]  # a . (xt, -1)
    tp = g1 @ draw.xt_plus.T - g2[:, None]
    cap_m = tm > draw.u_minus[None, :]
    cap_p = tp <= -draw.u_plus[None, :]
    cost = cap_m @ draw.e_minus + cap_p @ draw.e_plus
    return cost, cap_m, cap_p


def _near_hyperplanes(draw: JumpProcessDraw, k: float, b1: float) -> tuple:
    """Capture boundaries of near jumps plus the window's box faces."""
    q = draw.q
    rows, offs = [], []
    for u, xt in ((draw.u_minus, draw.xt_minus), (draw.u_plus, draw.xt_plus)):
        near = u <= 2.0 * k
        for j in np.flatnonzero(near):
            rows.append(np.append(xt[j], -1.0))
            offs.append(u[j])
    # One pair of faces per coordinate; for the plus side the offset is -u,
    # giving a distinct parallel plane through the same normal.
    n_minus_near = int(np.count_nonzero(draw.u_minus <= 2.0 * k))
    for i in range(n_minus_near, len(offs)):
        offs[i] = -offs[i]
    for c in range(q - 1):
        e = np.zeros(q)
        e[c] = 1.0
        rows.extend([e, e])
        offs.extend([b1, -b1])
    e = np.zeros(q)
    e[-1] = 1.0
    rows.extend([e, e])
    offs.extend([k, -k])
    return np.asarray(rows, dtype=float), np.asarray(offs, dtype=float)


def _vertex_probes(normals: np.ndarray, offsets: np.ndarray, q: int, k: float, b1: float):
    """One interior probe per arrangement cell touching each vertex."""
    m = normals.shape[0]
    probes = [np.zeros(q)]
    t_ref = 0.05 * k
    bounds = np.array([b1] * (q - 1) + [k]) * (1.0 + 1e-9) + 1e-15
    for s_idx in combinations(range(m), q):
        a = normals[list(s_idx)]
        scale = np.prod(np.linalg.norm(a, axis=1))
        if scale <= 0.0 or abs(np.linalg.det(a)) <= 1e-12 * scale:
            continue
        v0 = np.linalg.solve(a, offsets[list(s_idx)])
        if np.any(np.abs(v0) > bounds * (1.0 + 1e-6) + 10.0 * t_ref):
            continue
        rest = np.setdiff1d(np.arange(m), s_idx, assume_unique=True)
        nv = normals[rest] @ v0 - offsets[rest]
        for sgn in product((-1.0, 1.0), repeat=q):
            d = np.linalg.solve(a, np.asarray(sgn))
            denom = normals[rest] @ d
            with np.errstate(divide="ignore", invalid="ignore"):
                t_cross = -nv / denom
            t_cross = t_cross[np.isfinite(t_cross) & (t_cross > 1e-13)]
            t_max = float(t_cross.min()) if t_cross.size else np.inf
            t = 0.5 * min(t_max, t_ref)
            pt = v0 + t * d
            if np.all(np.abs(pt) <= bounds):
                probes.append(pt)
    return np.asarray(probes)


def minimize_q02(draw: JumpProcessDraw, k: float) -> QMinResult:
    """Exact minimizer of the capture cost inside the window.

    Probes every cell of the arrangement formed by the near jumps'
    capture boundaries and the box faces (each bounded cell owns at least
    one arrangement vertex, so vertex perturbation reaches them all).
    Falls back to dense random probing when the subset count explodes;
    the result then flags exact=False.
    """
    q = draw.q
    b1 = g1_box_halfwidth(draw, k)
    normals, offsets = _near_hyperplanes(draw, k, b1)
    m = normals.shape[0]
    exact = math.comb(m, q) * (2 ** q) <= ENUM_BUDGET
    if exact:
        probes = _vertex_probes(normals, offsets, q, k, b1)
    else:
        rng = child_rng(derive_seed(int(m), int(1e6 * k) & 0x7FFFFFFF), 17)
        pts = rng.uniform(-1.0, 1.0, size=(50_000, q))
        pts[:, :-1] *= b1
        pts[:, -1] *= k
        probes = np.vstack([np.zeros(q), pts])

    cost, cap_m, cap_p = _capture_cost(draw, probes)
    order = np.lexsort(
        tuple(probes[:, c] for c in range(q - 1, -1, -1))
        + ((probes ** 2).sum(axis=1), cost)
    )
    best = int(order[0])
    g = probes[best]
    v_minus = np.where(cap_m[best], 1, -1).astype(np.int8)
    v_plus = np.where(cap_p[best], -1, 1).astype(np.int8)
    res = QMinResult(
        v_minus=v_minus,
        v_plus=v_plus,
        g1=g[:-1].copy(),
        g2=float(g[-1]),
        q_min=float(cost[best]),
        n_probes=probes.shape[0],
        exact=exact,
    )
    if res.q_min > 0.0:
        raise NumericalError("capture-cost minimum exceeds the empty-capture cost 0")
    c = limit_corridor(draw, res, res.g1)
    if not (c.c_l <= res.g2 < c.c_u):
        raise NumericalError("capture minimizer is inconsistent with its corridor")
    return res


def _signs_of(signs) -> tuple:
    if isinstance(signs, QMinResult):
        return signs.v_minus, signs.v_plus
    v_minus, v_plus = signs
    return np.asarray(v_minus, dtype=np.int8), np.asarray(v_plus, dtype=np.int8)


def limit_corridor(draw: JumpProcessDraw, signs, g1: np.ndarray) -> Corridor:
    """Admissible shift interval [c_l, c_u) at tilt g1 for fixed signs.

    Each jump's capture state flips at threshold g1 @ xt -/+ u; jumps
    currently assigned -1 bound the corridor from below, +1 from above.
    Sides with no active bound give -inf / +inf.
    """
    v_minus, v_plus = _signs_of(signs)
    g1 = np.asarray(g1, dtype=float)
    thr_m = draw.xt_minus @ g1 - draw.u_minus
    thr_p = draw.xt_plus @ g1 + draw.u_plus
    lows = np.concatenate([thr_m[v_minus == -1], thr_p[v_plus == -1]])
    highs = np.concatenate([thr_m[v_minus == 1], thr_p[v_plus == 1]])
    c_l = float(lows.max()) if lows.size else -math.inf
    c_u = float(highs.min()) if highs.size else math.inf
    return Corridor(c_l=c_l, c_u=c_u)


def _levelset_rows(draw: JumpProcessDraw, signs) -> tuple:
    """Linear inequalities rows @ (g1, g2) <= rhs describing the closure of
    the set of (g1, g2) reproducing the given capture signs."""
    v_minus, v_plus = _signs_of(signs)
    q = draw.q
    rows, rhs = [], []
    for u, xt, v, cap_off in (
        (draw.u_minus, draw.xt_minus, v_minus, -1.0),
        (draw.u_plus, draw.xt_plus, v_plus, +1.0),
    ):
        for j in range(u.shape[0]):
            base = np.append(xt[j], -1.0)
            off = cap_off * u[j]  # threshold = g1 @ xt + off
            if v[j] == -1:
                rows.append(base)  # g1 @ xt - g2 <= -off
                rhs.append(-off)
            else:
                rows.append(-base)
                rhs.append(off)
    return np.asarray(rows, dtype=float).reshape(len(rows), q), np.asarray(rhs)


def levelset_extents(draw: JumpProcessDraw, signs, k: float) -> tuple:
    """Coordinatewise extent of the sign-reproducing polytope, clipped to
    the search box: (lo, hi) arrays of length q = (p-1) + 1."""
    q = draw.q
    b1 = g1_box_halfwidth(draw, k)
    if q == 1:
        c = limit_corridor(draw, signs, np.zeros(0))
        lo = np.array([max(c.c_l, -k)])
        hi = np.array([min(c.c_u, k)])
        return lo, hi
    rows, rhs = _levelset_rows(draw, signs)
    bounds = [(-b1, b1)] * (q - 1) + [(-k, k)]
    lo = np.empty(q)
    hi = np.empty(q)
    for i in range(q):
        c = np.zeros(q)
        c[i] = 1.0
        for sign, out in ((1.0, lo), (-1.0, hi)):
            r = linprog(sign * c, A_ub=rows, b_ub=rhs, bounds=bounds, method="highs")
            if r.status != 0:
                raise NumericalError(f"extent LP failed with status {r.status}")
            out[i] = float(r.x[i])
    return lo, hi


def window_is_sufficient(draw: JumpProcessDraw, signs, k: float) -> bool:
    """True when the minimizing cell sits strictly inside the search box
    (1 percent relative margin per coordinate) and the arrival gate holds."""
    gm, gp = draw.gate_counts(k)
    if gm < 1 or gp < 1:
        return False
    b1 = g1_box_halfwidth(draw, k)
    lo, hi = levelset_extents(draw, signs, k)
    if draw.q == 1:
        return bool(-0.99 * k < lo[0] and hi[0] < 0.99 * k)
    lim = np.array([b1] * (draw.q - 1) + [k])
    return bool(np.all(lo > -0.99 * lim) and np.all(hi < 0.99 * lim))


# --------------------------------------------------------------------------
# Midpoints of the limit level set
# --------------------------------------------------------------------------


def limit_mean_midargmin(
    draw: JumpProcessDraw, signs, seed_or_rng, n_mc: int = 4096
) -> tuple:
    """Mean representative of the minimizing level set: (g1_hat, g2_hat).

    g1_hat is the corridor-width-weighted average of the tilt over the
    region with positive corridor (uniform Monte Carlo on the region's
    exact bounding box); g2_hat is the corridor midpoint at g1_hat.
    """
    if draw.q == 1:
        c = limit_corridor(draw, signs, np.zeros(0))
        if not (math.isfinite(c.c_l) and math.isfinite(c.c_u)):
            raise NumericalError("one-sided corridor in the scalar limit")
        return np.zeros(0), 0.5 * (c.c_l + c.c_u)

    rng = as_generator(seed_or_rng)
    lo, hi = levelset_extents(draw, signs, draw.k)
    lo1, hi1 = lo[:-1], hi[:-1]
    pad = 0.05 * (hi1 - lo1) + 1e-12
    lo1, hi1 = lo1 - pad, hi1 + pad
    v_minus, v_plus = _signs_of(signs)
    m = n_mc
    for _ in range(6):
        g = rng.uniform(size=(m, draw.q - 1)) * (hi1 - lo1) + lo1
        tm = g @ draw.xt_minus.T - draw.u_minus[None, :]
        tp = g @ draw.xt_plus.T + draw.u_plus[None, :]
        lows_m = np.hstack([tm[:, v_minus == -1], tp[:, v_plus == -1]])
        highs_m = np.hstack([tm[:, v_minus == 1], tp[:, v_plus == 1]])
        c_l = lows_m.max(axis=1) if lows_m.shape[1] else np.full(m, -np.inf)
        c_u = highs_m.min(axis=1) if highs_m.shape[1] else np.full(m, np.inf)
        w = np.clip(c_u - c_l, 0.0, None)
        if not np.isfinite(w).all():
            raise NumericalError("unbounded corridor during mean midpoint sampling")
        tot = float(w.sum())
        if tot > 0.0:
            g1_hat = (w @ g) / tot
            c = limit_corridor(draw, signs, g1_hat)
            if c.c_r > 0.0:
                return g1_hat, 0.5 * (c.c_l + c.c_u)
        m *= 2
    raise NumericalError("mean midpoint sampling found no positive corridor")


def limit_mode_midargmin(draw: JumpProcessDraw, signs) -> tuple:
    """Mode representative: (g1_check, g2_check, unique).

    Maximizes the corridor width by linear programming; ties are resolved
    to the lexicographically smallest tilt, and ``unique`` is False when
    the tie-break actually moved the solution (the width maximizer is not
    unique, so the mode representative is not well defined).
    """
    if draw.q == 1:
        g1, g2 = limit_mean_midargmin(draw, signs, 0, n_mc=1)
        return g1, g2, True

    q = draw.q
    rows, rhs = _levelset_rows(draw, signs)
    # Variables (g1, t_l, t_u): the level-set rows bound g2 by t_l / t_u
    # depending on their sign structure; widest corridor = max t_u - t_l.
    nv = q + 1
    a_ub = np.zeros((rows.shape[0], nv))
    b_ub = rhs.copy()
    for i in range(rows.shape[0]):
        g2_coef = rows[i, -1]
        a_ub[i, : q - 1] = rows[i, :-1]
        if g2_coef < 0:  # row bounds g2 from below: g1 part - g2 <= rhs -> t_l
            a_ub[i, q - 1] = -1.0
        else:  # row bounds g2 from above
            a_ub[i, q] = 1.0
    b1 = g1_box_halfwidth(draw, draw.k)
    big = b1 * math.sqrt(q - 1) * draw.x_bound + float(
        max(draw.u_minus.max(), draw.u_plus.max())
    ) + 1.0
    bounds = [(-b1, b1)] * (q - 1) + [(-big, big), (-big, big)]
    cost = np.zeros(nv)
    cost[q - 1] = 1.0
    cost[q] = -1.0  # min t_l - t_u
    r = linprog(cost, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if r.status != 0:
        raise NumericalError(f"mode LP failed with status {r.status}")
    width = float(r.x[q] - r.x[q - 1])
    g1_first = r.x[: q - 1].copy()

    # Lexicographic refinement under (near-)optimal width.
    tol = 1e-9 * max(1.0, abs(width))
    a_fix = np.vstack([a_ub, cost])
    b_fix = np.append(b_ub, -(width - tol))
    g1_cur = g1_first
    for c_idx in range(q - 1):
        obj = np.zeros(nv)
        obj[c_idx] = 1.0
        r2 = linprog(obj, A_ub=a_fix, b_ub=b_fix, bounds=bounds, method="highs")
        if r2.status != 0:
            raise NumericalError(f"mode tie-break LP failed with status {r2.status}")
        pin = np.zeros(nv)
        pin[c_idx] = 1.0
        a_fix = np.vstack([a_fix, pin])
        b_fix = np.append(b_fix, float(r2.x[c_idx]) + tol)
        g1_cur = r2.x[: q - 1].copy()
    unique = bool(np.max(np.abs(g1_cur - g1_first)) <= 1e-6 * max(1.0, b1))

    c = limit_corridor(draw, signs, g1_cur)
    if not c.c_r > 0.0:
        raise NumericalError("mode tilt lost its corridor")
    return g1_cur, 0.5 * (c.c_l + c.c_u), unique


# --------------------------------------------------------------------------
# Batch sampling
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LimitDraw:
    """One draw from the joint limit law.

    (w1, w2) are the Gaussian coefficient limits.  (omega_dev, gamma_dev)
    are the plane limits mapped back to ambient coordinates: the weak
    limits of n (omega_hat - omega0) and n (gamma_hat - gamma0); the mode
    versions mirror them.  mode_unique is False when the widest-corridor
    tilt was not unique.
    """

    w1: np.ndarray
    w2: np.ndarray
    g1_mean: np.ndarray
    g2_mean: float
    omega_dev_mean: np.ndarray
    gamma_dev_mean: float
    g1_mode: np.ndarray
    g2_mode: float
    omega_dev_mode: np.ndarray
    gamma_dev_mode: float
    mode_unique: bool
    k_final: float
    n_jumps: int
    exact: bool


def default_window(f0: float) -> float:
    return 2.0 / f0


def sample_limit_distribution(
    spec: LimitSpec,
    n_draws: int,
    seed: int,
    which: str = "both",
    n_mc: int = 4096,
    k_init: float | None = None,
    max_doublings: int = 16,
) -> list:
    """Draw from the limit law of (coefficients, plane midpoints).

    Per draw: realize the jump process in a window, certify the window
    (arrival gate plus strict interiority of the minimizing cell), else
    double it and extend the same streams; then take the level-set
    midpoints and an independent Gaussian coefficient pair.
    """
    if which not in ("mean", "mode", "both"):
        raise ValidationError(f"which must be mean, mode or both, got {which!r}")
    chol1 = np.linalg.cholesky(spec.cov_w1)
    chol2 = np.linalg.cholesky(spec.cov_w2)
    out = []
    for b in range(int(n_draws)):
        draw, res = _certified_minimizer(spec, b, seed, k_init, max_doublings)
        g1_mean = np.zeros(spec.p - 1)
        g2_mean = 0.0
        g1_mode = np.zeros(spec.p - 1)
        g2_mode = 0.0
        unique = True
        if which in ("mean", "both"):
            g1_mean, g2_mean = limit_mean_midargmin(
                draw, res, child_rng(seed, b, 2), n_mc=n_mc
            )
        if which in ("mode", "both"):
            g1_mode, g2_mode, unique = limit_mode_midargmin(draw, res)
        rng_w = child_rng(seed, b, 1)
        w1 = chol1 @ rng_w.standard_normal(spec.d)
        w2 = chol2 @ rng_w.standard_normal(spec.d)
        out.append(
            LimitDraw(
                w1=w1,
                w2=w2,
                g1_mean=g1_mean,
                g2_mean=float(g2_mean),
                omega_dev_mean=spec.obar @ g1_mean,
                gamma_dev_mean=float(g2_mean),
                g1_mode=g1_mode,
                g2_mode=float(g2_mode),
                omega_dev_mode=spec.obar @ g1_mode,
                gamma_dev_mode=float(g2_mode),
                mode_unique=bool(unique),
                k_final=float(draw.k),
                n_jumps=int(draw.u_minus.shape[0] + draw.u_plus.shape[0]),
                exact=bool(res.exact),
            )
        )
    return out


def _certified_minimizer(spec, b: int, seed: int, k_init, max_doublings: int):
    k = float(k_init) if k_init is not None else default_window(spec.f0)
    draw = sample_jump_process(spec, k, derive_seed(seed, b, 0))
    for _ in range(max_doublings + 1):
        gm, gp = draw.gate_counts(k)
        if gm >= 1 and gp >= 1:
            res = minimize_q02(draw, k)
            if window_is_sufficient(draw, res, k):
                draw.k = k
                return draw, res
        k *= 2.0
        extend_jump_process(draw, spec, k)
    raise NumericalError(
        f"window certification failed after {max_doublings} doublings"
    )
