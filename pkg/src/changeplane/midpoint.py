"""Level-set summaries: corridors and the two midpoint representatives.

The profiled objective is flat on the set of planes that induce the same
subgroup assignment, so a fitted plane is only a witness of its level set.
This module computes, for a fixed sign pattern ``v``:

* the threshold corridor of a direction (``corridor``),
* the mean-of-level-set representative (``mean_midargmin``), a weighted
  spherical average of directions that reproduce ``v``,
* the mode representative (``mode_midargmin``), the direction with the
  widest corridor, found by a maximum-margin quadratic program.

Both representatives reproduce ``v`` exactly; that is asserted, not hoped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._linalg import orthonormal_complement
from ._rng import as_generator, child_rng
from .data import ChangePlaneParams, Dataset, check_unit
from .errors import ConvergenceError, NumericalError, ValidationError
from .objective import subgroup_mask


@dataclass(frozen=True)
class LevelSet:
    """A subgroup sign pattern together with the plane that produced it.

    ``v`` holds +1 for the right subgroup (omega1 @ x - gamma1 > 0) and -1
    for the left.  The witness (omega1, gamma1) is kept because midpoint
    searches start from it.
    """

    v: np.ndarray
    omega1: np.ndarray
    gamma1: float

    def __post_init__(self):
        v = np.asarray(self.v, dtype=np.int8)
        if v.ndim != 1 or not np.all(np.isin(v, (-1, 1))):
            raise ValidationError("v must be a 1-d array of +/-1")
        v.setflags(write=False)
        omega1 = check_unit(self.omega1, "omega1")
        omega1.setflags(write=False)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "omega1", omega1)
        object.__setattr__(self, "gamma1", float(self.gamma1))


def induced_signs(ds: Dataset, omega: np.ndarray, gamma: float) -> LevelSet:
    """Sign pattern induced by a plane; points on the plane get -1."""
    mask = subgroup_mask(ds, omega, gamma)
    v = np.where(mask, -1, 1).astype(np.int8)
    return LevelSet(v=v, omega1=np.asarray(omega, dtype=float), gamma1=float(gamma))


@dataclass(frozen=True)
class Corridor:
    """Admissible threshold interval [c_l, c_u) for one direction.

    c_l is the largest projection among v = -1 points, c_u the smallest
    among v = +1 points (-inf / +inf when a side is empty).  The direction
    reproduces the sign pattern iff c_r = c_u - c_l > 0, and then exactly
    the thresholds in [c_l, c_u) do so.
    """

    c_l: float
    c_u: float

    @property
    def c_r(self) -> float:
        return self.c_u - self.c_l


def corridor(ds: Dataset, omega: np.ndarray, level: LevelSet) -> Corridor:
    omega = check_unit(omega)
    t = ds.x @ omega
    neg = level.v == -1
    c_l = float(np.max(t[neg])) if neg.any() else -math.inf
    c_u = float(np.min(t[~neg])) if (~neg).any() else math.inf
    return Corridor(c_l=c_l, c_u=c_u)


def _corridor_many(x: np.ndarray, v: np.ndarray, omegas: np.ndarray) -> tuple:
    """Corridor endpoints for many directions at once: (c_l, c_u) arrays."""
    proj = omegas @ x.T
    neg = v == -1
    m = omegas.shape[0]
    c_l = proj[:, neg].max(axis=1) if neg.any() else np.full(m, -np.inf)
    c_u = proj[:, ~neg].min(axis=1) if (~neg).any() else np.full(m, np.inf)
    return c_l, c_u


@dataclass(frozen=True)
class MidpointConfig:
    """Tuning for the level-set midpoint searches.

    m_candidates   directions per sampling round (doubled on rejection)
    r0             minimum accepted count of corridor-positive directions
    cap_angle      initial angular radius of the spherical cap
    shell_frac     positives beyond shell_frac * cap mean the cap may be
                   cutting the region off, so it is widened
    mode_method    "qp" (max-margin program) or "sampling" (widest sampled
                   corridor under the same stop rule as the mean)
    """

    m_candidates: int = 1024
    r0: int = 200
    cap_angle: float = math.pi / 8.0
    shell_frac: float = 0.9
    max_rounds: int = 60
    m_max: int = 1 << 18
    mode_method: str = "qp"
    seed: int = 0

    def __post_init__(self):
        if self.r0 < 1 or self.m_candidates < self.r0:
            raise ValidationError("need m_candidates >= r0 >= 1")
        if not 0.0 < self.cap_angle <= math.pi:
            raise ValidationError("cap_angle must lie in (0, pi]")
        if not 0.0 < self.shell_frac < 1.0:
            raise ValidationError("shell_frac must lie in (0, 1)")
        if self.mode_method not in ("qp", "sampling"):
            raise ValidationError(f"unknown mode_method {self.mode_method!r}")


@dataclass(frozen=True)
class MidpointDiagnostics:
    method: str
    rounds: int
    final_m: int
    final_cap: float
    n_positive: int
    gamma_star: float | None = None

    def to_dict(self) -> dict:
        out = {
            "method": self.method,
            "rounds": self.rounds,
            "final_m": self.final_m,
            "final_cap": float(self.final_cap),
            "n_positive": self.n_positive,
        }
        if self.gamma_star is not None:
            out["gamma_star"] = float(self.gamma_star)
        return out


def sample_cap(
    center: np.ndarray, angle: float, m: int, seed_or_rng
) -> np.ndarray:
    """Uniform sample from the closed spherical cap of angular radius
    ``angle`` around a unit vector.  angle >= pi gives the whole sphere."""
    center = check_unit(center, "center")
    rng = as_generator(seed_or_rng)
    p = center.shape[0]
    if p == 1:
        if angle >= math.pi:
            return rng.choice([-1.0, 1.0], size=m)[:, None] * center[None, :]
        return np.tile(center, (m, 1))
    amax = min(float(angle), math.pi)

    # Colatitude density on [0, amax] is proportional to sin^(p-2).
    if p == 2:
        phi = rng.uniform(0.0, amax, size=m)
    else:
        phi = np.empty(m)
        got = 0
        peak = math.sin(min(amax, math.pi / 2.0))
        while got < m:
            k = max(2 * (m - got), 64)
            cand = rng.uniform(0.0, amax, size=k)
            acc = rng.uniform(0.0, 1.0, size=k) <= (np.sin(cand) / peak) ** (p - 2)
            take = cand[acc][: m - got]
            phi[got:got + take.shape[0]] = take
            got += take.shape[0]

    g = rng.standard_normal((m, p - 1))
    nrm = np.linalg.norm(g, axis=1, keepdims=True)
    nrm[nrm < 1e-300] = 1.0
    u = g / nrm
    basis = orthonormal_complement(center)
    pts = np.cos(phi)[:, None] * center[None, :] + np.sin(phi)[:, None] * (u @ basis.T)
    return pts


def _assert_reproduces(ds: Dataset, omega: np.ndarray, gamma: float, level: LevelSet) -> bool:
    got = induced_signs(ds, omega, gamma)
    return bool(np.array_equal(got.v, level.v))


def _p1_midpoint(ds: Dataset, level: LevelSet) -> tuple:
    """Scalar threshold case: the direction is fixed, only gamma is free."""
    omega = level.omega1.copy()
    c = corridor(ds, omega, level)
    if not (math.isfinite(c.c_l) and math.isfinite(c.c_u)) or c.c_r <= 0:
        raise ValidationError("level set needs both signs and a positive corridor")
    gamma = 0.5 * (c.c_l + c.c_u)
    return omega, gamma


def _require_two_sided(level: LevelSet) -> None:
    if not ((level.v == -1).any() and (level.v == 1).any()):
        raise ValidationError("level set must contain both signs")


def _mean_impl(ds: Dataset, level: LevelSet, cfg: MidpointConfig) -> tuple:
    _require_two_sided(level)
    if ds.p == 1:
        omega, gamma = _p1_midpoint(ds, level)
        diag = MidpointDiagnostics("mean-p1", 0, 0, 0.0, 0)
        return omega, gamma, diag

    rng = child_rng(cfg.seed, 0)
    center = level.omega1
    cap = float(cfg.cap_angle)
    m = int(cfg.m_candidates)

    for rnd in range(1, cfg.max_rounds + 1):
        omegas = sample_cap(center, cap, m, rng)
        c_l, c_u = _corridor_many(ds.x, level.v, omegas)
        width = c_u - c_l
        pos = width > 0.0
        npos = int(pos.sum())

        if cap < math.pi and npos > 0:
            # Cap is binding if any feasible direction sits in the outer
            # shell; widen and resample before trusting the average.
            ang = np.arccos(np.clip(omegas[pos] @ center, -1.0, 1.0))
            if float(ang.max()) > cfg.shell_frac * cap:
                cap = min(2.0 * cap, math.pi)
                m = min(2 * m, cfg.m_max)
                continue

        if npos < cfg.r0:
            if m >= cfg.m_max and cap <= 1e-8:
                break
            cap = cap / 2.0
            m = min(2 * m, cfg.m_max)
            continue

        w = np.where(width > 0.0, width, 0.0)
        vec = (w[:, None] * omegas).sum(axis=0)
        nrm = float(np.linalg.norm(vec))
        if nrm <= 0.0:
            raise NumericalError("degenerate direction average")
        omega_hat = vec / nrm
        c = corridor(ds, omega_hat, level)
        gamma_hat = 0.5 * (c.c_l + c.c_u)
        if c.c_r > 0.0 and _assert_reproduces(ds, omega_hat, gamma_hat, level):
            diag = MidpointDiagnostics("mean", rnd, m, cap, npos)
            return omega_hat, gamma_hat, diag
        m = min(2 * m, cfg.m_max)

    raise ConvergenceError(
        "mean midpoint search exhausted its budget",
        {"cap": cap, "m": m, "rounds": cfg.max_rounds},
    )


def mean_midargmin(ds: Dataset, level: LevelSet, cfg: MidpointConfig | None = None) -> tuple:
    """Mean representative of a level set: (omega_hat, gamma_hat).

    Directions are sampled uniformly from a spherical cap around the
    witness; the cap is widened until no corridor-positive direction sits
    near its rim and shrunk when positives are scarce.  The returned
    direction is the corridor-width-weighted average of the positives,
    normalized; the threshold is the corridor midpoint at that direction.
    """
    omega, gamma, _ = _mean_impl(ds, level, cfg or MidpointConfig())
    return omega, gamma


def _solve_margin_qp(a_pts: np.ndarray, b_pts: np.ndarray) -> np.ndarray:
    """min ||w||^2 s.t. w @ a <= t_l, w @ b >= t_u, t_u - t_l >= 1.

    Returns the optimal (w, t_l, t_u).  The data admit a separating plane
    with positive margin by construction, so the program is feasible.
    """
    from cvxopt import matrix, solvers

    p = a_pts.shape[1]
    nv = p + 2
    na, nb = a_pts.shape[0], b_pts.shape[0]
    pmat = np.zeros((nv, nv))
    pmat[:p, :p] = 2.0 * np.eye(p)
    g = np.zeros((na + nb + 1, nv))
    h = np.zeros(na + nb + 1)
    g[:na, :p] = a_pts
    g[:na, p] = -1.0
    g[na:na + nb, :p] = -b_pts
    g[na:na + nb, p + 1] = 1.0
    g[-1, p] = 1.0
    g[-1, p + 1] = -1.0
    h[-1] = -1.0

    saved = dict(solvers.options)
    sol = None
    # P is singular in the threshold coordinates, so the KKT system needs
    # the LDL solver; tolerances relax across attempts if needed.
    attempts = [
        ({"abstol": 1e-11, "reltol": 1e-11, "feastol": 1e-11}, "ldl"),
        ({"abstol": 1e-8, "reltol": 1e-8, "feastol": 1e-8}, "ldl"),
        ({}, None),
    ]
    try:
        for opts, kkt in attempts:
            solvers.options.clear()
            solvers.options.update({"show_progress": False, "maxiters": 200, **opts})
            kw = {"kktsolver": kkt} if kkt else {}
            try:
                sol = solvers.qp(matrix(pmat), matrix(np.zeros(nv)), matrix(g), matrix(h), **kw)
            except (ZeroDivisionError, ArithmeticError, ValueError):
                sol = None
                continue
            if sol["status"] == "optimal":
                break
    finally:
        solvers.options.clear()
        solvers.options.update(saved)
    if sol is None or sol["status"] != "optimal":
        status = "exception" if sol is None else sol["status"]
        raise NumericalError(f"margin QP did not converge: status {status!r}")
    return np.asarray(sol["x"]).reshape(-1)


def _mode_impl(ds: Dataset, level: LevelSet, cfg: MidpointConfig) -> tuple:
    _require_two_sided(level)
    if ds.p == 1:
        omega, gamma = _p1_midpoint(ds, level)
        c = corridor(ds, omega, level)
        diag = MidpointDiagnostics("mode-p1", 0, 0, 0.0, 0, gamma_star=c.c_l)
        return omega, gamma, diag

    if cfg.mode_method == "sampling":
        return _mode_sampling(ds, level, cfg)

    neg = level.v == -1
    u = _solve_margin_qp(ds.x[neg], ds.x[~neg])
    w = u[: ds.p]
    nw = float(np.linalg.norm(w))
    if nw <= 0.0:
        raise NumericalError("margin QP returned a zero direction")
    omega_chk = w / nw
    c = corridor(ds, omega_chk, level)
    # Max-margin identity: the normalized margin equals 1/||w||.
    if not math.isclose(c.c_r, 1.0 / nw, rel_tol=1e-6, abs_tol=1e-9):
        raise NumericalError(
            f"margin mismatch: corridor {c.c_r!r} vs QP {1.0 / nw!r}"
        )
    gamma_chk = 0.5 * (c.c_l + c.c_u)
    if not _assert_reproduces(ds, omega_chk, gamma_chk, level):
        raise NumericalError("mode midpoint failed to reproduce the level set")
    diag = MidpointDiagnostics("mode-qp", 0, 0, 0.0, 0, gamma_star=c.c_l)
    return omega_chk, gamma_chk, diag


def _mode_sampling(ds: Dataset, level: LevelSet, cfg: MidpointConfig) -> tuple:
    """Widest sampled corridor under the mean search's stop rule."""
    rng = child_rng(cfg.seed, 1)
    center = level.omega1
    cap = float(cfg.cap_angle)
    m = int(cfg.m_candidates)
    for rnd in range(1, cfg.max_rounds + 1):
        omegas = sample_cap(center, cap, m, rng)
        c_l, c_u = _corridor_many(ds.x, level.v, omegas)
        width = c_u - c_l
        pos = width > 0.0
        npos = int(pos.sum())
        if cap < math.pi and npos > 0:
            ang = np.arccos(np.clip(omegas[pos] @ center, -1.0, 1.0))
            if float(ang.max()) > cfg.shell_frac * cap:
                cap = min(2.0 * cap, math.pi)
                m = min(2 * m, cfg.m_max)
                continue
        if npos < cfg.r0:
            if m >= cfg.m_max and cap <= 1e-8:
                break
            cap = cap / 2.0
            m = min(2 * m, cfg.m_max)
            continue
        best = int(np.argmax(width))
        omega_chk = omegas[best]
        c = corridor(ds, omega_chk, level)
        gamma_chk = 0.5 * (c.c_l + c.c_u)
        if c.c_r > 0.0 and _assert_reproduces(ds, omega_chk, gamma_chk, level):
            diag = MidpointDiagnostics("mode-sampling", rnd, m, cap, npos, gamma_star=c.c_l)
            return omega_chk, gamma_chk, diag
        m = min(2 * m, cfg.m_max)
    raise ConvergenceError(
        "mode midpoint sampling exhausted its budget",
        {"cap": cap, "m": m, "rounds": cfg.max_rounds},
    )


def mode_midargmin(ds: Dataset, level: LevelSet, cfg: MidpointConfig | None = None) -> tuple:
    """Mode representative of a level set: (omega_check, gamma_check).

    The direction maximizes the corridor width over all directions that
    reproduce the sign pattern (a max-margin quadratic program); the
    threshold is the corridor midpoint at that direction.
    """
    omega, gamma, _ = _mode_impl(ds, level, cfg or MidpointConfig())
    return omega, gamma


def canonicalize_orientation(theta: ChangePlaneParams) -> ChangePlaneParams:
    """Resolve the sign ambiguity (beta,delta,omega,gamma) ~ (delta,beta,-omega,-gamma).

    Returns the representative whose first nonzero omega coordinate
    (|coordinate| > 1e-12) is positive.
    """
    nz = np.flatnonzero(np.abs(theta.omega) > 1e-12)
    if nz.size == 0:
        raise ValidationError("omega has no nonzero coordinate")
    if theta.omega[nz[0]] > 0:
        return theta
    return ChangePlaneParams(
        beta=theta.delta.copy(),
        delta=theta.beta.copy(),
        omega=-theta.omega,
        gamma=-theta.gamma,
    )
