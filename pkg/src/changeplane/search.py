"""Plane search: profiled SSR maximization over the unit sphere.

The threshold is profiled out exactly (see objective.profile_curve), so the
search is over directions only.  One uniform sweep seeds an incumbent, then
local rounds sample angle grids in a shrinking span around it, resampled
inversely to the spherical parametrization's surface density so candidates
are uniform on the local patch.  The search stops after a fixed number of
stalled rounds.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ._linalg import reflect_pole_to
from ._rng import as_generator, child_rng, derive_seed
from .data import ChangePlaneParams, Dataset, check_unit
from .errors import NoSplitError, ValidationError
from .midpoint import (
    LevelSet,
    MidpointConfig,
    MidpointDiagnostics,
    _mean_impl,
    _mode_impl,
    canonicalize_orientation,
    induced_signs,
)
from .objective import profile_many, subgroup_least_squares


def sample_uniform_sphere(p: int, m: int, seed_or_rng) -> np.ndarray:
    """m directions uniform on the unit sphere in R^p (Gaussian projection)."""
    if p < 1:
        raise ValidationError(f"p must be >= 1, got {p}")
    rng = as_generator(seed_or_rng)
    g = rng.standard_normal((m, p))
    nrm = np.linalg.norm(g, axis=1, keepdims=True)
    nrm[nrm < 1e-300] = 1.0
    return g / nrm


def sample_local_sphere(
    center: np.ndarray, a: float, m0: int, m_draw: int, seed_or_rng
) -> np.ndarray:
    """m_draw directions near ``center``, uniform on the spanned patch.

    Each of the p-1 spherical angles gets m0 random values in
    a*[-pi/2, pi/2).  An angle-uniform draw lands on the sphere with
    density inversely proportional to the area element
    prod_j cos^(p-1-j)(phi_j), so the Cartesian product grid is resampled
    with probability proportional to that area element (the inverse of
    the draw's density), which makes the sample uniform in surface
    measure.  The zero-angle pole is rotated onto ``center``.
    """
    center = check_unit(center, "center")
    p = center.shape[0]
    rng = as_generator(seed_or_rng)
    if not 0.0 < a <= 1.0:
        raise ValidationError(f"span fraction a must lie in (0, 1], got {a!r}")
    if p == 1:
        return np.tile(center, (m_draw, 1))
    if m0 ** (p - 1) > (1 << 20):
        raise ValidationError(f"angle grid m0^(p-1) = {m0 ** (p - 1)} too large")

    half = a * math.pi / 2.0
    axes = [rng.uniform(-half, half, size=m0) for _ in range(p - 1)]
    mesh = np.meshgrid(*axes, indexing="ij")
    phi = np.column_stack([ax.ravel() for ax in mesh])  # (m0^(p-1), p-1)

    expo = np.arange(p - 2, -1, -1, dtype=float)  # p-1-j for j = 1..p-1
    w = np.prod(np.cos(phi) ** expo, axis=1)  # area element at each node
    w /= w.sum()
    idx = rng.choice(phi.shape[0], size=m_draw, replace=True, p=w)
    phi = phi[idx]

    # phi -> point with pole e_p at phi = 0:
    # v_j = sin(phi_j) * prod_{l<j} cos(phi_l), v_p = prod cos(phi_l).
    cosc = np.cumprod(np.cos(phi), axis=1)
    pts = np.empty((m_draw, p))
    pts[:, 0] = np.sin(phi[:, 0])
    for j in range(1, p - 1):
        pts[:, j] = np.sin(phi[:, j]) * cosc[:, j - 1]
    pts[:, p - 1] = cosc[:, p - 2]

    rot = reflect_pole_to(center)
    return pts @ rot.T


@dataclass(frozen=True)
class SearchConfig:
    """Tuning for maximize_ssr / fit.

    min_subgroup defaults to max(d, 2); both subgroup second-moment
    matrices must be strictly positive definite at every candidate split,
    tightened to a smallest-eigenvalue floor when c3 is set.  m0 defaults
    by dimension: 64 (p <= 2), 32 (p = 3), 16 (p >= 4).
    """

    n_uniform: int = 4096
    m0: int | None = None
    m_resample: int = 256
    a_init: float = 1.0
    a_decay: float = 0.8
    stall_tol: float = 1e-10
    n0_stall: int = 20
    max_iterations: int = 200
    min_subgroup: int | None = None
    c3: float | None = None
    seed: int = 0

    def resolved_m0(self, p: int) -> int:
        if self.m0 is not None:
            return int(self.m0)
        if p <= 2:
            return 64
        if p == 3:
            return 32
        return 16

    def resolved_min_subgroup(self, d: int) -> int:
        if self.min_subgroup is not None:
            return int(self.min_subgroup)
        return max(d, 2)


@dataclass
class SearchTrace:
    """Per-iteration search log; iteration 0 is the uniform sweep."""

    iterations: list = field(default_factory=list)
    spans: list = field(default_factory=list)
    best_ssrs: list = field(default_factory=list)
    n_candidates: list = field(default_factory=list)
    n_feasible: list = field(default_factory=list)
    wall_time: float = 0.0

    def log(self, it: int, span: float, best: float, n_cand: int, n_feas: int) -> None:
        self.iterations.append(int(it))
        self.spans.append(float(span))
        self.best_ssrs.append(float(best))
        self.n_candidates.append(int(n_cand))
        self.n_feasible.append(int(n_feas))

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("iteration,ssr,span\n")
            for it, s, sp in zip(self.iterations, self.best_ssrs, self.spans):
                fh.write(f"{it},{s!r},{sp!r}\n")


def _eval_directions(ds: Dataset, omegas: np.ndarray, min_subgroup: int, c3) -> tuple:
    """Profiled SSR per direction; -inf marks infeasible ones."""
    gammas, ssrs = profile_many(ds, omegas, min_subgroup=min_subgroup, c3=c3)
    return ssrs, gammas


def maximize_ssr(ds: Dataset, cfg: SearchConfig | None = None) -> tuple:
    """Search for the SSR-maximizing plane: (omega_tilde, gamma_tilde, trace).

    Raises NoSplitError when no direction admits an admissible split.
    """
    cfg = cfg or SearchConfig()
    t0 = time.perf_counter()
    trace = SearchTrace()
    min_sub = cfg.resolved_min_subgroup(ds.d)

    if ds.p == 1:
        # S^0 has two points; the scan over each is exhaustive.
        cand = np.array([[1.0], [-1.0]])
        ssrs, gammas = _eval_directions(ds, cand, min_sub, cfg.c3)
        if not np.isfinite(ssrs).any():
            raise NoSplitError("no admissible split in either scalar direction")
        i = int(np.argmax(ssrs))
        trace.log(0, math.pi, ssrs[i], 2, int(np.isfinite(ssrs).sum()))
        trace.wall_time = time.perf_counter() - t0
        return cand[i], float(gammas[i]), trace

    omegas = sample_uniform_sphere(ds.p, cfg.n_uniform, child_rng(cfg.seed, 0))
    ssrs, gammas = _eval_directions(ds, omegas, min_sub, cfg.c3)
    n_feas = int(np.isfinite(ssrs).sum())
    if n_feas == 0:
        raise NoSplitError("no admissible split among uniform candidates")
    i = int(np.argmax(ssrs))
    best_omega, best_gamma, best_ssr = omegas[i], float(gammas[i]), float(ssrs[i])
    trace.log(0, math.pi, best_ssr, cfg.n_uniform, n_feas)

    m0 = cfg.resolved_m0(ds.p)
    stalls = 0
    a = cfg.a_init
    for it in range(1, cfg.max_iterations + 1):
        a = a * cfg.a_decay
        omegas = sample_local_sphere(
            best_omega, a, m0, cfg.m_resample, child_rng(cfg.seed, it)
        )
        ssrs, gammas = _eval_directions(ds, omegas, min_sub, cfg.c3)
        n_feas = int(np.isfinite(ssrs).sum())
        improved = False
        if n_feas:
            j = int(np.argmax(ssrs))
            if ssrs[j] > best_ssr:
                improved = (ssrs[j] - best_ssr) > cfg.stall_tol * max(1.0, abs(best_ssr))
                best_omega, best_gamma, best_ssr = omegas[j], float(gammas[j]), float(ssrs[j])
        stalls = 0 if improved else stalls + 1
        trace.log(it, a, best_ssr, cfg.m_resample, n_feas)
        if stalls >= cfg.n0_stall:
            break

    trace.wall_time = time.perf_counter() - t0
    return best_omega, best_gamma, trace


@dataclass(frozen=True)
class FitResult:
    """Everything the fit produced.

    theta_tilde is the raw SSR maximizer, theta_hat the mean midpoint
    representative of its level set, theta_check the mode representative.
    All three share (beta, delta) because they induce the same subgroups,
    and all are orientation-canonicalized.
    """

    theta_tilde: ChangePlaneParams
    theta_hat: ChangePlaneParams
    theta_check: ChangePlaneParams
    ssr: float
    m_value: float
    n_left: int
    n_right: int
    level: LevelSet
    trace: SearchTrace
    mean_diag: MidpointDiagnostics
    mode_diag: MidpointDiagnostics

    @property
    def gamma_check_star(self) -> float:
        """Left-touching threshold at the mode direction (diagnostic)."""
        return float(self.mode_diag.gamma_star)

    def to_dict(self) -> dict:
        return {
            "theta_tilde": self.theta_tilde.to_dict(),
            "theta_hat": self.theta_hat.to_dict(),
            "theta_check": self.theta_check.to_dict(),
            "ssr": float(self.ssr),
            "m_value": float(self.m_value),
            "n_left": self.n_left,
            "n_right": self.n_right,
            "gamma_check_star": self.gamma_check_star,
            "diagnostics": {
                "mean": self.mean_diag.to_dict(),
                "mode": self.mode_diag.to_dict(),
                "search": {
                    "iterations": len(self.trace.iterations),
                    "final_span": float(self.trace.spans[-1]),
                    "best_ssr": float(self.trace.best_ssrs[-1]),
                },
            },
        }


def fit(
    ds: Dataset,
    cfg: SearchConfig | None = None,
    mid_cfg: MidpointConfig | None = None,
) -> FitResult:
    """Full pipeline: SSR search, split regression, both midpoints."""
    cfg = cfg or SearchConfig()
    if mid_cfg is None:
        mid_cfg = MidpointConfig(seed=derive_seed(cfg.seed, 9001))

    omega_t, gamma_t, trace = maximize_ssr(ds, cfg)
    split = subgroup_least_squares(ds, omega_t, gamma_t)
    if split.beta is None or split.delta is None:
        raise NoSplitError("search returned a plane with an empty subgroup")

    level = induced_signs(ds, omega_t, gamma_t)
    omega_h, gamma_h, mean_diag = _mean_impl(ds, level, mid_cfg)
    omega_c, gamma_c, mode_diag = _mode_impl(ds, level, mid_cfg)

    def pack(omega, gamma):
        return canonicalize_orientation(
            ChangePlaneParams(beta=split.beta, delta=split.delta, omega=omega, gamma=gamma)
        )

    theta_tilde = pack(omega_t, gamma_t)
    # Subgroup counts follow the reported (canonical) orientation of the
    # witness: a flipped witness swaps which side is "left".
    flipped = bool(np.any(theta_tilde.omega != omega_t))
    n_left, n_right = split.n_left, split.n_right
    if flipped:
        n_left, n_right = n_right, n_left

    return FitResult(
        theta_tilde=theta_tilde,
        theta_hat=pack(omega_h, gamma_h),
        theta_check=pack(omega_c, gamma_c),
        ssr=float(split.ssr),
        m_value=float(split.m_value),
        n_left=n_left,
        n_right=n_right,
        level=level,
        trace=trace,
        mean_diag=mean_diag,
        mode_diag=mode_diag,
    )
