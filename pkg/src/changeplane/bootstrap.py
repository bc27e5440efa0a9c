"""Parametric bootstrap for the plane and coefficient limits.

Everything the limit experiment needs is estimated from one fitted model:
residual law (smoothed empirical residuals), crossing density at the
plane (kernel estimate at zero of the fitted index), mark law (resampled
from the observations nearest the plane), and coefficient covariances
(plug-in).  The draws then come from the same limit sampler the analytic
law uses, and confidence intervals invert the draws' quantiles at the
appropriate rate (root-n for coefficients, n for plane parameters).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._linalg import orthonormal_complement as _ortho_complement
from ._linalg import pinv_psd
from ._rng import derive_seed
from .data import ChangePlaneParams, Dataset, check_unit
from .errors import NumericalError, ValidationError
from .limitlaw import LimitSpec, sample_limit_distribution
from .objective import subgroup_mask


@dataclass(frozen=True)
class ResidualSummary:
    """Residual-scale statistics at a fitted parameter.

    u_hat is the fitted index omega @ x - gamma, eps_hat the per-side
    regression residuals.  tau2/sigma2 are their centered second moments
    (divisor n), eta1/eta2 the derived bandwidths 2 * sd * n^(-1/5), and
    cov_w1/cov_w2 the plug-in covariances of the coefficient limits.
    """

    u_hat: np.ndarray
    eps_hat: np.ndarray
    u_bar: float
    eps_bar: float
    tau2: float
    sigma2: float
    eta1: float
    eta2: float
    cov_w1: np.ndarray
    cov_w2: np.ndarray


def residual_summary(ds: Dataset, theta_hat: ChangePlaneParams) -> ResidualSummary:
    if theta_hat.d != ds.d or theta_hat.p != ds.p:
        raise ValidationError("theta_hat dimensions do not match the dataset")
    u_hat = ds.x @ theta_hat.omega - theta_hat.gamma
    mask = subgroup_mask(ds, theta_hat.omega, theta_hat.gamma)
    fitted = np.where(mask, ds.z @ theta_hat.beta, ds.z @ theta_hat.delta)
    eps_hat = ds.y - fitted
    n = ds.n
    u_bar = float(u_hat.mean())
    eps_bar = float(eps_hat.mean())
    tau2 = float(((u_hat - u_bar) ** 2).mean())
    sigma2 = float(((eps_hat - eps_bar) ** 2).mean())
    eta1 = 2.0 * math.sqrt(tau2) * n ** (-0.2)
    eta2 = 2.0 * math.sqrt(sigma2) * n ** (-0.2)

    n_left = int(mask.sum())
    n_right = n - n_left
    if n_left == 0 or n_right == 0:
        raise NumericalError("a fitted subgroup is empty; no plug-in covariances")
    m_left = ds.z[mask].T @ ds.z[mask] / n
    m_right = ds.z[~mask].T @ ds.z[~mask] / n
    return ResidualSummary(
        u_hat=u_hat,
        eps_hat=eps_hat,
        u_bar=u_bar,
        eps_bar=eps_bar,
        tau2=tau2,
        sigma2=sigma2,
        eta1=eta1,
        eta2=eta2,
        cov_w1=sigma2 * pinv_psd(m_left),
        cov_w2=sigma2 * pinv_psd(m_right),
    )


def kernel_density_at_zero(u_hat: np.ndarray, bandwidth: float | None = None) -> float:
    """Gaussian kernel density estimate of the index density at zero.

    Default bandwidth is 2 * sd(u_hat) * n^(-1/5).
    """
    u = np.asarray(u_hat, dtype=float)
    n = u.shape[0]
    if n < 2:
        raise ValidationError("need at least 2 values for a density estimate")
    if bandwidth is None:
        tau = float(u.std())
        if tau <= 0:
            raise NumericalError("index values are constant; density undefined")
        bandwidth = 2.0 * tau * n ** (-0.2)
    h = float(bandwidth)
    if h <= 0:
        raise ValidationError(f"bandwidth must be positive, got {h!r}")
    return float(np.exp(-0.5 * (u / h) ** 2).mean() / (h * math.sqrt(2.0 * math.pi)))


def residual_resampler(eps_hat: np.ndarray, eps_bar: float, n: int):
    """Smoothed residual sampler: centered resample plus N(0, eta2^2).

    Returns a callable (rng, m) -> (m,) draws.  The added kernel noise
    uses the same bandwidth as the residual smoothing, so draws have mean
    ~0 and variance ~ sigma2 + eta2^2.
    """
    eps_hat = np.asarray(eps_hat, dtype=float)
    sigma = float(np.sqrt(((eps_hat - eps_bar) ** 2).mean()))
    eta2 = 2.0 * sigma * n ** (-0.2)

    def sampler(rng: np.random.Generator, m: int) -> np.ndarray:
        idx = rng.integers(0, eps_hat.shape[0], size=m)
        return (eps_hat[idx] - eps_bar) + eta2 * rng.standard_normal(m)

    return sampler


def orthonormal_complement(omega_hat: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the tangent space at a fitted direction.

    Satisfies obar' obar = I_(p-1) and obar' omega_hat = 0; for p = 1 the
    basis is empty (shape (1, 0)).
    """
    return _ortho_complement(check_unit(omega_hat, "omega_hat"))


@dataclass(frozen=True)
class BootstrapConfig:
    """Tuning for parametric_bootstrap / confidence_intervals.

    r_exponent sets the neighborhood size ceil(n^r_exponent) of
    plane-adjacent observations whose (z, x) rows approximate the mark
    law.  use_mode selects the mode midpoints both as bootstrap centers
    and as the plane draws used in intervals.
    """

    b_draws: int = 1000
    level: float = 0.95
    r_exponent: float = 2.0 / 3.0
    n_mc: int = 4096
    k_init: float | None = None
    max_doublings: int = 16
    use_mode: bool = False
    seed: int = 0
    contrasts: tuple = ()

    def __post_init__(self):
        if not 0.0 < self.level < 1.0:
            raise ValidationError(f"level must lie in (0, 1), got {self.level!r}")
        if not 0.0 < self.r_exponent < 1.0:
            raise ValidationError(
                f"r_exponent must lie in (0, 1), got {self.r_exponent!r}"
            )
        if self.b_draws < 1:
            raise ValidationError("b_draws must be >= 1")


def neighborhood_set(ds: Dataset, u_hat: np.ndarray, cfg: BootstrapConfig) -> tuple:
    """Indices of the r_n = ceil(n^r_exponent) observations nearest the
    fitted plane, plus the radius t_hat actually used."""
    u = np.asarray(u_hat, dtype=float)
    n = u.shape[0]
    r = min(n, math.ceil(n ** cfg.r_exponent))
    order = np.argsort(np.abs(u), kind="stable")
    idx = order[:r]
    return idx, float(np.abs(u[idx[-1]]))


def neighborhood_radius_ok(t_hat: float, r: int, f0_hat: float, n: int) -> bool:
    """Sanity check: the realized radius should be near r / (2 f0 n)."""
    ref = r / (2.0 * f0_hat * n)
    return bool(abs(t_hat - ref) <= 0.2 * ref)


def parametric_bootstrap(
    ds: Dataset, theta_hat: ChangePlaneParams, cfg: BootstrapConfig | None = None
) -> list:
    """Plug-in limit draws centered at a fitted parameter.

    Builds the estimated limit experiment (density, marks, residual law,
    covariances, contrast) and delegates to the limit sampler.  Returns
    the list of LimitDraw objects.
    """
    cfg = cfg or BootstrapConfig()
    summ = residual_summary(ds, theta_hat)
    f0_hat = kernel_density_at_zero(summ.u_hat, bandwidth=summ.eta1)
    if not f0_hat > 0:
        raise NumericalError("estimated crossing density at zero is not positive")
    idx, _ = neighborhood_set(ds, summ.u_hat, cfg)
    z_near = ds.z[idx]
    x_near = ds.x[idx]
    x_bound = float(np.max(np.linalg.norm(x_near, axis=1)))
    if x_bound <= 0:
        raise NumericalError("plane-adjacent marks are all zero")

    def g_sampler(rng: np.random.Generator, m: int) -> tuple:
        j = rng.integers(0, z_near.shape[0], size=m)
        return z_near[j], x_near[j]

    spec = LimitSpec(
        f0=f0_hat,
        sigma2=summ.sigma2,
        contrast=theta_hat.beta - theta_hat.delta,
        omega0=theta_hat.omega,
        gamma0=theta_hat.gamma,
        obar=orthonormal_complement(theta_hat.omega),
        cov_w1=summ.cov_w1,
        cov_w2=summ.cov_w2,
        g_sampler=g_sampler,
        x_bound=x_bound,
        eps_sampler=residual_resampler(summ.eps_hat, summ.eps_bar, ds.n),
    )
    which = "mode" if cfg.use_mode else "mean"
    return sample_limit_distribution(
        spec,
        cfg.b_draws,
        seed=derive_seed(cfg.seed, 71),
        which=which,
        n_mc=cfg.n_mc,
        k_init=cfg.k_init,
        max_doublings=cfg.max_doublings,
    )


@dataclass(frozen=True)
class CIRow:
    name: str
    estimate: float
    lo: float
    hi: float

    def covers(self, value: float) -> bool:
        return bool(self.lo <= value <= self.hi)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "estimate": float(self.estimate),
            "lo": float(self.lo),
            "hi": float(self.hi),
        }


@dataclass(frozen=True)
class CISet:
    level: float
    b_draws: int
    rows: tuple

    def __getitem__(self, name: str) -> CIRow:
        for row in self.rows:
            if row.name == name:
                return row
        raise KeyError(name)

    def names(self) -> list:
        return [row.name for row in self.rows]

    def to_dict(self) -> dict:
        return {
            "level": float(self.level),
            "b_draws": self.b_draws,
            "rows": [row.to_dict() for row in self.rows],
        }


def _percentile_invert(est: float, devs: np.ndarray, scale: float, alpha: float) -> tuple:
    q_lo, q_hi = np.quantile(devs, [alpha / 2.0, 1.0 - alpha / 2.0])
    return est - float(q_hi) / scale, est - float(q_lo) / scale


def confidence_intervals(
    theta_hat: ChangePlaneParams,
    draws: list,
    cfg: BootstrapConfig,
    n: int,
) -> CISet:
    """Percentile-inversion intervals from bootstrap limit draws.

    Coefficient deviations scale by sqrt(n), plane deviations by n;
    contrast rows (vectors over the flattened (beta, delta, omega, gamma))
    combine both rates per draw.  Every interval is widened, if needed,
    to contain its point estimate.
    """
    if not draws:
        raise ValidationError("need at least one bootstrap draw")
    alpha = 1.0 - cfg.level
    d, p = theta_hat.d, theta_hat.p
    w1 = np.array([dr.w1 for dr in draws])
    w2 = np.array([dr.w2 for dr in draws])
    if cfg.use_mode:
        om_dev = np.array([dr.omega_dev_mode for dr in draws])
        gm_dev = np.array([dr.gamma_dev_mode for dr in draws])
    else:
        om_dev = np.array([dr.omega_dev_mean for dr in draws])
        gm_dev = np.array([dr.gamma_dev_mean for dr in draws])
    rn = math.sqrt(n)

    rows = []

    def add(name: str, est: float, devs: np.ndarray, scale: float) -> None:
        lo, hi = _percentile_invert(est, devs, scale, alpha)
        rows.append(CIRow(name, est, min(lo, est), max(hi, est)))

    for j in range(d):
        add(f"beta{j + 1}", float(theta_hat.beta[j]), w1[:, j], rn)
    for j in range(d):
        add(f"delta{j + 1}", float(theta_hat.delta[j]), w2[:, j], rn)
    for c in range(p):
        add(f"omega{c + 1}", float(theta_hat.omega[c]), om_dev[:, c], float(n))
    add("gamma", float(theta_hat.gamma), gm_dev, float(n))

    flat = theta_hat.flat()
    for i, vec in enumerate(cfg.contrasts):
        v = np.asarray(vec, dtype=float)
        if v.shape != (2 * d + p + 1,):
            raise ValidationError(
                f"contrast {i + 1} must have length {2 * d + p + 1}, got {v.shape}"
            )
        if not np.any(v):
            raise ValidationError(f"contrast {i + 1} is the zero vector")
        c_zeta = v[: 2 * d]
        c_phi = v[2 * d:]
        dev = (
            np.hstack([w1, w2]) @ c_zeta / rn
            + np.hstack([om_dev, gm_dev[:, None]]) @ c_phi / n
        )
        est = float(flat @ v)
        q_lo, q_hi = np.quantile(dev, [alpha / 2.0, 1.0 - alpha / 2.0])
        rows.append(
            CIRow(
                f"contrast{i + 1}",
                est,
                min(est - float(q_hi), est),
                max(est - float(q_lo), est),
            )
        )

    return CISet(level=cfg.level, b_draws=len(draws), rows=tuple(rows))
