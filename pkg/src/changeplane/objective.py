"""Split least squares and the profiled objective over the threshold.

For a fixed direction ``omega`` the fitted threshold only moves when the
plane crosses a data projection, so profiling over ``gamma`` reduces to
scanning midpoints of consecutive distinct order statistics of
``x @ omega``.  All split statistics are produced in one vectorized pass
from cumulative Gram/cross-moment arrays in projection order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import PD_TOL, pinv_psd
from .data import Dataset, check_unit
from .errors import NoSplitError, ValidationError


def subgroup_mask(ds: Dataset, omega: np.ndarray, gamma: float) -> np.ndarray:
    """Boolean left-subgroup indicator: entry i is True iff omega@x_i - gamma <= 0."""
    omega = check_unit(omega)
    if omega.shape[0] != ds.p:
        raise ValidationError(f"omega has length {omega.shape[0]}, expected {ds.p}")
    return (ds.x @ omega - float(gamma)) <= 0.0


def _block(z: np.ndarray, y: np.ndarray) -> tuple:
    """Least-squares pieces for one subgroup: (coef, explained sum of squares)."""
    if z.shape[0] == 0:
        return None, 0.0
    a = z.T @ z
    b = z.T @ y
    coef = pinv_psd(a) @ b
    return coef, float(b @ coef)


def ssr(ds: Dataset, omega: np.ndarray, gamma: float) -> float:
    """Explained sum of squares of the split fit at (omega, gamma).

    This is the quantity the change-plane search maximizes; it relates to
    the mean squared objective through n * m_value + ssr = y @ y.
    """
    mask = subgroup_mask(ds, omega, gamma)
    _, s_l = _block(ds.z[mask], ds.y[mask])
    _, s_r = _block(ds.z[~mask], ds.y[~mask])
    return s_l + s_r


@dataclass(frozen=True)
class SplitFit:
    """Per-side least squares at a fixed plane.

    ``beta``/``delta`` are minimum-norm solutions (None for an empty side),
    ``ssr`` the explained sum of squares, ``m_value`` the mean squared
    residual over the full sample.
    """

    beta: np.ndarray | None
    delta: np.ndarray | None
    ssr: float
    m_value: float
    n_left: int
    n_right: int


def subgroup_least_squares(ds: Dataset, omega: np.ndarray, gamma: float) -> SplitFit:
    mask = subgroup_mask(ds, omega, gamma)
    beta, s_l = _block(ds.z[mask], ds.y[mask])
    delta, s_r = _block(ds.z[~mask], ds.y[~mask])
    resid = ds.y.copy()
    if beta is not None:
        resid[mask] -= ds.z[mask] @ beta
    if delta is not None:
        resid[~mask] -= ds.z[~mask] @ delta
    m_value = float(resid @ resid) / ds.n
    return SplitFit(
        beta=beta,
        delta=delta,
        ssr=s_l + s_r,
        m_value=m_value,
        n_left=int(mask.sum()),
        n_right=int(ds.n - mask.sum()),
    )


@dataclass(frozen=True)
class FeasibilityReport:
    """Subgroup second-moment diagnostics at a fixed plane."""

    min_eig_left: float
    min_eig_right: float
    in_kn: bool
    in_kn_prime: bool
    n_left: int
    n_right: int


def feasibility(ds: Dataset, omega: np.ndarray, gamma: float, c3: float = 0.0) -> FeasibilityReport:
    """Check the plane against the eigenvalue feasibility classes.

    ``in_kn_prime`` requires both subgroup-conditional second-moment
    matrices of z to be strictly positive definite; ``in_kn`` additionally
    requires their smallest eigenvalues to be at least ``c3``.
    """
    if c3 < 0:
        raise ValidationError(f"c3 must be >= 0, got {c3!r}")
    mask = subgroup_mask(ds, omega, gamma)
    sides = []
    for m in (mask, ~mask):
        k = int(m.sum())
        if k == 0:
            sides.append((0.0, 0.0, k))
            continue
        zz = ds.z[m].T @ ds.z[m] / k
        w = np.linalg.eigvalsh(zz)
        sides.append((float(w[0]), float(w[-1]), k))
    (lo_l, hi_l, n_l), (lo_r, hi_r, n_r) = sides
    prime = (
        n_l > 0
        and n_r > 0
        and lo_l > PD_TOL * max(1.0, hi_l)
        and lo_r > PD_TOL * max(1.0, hi_r)
    )
    return FeasibilityReport(
        min_eig_left=lo_l,
        min_eig_right=lo_r,
        in_kn=bool(prime and lo_l >= c3 and lo_r >= c3),
        in_kn_prime=bool(prime),
        n_left=n_l,
        n_right=n_r,
    )


@dataclass(frozen=True)
class ProfileCurve:
    """All admissible threshold candidates for one direction.

    ``gammas`` ascending midpoints of consecutive distinct projections,
    ``ssrs`` the explained sum of squares at each, ``n_lefts`` the left
    subgroup sizes.  Candidates excluded by size or eigenvalue filters are
    dropped entirely.
    """

    gammas: np.ndarray
    ssrs: np.ndarray
    n_lefts: np.ndarray

    @property
    def size(self) -> int:
        return self.gammas.shape[0]

    def best(self) -> tuple:
        """(gamma, ssr) at the maximizer; first (smallest gamma) on ties."""
        i = int(np.argmax(self.ssrs))
        return float(self.gammas[i]), float(self.ssrs[i])


def profile_curve(
    ds: Dataset,
    omega: np.ndarray,
    *,
    min_subgroup: int = 1,
    pd_filter: bool = False,
    c3: float | None = None,
) -> ProfileCurve:
    """Vectorized scan of the profiled objective along one direction.

    ``pd_filter`` keeps only splits where both subgroup second-moment
    matrices are strictly positive definite; ``c3`` tightens that to a
    smallest-eigenvalue floor.  ``min_subgroup`` bounds both side counts
    from below.
    """
    omega = check_unit(omega)
    if omega.shape[0] != ds.p:
        raise ValidationError(f"omega has length {omega.shape[0]}, expected {ds.p}")
    t = ds.x @ omega
    order = np.argsort(t, kind="stable")
    ts = t[order]
    zs = ds.z[order]
    ys = ds.y[order]
    n, d = zs.shape

    gram = np.cumsum(zs[:, :, None] * zs[:, None, :], axis=0)
    cross = np.cumsum(zs * ys[:, None], axis=0)

    cut = np.arange(n - 1)  # split after sorted row i -> left size i + 1
    valid = ts[cut + 1] > ts[cut]
    m = max(int(min_subgroup), 1)
    valid &= (cut + 1 >= m) & (n - cut - 1 >= m)
    cut = cut[valid]
    if cut.size == 0:
        return ProfileCurve(np.empty(0), np.empty(0), np.empty(0, dtype=int))

    a_l = gram[cut]
    b_l = cross[cut]
    a_r = gram[-1] - a_l
    b_r = cross[-1] - b_l
    n_l = cut + 1
    n_r = n - n_l

    if pd_filter or c3 is not None:
        w_l = np.linalg.eigvalsh(a_l / n_l[:, None, None])
        w_r = np.linalg.eigvalsh(a_r / n_r[:, None, None])
        keep = (w_l[:, 0] > PD_TOL * np.maximum(1.0, w_l[:, -1])) & (
            w_r[:, 0] > PD_TOL * np.maximum(1.0, w_r[:, -1])
        )
        if c3 is not None:
            keep &= (w_l[:, 0] >= c3) & (w_r[:, 0] >= c3)
        if not np.all(keep):
            cut, a_l, b_l, a_r, b_r = cut[keep], a_l[keep], b_l[keep], a_r[keep], b_r[keep]
            n_l, n_r = n_l[keep], n_r[keep]
        if cut.size == 0:
            return ProfileCurve(np.empty(0), np.empty(0), np.empty(0, dtype=int))

    p_l = np.linalg.pinv(a_l, rcond=1e-10, hermitian=True)
    p_r = np.linalg.pinv(a_r, rcond=1e-10, hermitian=True)
    ssrs = np.einsum("md,mde,me->m", b_l, p_l, b_l) + np.einsum(
        "md,mde,me->m", b_r, p_r, b_r
    )
    gammas = 0.5 * (ts[cut] + ts[cut + 1])
    return ProfileCurve(gammas=gammas, ssrs=ssrs, n_lefts=n_l)


def profile_gamma(
    ds: Dataset,
    omega: np.ndarray,
    *,
    min_subgroup: int = 1,
    pd_filter: bool = False,
    c3: float | None = None,
) -> tuple:
    """Best threshold for one direction: (gamma, ssr), smallest gamma on ties.

    Raises NoSplitError when no admissible split exists (all projections
    tied, or every split filtered out).
    """
    curve = profile_curve(ds, omega, min_subgroup=min_subgroup, pd_filter=pd_filter, c3=c3)
    if curve.size == 0:
        raise NoSplitError("no admissible split along this direction")
    return curve.best()


def profile_many(
    ds: Dataset,
    omegas: np.ndarray,
    *,
    min_subgroup: int = 1,
    c3: float | None = None,
) -> tuple:
    """Profiled objective for a batch of directions at once.

    Vectorized equivalent of calling profile_gamma per row of ``omegas``
    with pd_filter=True (the search's admissibility rule); directions with
    no admissible split get ssr -inf.  Returns (gammas, ssrs).

    Work is chunked over directions to bound the memory of the cumulative
    (n, chunk, d, d) Gram stacks.
    """
    omegas = np.asarray(omegas, dtype=float)
    m, p = omegas.shape
    if p != ds.p:
        raise ValidationError(f"directions have length {p}, expected {ds.p}")
    n, d = ds.n, ds.d
    out_g = np.zeros(m)
    out_s = np.full(m, -np.inf)
    msub = max(int(min_subgroup), 1)
    if n - 1 < 1 or msub > n - msub:
        return out_g, out_s

    chunk = max(8, min(256, (1 << 26) // max(1, n * d * d * 8)))
    y = ds.y
    z = ds.z
    for lo in range(0, m, chunk):
        hi = min(lo + chunk, m)
        mc = hi - lo
        t = ds.x @ omegas[lo:hi].T  # (n, mc)
        order = np.argsort(t, axis=0, kind="stable")
        ts = np.take_along_axis(t, order, axis=0)
        zs = z[order]  # (n, mc, d)
        ys = y[order]
        gram = np.cumsum(zs[:, :, :, None] * zs[:, :, None, :], axis=0)
        cross = np.cumsum(zs * ys[:, :, None], axis=0)

        cuts = np.arange(msub - 1, n - msub)  # split after sorted row i
        valid = ts[cuts + 1] > ts[cuts]  # (ncut, mc)
        if not valid.any():
            continue
        a_l = gram[cuts]  # (ncut, mc, d, d)
        b_l = cross[cuts]
        a_r = gram[-1][None] - a_l
        b_r = cross[-1][None] - b_l
        n_l = (cuts + 1).astype(float)[:, None, None]
        n_r = n - n_l

        w_l = np.linalg.eigvalsh(a_l / n_l[..., None])
        w_r = np.linalg.eigvalsh(a_r / n_r[..., None])
        keep = valid & (w_l[..., 0] > PD_TOL * np.maximum(1.0, w_l[..., -1])) & (
            w_r[..., 0] > PD_TOL * np.maximum(1.0, w_r[..., -1])
        )
        if c3 is not None:
            keep &= (w_l[..., 0] >= c3) & (w_r[..., 0] >= c3)
        if not keep.any():
            continue

        # Solve only the admissible (cut, direction) pairs; both sides are
        # strictly PD there so plain solve applies.
        idx = np.nonzero(keep)
        sol_l = np.linalg.solve(a_l[idx], b_l[idx][..., None])[..., 0]
        sol_r = np.linalg.solve(a_r[idx], b_r[idx][..., None])[..., 0]
        vals = np.einsum("kd,kd->k", b_l[idx], sol_l) + np.einsum(
            "kd,kd->k", b_r[idx], sol_r
        )
        ssr_mat = np.full(keep.shape, -np.inf)
        ssr_mat[idx] = vals
        best = np.argmax(ssr_mat, axis=0)  # first max: smallest gamma on ties
        cols = np.arange(mc)
        best_ssr = ssr_mat[best, cols]
        feas = np.isfinite(best_ssr)
        bc = cuts[best]
        gam = 0.5 * (ts[bc, cols] + ts[bc + 1, cols])
        out_s[lo:hi] = np.where(feas, best_ssr, -np.inf)
        out_g[lo:hi] = np.where(feas, gam, 0.0)
    return out_g, out_s
