"""Shared linear-algebra helpers."""

from __future__ import annotations

import numpy as np

# Cutoff for Moore-Penrose pseudo-inverses of Gram matrices.  Singular values
# below RCOND * s_max are treated as zero, so rank-deficient subgroup designs
# fall back to minimum-norm least squares instead of blowing up.
RCOND = 1e-10

# Relative eigenvalue threshold below which a symmetric PSD matrix is treated
# as singular (strict positive-definiteness tests).
PD_TOL = 1e-10


def pinv_psd(a: np.ndarray) -> np.ndarray:
    """Moore-Penrose pseudo-inverse of a symmetric PSD matrix."""
    return np.linalg.pinv(a, rcond=RCOND, hermitian=True)


def min_eig(a: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric matrix (0x0 -> 0.0)."""
    if a.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh(a)[0])


def is_pd(a: np.ndarray) -> bool:
    """Strict positive definiteness up to a relative floor."""
    if a.size == 0:
        return False
    w = np.linalg.eigvalsh(a)
    return bool(w[0] > PD_TOL * max(1.0, float(w[-1])))


def orthonormal_complement(omega: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the hyperplane orthogonal to a unit vector.

    Parameters
    ----------
    omega : ndarray, shape (p,)
        Unit vector.

    Returns
    -------
    ndarray, shape (p, p - 1)
        Columns are orthonormal and orthogonal to ``omega``.  Built from the
        Householder reflector that maps ``omega`` onto ``-sign(omega_1) e_1``;
        columns 2..p of the reflector span the complement.  For p = 1 the
        result is an empty (1, 0) matrix.
    """
    omega = np.asarray(omega, dtype=float).reshape(-1)
    p = omega.shape[0]
    if p == 1:
        return np.zeros((1, 0))
    s = 1.0 if omega[0] >= 0 else -1.0
    v = omega + s * np.eye(p)[:, 0]
    h = np.eye(p) - 2.0 * np.outer(v, v) / float(v @ v)
    return h[:, 1:]


def reflect_pole_to(center: np.ndarray) -> np.ndarray:
    """Orthogonal matrix mapping the pole e_p onto ``center`` (unit vector).

    Uses the Householder reflection through the bisector of e_p and center;
    returns the identity when the two already coincide.
    """
    center = np.asarray(center, dtype=float).reshape(-1)
    p = center.shape[0]
    pole = np.zeros(p)
    pole[-1] = 1.0
    v = pole - center
    nv2 = float(v @ v)
    if nv2 < 1e-28:
        return np.eye(p)
    return np.eye(p) - 2.0 * np.outer(v, v) / nv2
