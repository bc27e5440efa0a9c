"""Data model: observed samples, parameters, and simulation designs.

Shape conventions used across the package:

* ``y`` is ``(n,)``, ``z`` is ``(n, d)``, ``x`` is ``(n, p)``.
* ``omega`` is a unit vector of shape ``(p,)``; ``gamma`` is a scalar.
* A point belongs to the *left* subgroup when ``omega @ x - gamma <= 0``
  (ties on the plane count as left) and to the right subgroup otherwise.

The regression surface is ``beta @ z`` on the left and ``delta @ z`` on the
right of the plane ``{x : omega @ x = gamma}``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

UNIT_TOL = 1e-9


def _as_float_array(a, name: str, ndim: int) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim != ndim:
        raise ValidationError(f"{name} must have {ndim} dimension(s), got {arr.ndim}")
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise ValidationError(f"{name} contains a non-finite value at index {tuple(bad)}")
    return arr


@dataclass(frozen=True)
class Dataset:
    """An observed sample (y, z, x).

    Arrays are coerced to float64, checked for finiteness, and frozen
    (read-only views) so a Dataset can be shared across threads.
    """

    y: np.ndarray
    z: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        y = _as_float_array(self.y, "y", 1)
        z = _as_float_array(self.z, "z", 2)
        x = _as_float_array(self.x, "x", 2)
        n = y.shape[0]
        if n < 2:
            raise ValidationError(f"need at least 2 observations, got {n}")
        if z.shape[0] != n or x.shape[0] != n:
            raise ValidationError(
                f"row mismatch: y has {n} rows, z has {z.shape[0]}, x has {x.shape[0]}"
            )
        if z.shape[1] < 1 or x.shape[1] < 1:
            raise ValidationError("z and x must each have at least one column")
        for arr in (y, z, x):
            arr.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def d(self) -> int:
        return self.z.shape[1]

    @property
    def p(self) -> int:
        return self.x.shape[1]


def check_unit(omega: np.ndarray, name: str = "omega") -> np.ndarray:
    """Validate and return a finite unit vector."""
    w = _as_float_array(omega, name, 1)
    nrm = float(np.linalg.norm(w))
    if abs(nrm - 1.0) > UNIT_TOL:
        raise ValidationError(f"{name} must be a unit vector, got norm {nrm!r}")
    return w


@dataclass(frozen=True)
class ChangePlaneParams:
    """Full parameter vector theta = (beta, delta, omega, gamma)."""

    beta: np.ndarray
    delta: np.ndarray
    omega: np.ndarray
    gamma: float

    def __post_init__(self):
        beta = _as_float_array(self.beta, "beta", 1)
        delta = _as_float_array(self.delta, "delta", 1)
        omega = check_unit(self.omega)
        if beta.shape != delta.shape:
            raise ValidationError("beta and delta must have the same length")
        gamma = float(self.gamma)
        if not math.isfinite(gamma):
            raise ValidationError("gamma must be finite")
        for arr in (beta, delta, omega):
            arr.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "gamma", gamma)

    @property
    def d(self) -> int:
        return self.beta.shape[0]

    @property
    def p(self) -> int:
        return self.omega.shape[0]

    def flat(self) -> np.ndarray:
        """Concatenate (beta, delta, omega, gamma) into one vector."""
        return np.concatenate([self.beta, self.delta, self.omega, [self.gamma]])

    def to_dict(self) -> dict:
        return {
            "beta": [float(v) for v in self.beta],
            "delta": [float(v) for v in self.delta],
            "omega": [float(v) for v in self.omega],
            "gamma": float(self.gamma),
        }

    @staticmethod
    def from_dict(obj: dict) -> "ChangePlaneParams":
        return ChangePlaneParams(
            beta=np.asarray(obj["beta"], dtype=float),
            delta=np.asarray(obj["delta"], dtype=float),
            omega=np.asarray(obj["omega"], dtype=float),
            gamma=float(obj["gamma"]),
        )


def mean_response(theta: ChangePlaneParams, z_row: np.ndarray, x_row: np.ndarray) -> float:
    """Regression function at a single covariate pair.

    Returns ``beta @ z`` when ``omega @ x - gamma <= 0`` and ``delta @ z``
    otherwise; points exactly on the plane take the beta branch.
    """
    z_row = _as_float_array(z_row, "z_row", 1)
    x_row = _as_float_array(x_row, "x_row", 1)
    if z_row.shape[0] != theta.d or x_row.shape[0] != theta.p:
        raise ValidationError("z_row/x_row dimensions do not match theta")
    u = float(theta.omega @ x_row) - theta.gamma
    if u <= 0.0:
        return float(theta.beta @ z_row)
    return float(theta.delta @ z_row)


def mean_response_matrix(theta: ChangePlaneParams, z: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Vectorized regression function over rows of (z, x)."""
    left = (x @ theta.omega - theta.gamma) <= 0.0
    return np.where(left, z @ theta.beta, z @ theta.delta)


@dataclass(frozen=True)
class ValidationReport:
    """Diagnostics from validate_dataset (advisory, not a gate)."""

    n: int
    d: int
    p: int
    x_bound: float
    z_bound: float
    x_cov_full_rank: bool
    z_gram_full_rank: bool
    warnings: tuple = ()

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "p": self.p,
            "x_bound": float(self.x_bound),
            "z_bound": float(self.z_bound),
            "x_cov_full_rank": self.x_cov_full_rank,
            "z_gram_full_rank": self.z_gram_full_rank,
            "warnings": list(self.warnings),
        }


def validate_dataset(ds: Dataset) -> ValidationReport:
    """Shape/boundedness/rank diagnostics for a dataset.

    Reports the largest row norms of x and z (empirical envelope constants)
    and flags rank deficiency of cov(x) and of the Gram matrix z'z.
    """
    warnings = []
    x_bound = float(np.max(np.linalg.norm(ds.x, axis=1)))
    z_bound = float(np.max(np.linalg.norm(ds.z, axis=1)))

    if ds.p == 1:
        x_full = bool(np.var(ds.x[:, 0]) > 0.0)
    else:
        cov = np.cov(ds.x, rowvar=False)
        x_full = bool(np.linalg.matrix_rank(cov, hermitian=True) == ds.p)
    if not x_full:
        warnings.append("cov(x) is rank deficient; the plane direction is not identified")

    gram = ds.z.T @ ds.z
    z_full = bool(np.linalg.matrix_rank(gram, hermitian=True) == ds.d)
    if not z_full:
        warnings.append("z'z is rank deficient; regression coefficients are not identified")

    return ValidationReport(
        n=ds.n,
        d=ds.d,
        p=ds.p,
        x_bound=x_bound,
        z_bound=z_bound,
        x_cov_full_rank=x_full,
        z_gram_full_rank=z_full,
        warnings=tuple(warnings),
    )


# --------------------------------------------------------------------------
# Simulation designs
# --------------------------------------------------------------------------

_MODEL_DIMS = {1: (2, 1), 2: (2, 2), 3: (3, 3)}  # model id -> (d, p)

_SQRT2 = math.sqrt(2.0)
_SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class ScenarioSpec:
    """One of the three benchmark designs with a coefficient scenario.

    Model 1: x ~ U(-2,2), z = (1, Bernoulli(1/2)), plane x = 1.
    Model 2: x = (U(-3,3), Bernoulli(1/2)), z = (1, Bernoulli(1/2)),
             plane (x1 - x2)/sqrt(2) = 1/sqrt(2).
    Model 3: x ~ U(-2,2)^3, z = (1, U(-2,2)^2),
             plane (x1 - x2 - x3)/sqrt(3) = 1/sqrt(3).

    Scenario 1 sets beta = 1, delta = -1 (coordinatewise); scenario 2 sets
    beta = 1.5, delta = 0.5.  Noise is N(0, sigma^2), sigma = 1 by default.
    """

    model: int
    scenario: int
    sigma: float = 1.0

    def __post_init__(self):
        if self.model not in (1, 2, 3):
            raise ValidationError(f"model must be 1, 2 or 3, got {self.model!r}")
        if self.scenario not in (1, 2):
            raise ValidationError(f"scenario must be 1 or 2, got {self.scenario!r}")
        if not (math.isfinite(self.sigma) and self.sigma >= 0.0):
            raise ValidationError(f"sigma must be finite and >= 0, got {self.sigma!r}")

    @property
    def d(self) -> int:
        return _MODEL_DIMS[self.model][0]

    @property
    def p(self) -> int:
        return _MODEL_DIMS[self.model][1]

    @property
    def theta0(self) -> ChangePlaneParams:
        d = self.d
        if self.scenario == 1:
            beta, delta = np.ones(d), -np.ones(d)
        else:
            beta, delta = 1.5 * np.ones(d), 0.5 * np.ones(d)
        if self.model == 1:
            omega, gamma = np.array([1.0]), 1.0
        elif self.model == 2:
            omega, gamma = np.array([1.0, -1.0]) / _SQRT2, 1.0 / _SQRT2
        else:
            omega, gamma = np.array([1.0, -1.0, -1.0]) / _SQRT3, 1.0 / _SQRT3
        return ChangePlaneParams(beta=beta, delta=delta, omega=omega, gamma=gamma)

    # Scalar design constants used by the limit law.  f0 is the density of
    # omega0'x - gamma0 at zero, x_bound the a.s. bound on |x|, p_left the
    # probability of the left subgroup, e_zz the second moment E[zz'].
    @property
    def f0(self) -> float:
        return {1: 0.25, 2: _SQRT2 / 6.0, 3: _SQRT3 * 11.0 / 64.0}[self.model]

    @property
    def x_bound(self) -> float:
        return {1: 2.0, 2: math.sqrt(10.0), 3: 2.0 * _SQRT3}[self.model]

    @property
    def p_left(self) -> float:
        return {1: 0.75, 2: 0.75, 3: 131.0 / 192.0}[self.model]

    @property
    def e_zz(self) -> np.ndarray:
        if self.model in (1, 2):
            return np.array([[1.0, 0.5], [0.5, 0.5]])
        return np.diag([1.0, 4.0 / 3.0, 4.0 / 3.0])

    # -- raw covariate laws ------------------------------------------------

    def sample_x(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.model == 1:
            return rng.uniform(-2.0, 2.0, size=(n, 1))
        if self.model == 2:
            x1 = rng.uniform(-3.0, 3.0, size=n)
            x2 = rng.integers(0, 2, size=n).astype(float)
            return np.column_stack([x1, x2])
        return rng.uniform(-2.0, 2.0, size=(n, 3))

    def sample_z(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.model in (1, 2):
            b = rng.integers(0, 2, size=n).astype(float)
            return np.column_stack([np.ones(n), b])
        u = rng.uniform(-2.0, 2.0, size=(n, 2))
        return np.column_stack([np.ones(n), u])

    # -- law of (z, x) conditional on x lying on the true plane ------------

    def sample_on_plane(self, rng: np.random.Generator, n: int) -> tuple:
        """Draw (z, x) from the design conditioned on omega0 @ x = gamma0."""
        z = self.sample_z(rng, n)
        if self.model == 1:
            x = np.ones((n, 1))
        elif self.model == 2:
            x2 = rng.integers(0, 2, size=n).astype(float)
            x = np.column_stack([x2 + 1.0, x2])
        else:
            # Rejection: (x2, x3) uniform on the part of (-2,2)^2 where
            # x1 = 1 + x2 + x3 stays inside (-2, 2).
            out = np.empty((n, 2))
            got = 0
            while got < n:
                cand = rng.uniform(-2.0, 2.0, size=(max(2 * (n - got), 16), 2))
                s = cand.sum(axis=1)
                keep = cand[(s >= -3.0) & (s <= 1.0)]
                take = min(n - got, keep.shape[0])
                out[got:got + take] = keep[:take]
                got += take
            x = np.column_stack([1.0 + out.sum(axis=1), out])
        return z, x

    def to_dict(self) -> dict:
        return {"model": self.model, "scenario": self.scenario, "sigma": float(self.sigma)}

    @staticmethod
    def from_dict(obj: dict) -> "ScenarioSpec":
        return ScenarioSpec(
            model=int(obj["model"]),
            scenario=int(obj["scenario"]),
            sigma=float(obj.get("sigma", 1.0)),
        )


def simulate_scenario(spec: ScenarioSpec, n: int, seed: int) -> Dataset:
    """Simulate a dataset from a benchmark design.

    Draw order (x, then z, then noise) is fixed, so outputs are
    bit-reproducible given (spec, n, seed).
    """
    if n < 2:
        raise ValidationError(f"n must be >= 2, got {n}")
    rng = np.random.default_rng(int(seed))
    x = spec.sample_x(rng, n)
    z = spec.sample_z(rng, n)
    eps = rng.normal(0.0, 1.0, size=n) * spec.sigma
    y = mean_response_matrix(spec.theta0, z, x) + eps
    return Dataset(y=y, z=z, x=x)


# --------------------------------------------------------------------------
# File formats
# --------------------------------------------------------------------------


def dataset_header(d: int, p: int) -> list:
    return ["y"] + [f"z{j}" for j in range(1, d + 1)] + [f"x{j}" for j in range(1, p + 1)]


def write_dataset_csv(ds: Dataset, path) -> None:
    """Write a dataset as CSV with header ``y,z1..zd,x1..xp``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(dataset_header(ds.d, ds.p))
        for i in range(ds.n):
            w.writerow(
                [repr(float(ds.y[i]))]
                + [repr(float(v)) for v in ds.z[i]]
                + [repr(float(v)) for v in ds.x[i]]
            )


def read_dataset_csv(path) -> Dataset:
    """Read a dataset written by write_dataset_csv.

    The header fixes d and p.  Raises ValidationError with row/column
    context on malformed numbers, missing fields, or a bad header.
    """
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ValidationError(f"{path}: {exc.strerror or exc}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        d = sum(1 for h in header if h.startswith("z"))
        p = sum(1 for h in header if h.startswith("x"))
        if d < 1 or p < 1 or header != dataset_header(d, p):
            raise ValidationError(
                f"{path}: bad header {header!r}; expected y,z1..zd,x1..xp"
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 1 + d + p:
                raise ValidationError(
                    f"{path}: line {lineno}: expected {1 + d + p} fields, got {len(row)}"
                )
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                bad = next(i for i, v in enumerate(row) if not _is_float(v))
                raise ValidationError(
                    f"{path}: line {lineno}, column {header[bad]}: "
                    f"cannot parse {row[bad]!r} as a number"
                ) from None
    if len(rows) < 2:
        raise ValidationError(f"{path}: need at least 2 data rows, got {len(rows)}")
    arr = np.asarray(rows, dtype=float)
    return Dataset(y=arr[:, 0], z=arr[:, 1:1 + d], x=arr[:, 1 + d:])


def _is_float(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def write_truth_json(spec: ScenarioSpec, n: int, seed: int, path) -> None:
    """Sidecar with the generating design and true parameters."""
    obj = dict(spec.to_dict())
    obj["n"] = int(n)
    obj["seed"] = int(seed)
    obj["theta0"] = spec.theta0.to_dict()
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
