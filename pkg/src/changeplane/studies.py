"""Monte Carlo studies over the benchmark designs.

Each study returns a StudyResult holding a resolved config echo, a
summary dict, and replicate-level tables sufficient to recompute every
summary number offline.  Writing is centralized and deterministic: same
study, same seed, byte-identical files.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import ks_2samp

from ._rng import child_rng, derive_seed
from .bootstrap import BootstrapConfig, confidence_intervals, parametric_bootstrap
from .data import ChangePlaneParams, ScenarioSpec, simulate_scenario
from .errors import NumericalError, ValidationError
from .limitlaw import sample_limit_distribution, scenario_limit_spec
from .midpoint import MidpointConfig
from .search import FitResult, SearchConfig, fit

# A study tolerates isolated numerical failures; beyond this fraction the
# run is considered meaningless and aborts.
FAILURE_BUDGET = 0.01


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


@dataclass
class StudyResult:
    """Study output: summary plus replicate-level tables.

    tables maps a file stem to (header, rows); write() lays the study
    down as <out_dir>/summary.json plus one CSV per table.
    """

    kind: str
    config: dict
    summary: dict
    tables: dict = field(default_factory=dict)

    def write(self, out_dir) -> None:
        os.makedirs(out_dir, exist_ok=True)
        payload = {"kind": self.kind, "config": self.config, "summary": self.summary}
        with open(os.path.join(out_dir, "summary.json"), "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")
        for stem, (header, rows) in sorted(self.tables.items()):
            with open(os.path.join(out_dir, f"{stem}.csv"), "w") as fh:
                fh.write(",".join(header) + "\n")
                for row in rows:
                    fh.write(",".join(_fmt(v) for v in row) + "\n")


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return [float(v) for v in o]
    raise TypeError(f"not JSON serializable: {type(o)!r}")


def coord_names(d: int, p: int) -> list:
    return (
        [f"beta{j + 1}" for j in range(d)]
        + [f"delta{j + 1}" for j in range(d)]
        + [f"omega{c + 1}" for c in range(p)]
        + ["gamma"]
    )


def _fit_replicate(spec: ScenarioSpec, n: int, rep_seed: int) -> tuple:
    """Simulate and fit one replicate: (dataset, FitResult)."""
    ds = simulate_scenario(spec, n, rep_seed)
    cfg = SearchConfig(seed=derive_seed(rep_seed, 1))
    mid = MidpointConfig(seed=derive_seed(rep_seed, 2))
    return ds, fit(ds, cfg, mid)


def _flat(theta: ChangePlaneParams) -> np.ndarray:
    return theta.flat()


# --------------------------------------------------------------------------
# Convergence-rate study
# --------------------------------------------------------------------------


def rate_study(
    spec: ScenarioSpec, n_list: list, reps: int, seed: int
) -> StudyResult:
    """Monte Carlo SD of every coordinate across sample sizes, with
    log-log slopes.

    Plane coordinates should show slope near -1, coefficients near -1/2.
    Both midpoint estimators are tracked.
    """
    n_list = [int(n) for n in n_list]
    if len(n_list) < 2 or sorted(set(n_list)) != sorted(n_list):
        raise ValidationError("rate study needs at least two distinct sample sizes")
    names = coord_names(spec.d, spec.p)
    header = ["n", "rep", "seed", "estimator"] + names
    rows = []
    failures = 0
    total = 0
    est_store = {"mean": {}, "mode": {}}
    for ci, n in enumerate(n_list):
        for est in est_store.values():
            est[n] = []
        for rep in range(reps):
            total += 1
            rep_seed = derive_seed(seed, ci, rep)
            try:
                _, res = _fit_replicate(spec, n, rep_seed)
            except NumericalError:
                failures += 1
                continue
            for est_name, theta in (("mean", res.theta_hat), ("mode", res.theta_check)):
                vec = _flat(theta)
                est_store[est_name][n].append(vec)
                rows.append([n, rep, rep_seed, est_name] + [float(v) for v in vec])
    _check_budget(failures, total)

    sd = {}
    slopes = {}
    for est_name, per_n in est_store.items():
        sd[est_name] = {}
        for n in n_list:
            mat = np.array(per_n[n])
            sd[est_name][str(n)] = {
                nm: float(mat[:, j].std()) for j, nm in enumerate(names)
            }
        slopes[est_name] = {}
        log_n = np.log(np.asarray(n_list, dtype=float))
        for j, nm in enumerate(names):
            vals = np.array([sd[est_name][str(n)][nm] for n in n_list])
            if np.any(vals <= 0):
                # degenerate coordinate (e.g. the sign direction when p = 1)
                slopes[est_name][nm] = None
                continue
            slopes[est_name][nm] = float(np.polyfit(log_n, np.log(vals), 1)[0])

    return StudyResult(
        kind="rate",
        config={
            "spec": spec.to_dict(),
            "n_list": n_list,
            "reps": reps,
            "seed": int(seed),
        },
        summary={"sd": sd, "slopes": slopes, "failures": failures, "total": total},
        tables={"replicates": (header, rows)},
    )


def _check_budget(failures: int, total: int) -> None:
    if failures > FAILURE_BUDGET * total:
        raise NumericalError(
            f"{failures}/{total} replicates failed, beyond the {FAILURE_BUDGET:.0%} budget"
        )


# --------------------------------------------------------------------------
# Weak-convergence study
# --------------------------------------------------------------------------


def weakconv_study(
    spec: ScenarioSpec,
    n: int,
    reps: int,
    limit_draws: int,
    n_contrasts: int,
    seed: int,
) -> StudyResult:
    """Two-sample KS comparison of scaled estimation errors against the
    analytic limit law, coordinatewise and along random contrasts.

    Empirical errors scale by sqrt(n) for coefficients and n for plane
    parameters.  Contrast vectors are drawn once, uniform on [-1, 1]^dim,
    and echoed in the summary.  Mode-midpoint rows are flagged when the
    limit's widest-corridor tilt was not always unique (the mode
    comparison is not expected to pass then).
    """
    names = coord_names(spec.d, spec.p)
    dim = len(names)
    theta0 = spec.theta0
    flat0 = theta0.flat()
    d, p = spec.d, spec.p
    scale = np.concatenate(
        [np.full(2 * d, math.sqrt(n)), np.full(p + 1, float(n))]
    )

    emp = {"mean": [], "mode": []}
    rep_rows = []
    failures = 0
    for rep in range(reps):
        rep_seed = derive_seed(seed, 0, rep)
        try:
            _, res = _fit_replicate(spec, n, rep_seed)
        except NumericalError:
            failures += 1
            continue
        for est_name, theta in (("mean", res.theta_hat), ("mode", res.theta_check)):
            err = (_flat(theta) - flat0) * scale
            emp[est_name].append(err)
            rep_rows.append([n, rep, rep_seed, est_name] + [float(v) for v in err])
    _check_budget(failures, reps)

    lim_spec = scenario_limit_spec(spec)
    draws = sample_limit_distribution(
        lim_spec, limit_draws, derive_seed(seed, 1), which="both"
    )
    lim = {"mean": [], "mode": []}
    lim_rows = []
    non_unique = 0
    for b, dr in enumerate(draws):
        non_unique += 0 if dr.mode_unique else 1
        for est_name, om, gm in (
            ("mean", dr.omega_dev_mean, dr.gamma_dev_mean),
            ("mode", dr.omega_dev_mode, dr.gamma_dev_mode),
        ):
            vec = np.concatenate([dr.w1, dr.w2, om, [gm]])
            lim[est_name].append(vec)
            lim_rows.append([b, est_name] + [float(v) for v in vec])

    rng = child_rng(seed, 2)
    contrasts = rng.uniform(-1.0, 1.0, size=(int(n_contrasts), dim))

    ks_rows = []
    mode_flag = non_unique > 0
    for est_name in ("mean", "mode"):
        emat = np.array(emp[est_name])
        lmat = np.array(lim[est_name])
        comparisons = [(nm, emat[:, j], lmat[:, j]) for j, nm in enumerate(names)]
        for ci in range(contrasts.shape[0]):
            comparisons.append(
                (f"contrast{ci + 1}", emat @ contrasts[ci], lmat @ contrasts[ci])
            )
        for nm, a, b_ in comparisons:
            stat, pval = ks_2samp(a, b_)
            note = ""
            if est_name == "mode" and mode_flag:
                note = "mode tilt not unique in the limit; comparison not expected to pass"
            ks_rows.append(
                [nm, est_name, float(stat), float(pval), int(pval < 0.01), note]
            )

    return StudyResult(
        kind="weakconv",
        config={
            "spec": spec.to_dict(),
            "n": int(n),
            "reps": reps,
            "limit_draws": limit_draws,
            "n_contrasts": int(n_contrasts),
            "seed": int(seed),
        },
        summary={
            "failures": failures,
            "contrasts": [list(map(float, c)) for c in contrasts],
            "mode_tilt_non_unique_draws": non_unique,
            "rejected_at_1pct": {
                est: int(
                    sum(r[4] for r in ks_rows if r[1] == est)
                )
                for est in ("mean", "mode")
            },
        },
        tables={
            "replicates": (
                ["n", "rep", "seed", "estimator"] + names,
                rep_rows,
            ),
            "limit_draws": (["draw", "estimator"] + names, lim_rows),
            "ks": (
                ["comparison", "estimator", "ks_stat", "p_value", "rejected_1pct", "note"],
                ks_rows,
            ),
        },
    )


# --------------------------------------------------------------------------
# Coverage study
# --------------------------------------------------------------------------


def coverage_study(
    spec: ScenarioSpec,
    n_list: list,
    reps: int,
    b_draws: int,
    level: float,
    seed: int,
    use_mode: bool = False,
    contrasts: tuple = (),
) -> StudyResult:
    """Empirical coverage of bootstrap intervals against the truth."""
    n_list = [int(n) for n in n_list]
    theta0 = spec.theta0
    flat0 = theta0.flat()
    names = coord_names(spec.d, spec.p)
    truth = dict(zip(names, flat0))
    for i, vec in enumerate(contrasts):
        truth[f"contrast{i + 1}"] = float(np.asarray(vec, dtype=float) @ flat0)

    header = ["n", "rep", "name", "estimate", "lo", "hi", "true", "cover"]
    rows = []
    failures = 0
    total = 0
    cover_acc = {}
    length_acc = {}
    for ci, n in enumerate(n_list):
        for rep in range(reps):
            total += 1
            rep_seed = derive_seed(seed, ci, rep)
            try:
                ds, res = _fit_replicate(spec, n, rep_seed)
                center = res.theta_check if use_mode else res.theta_hat
                bcfg = BootstrapConfig(
                    b_draws=b_draws,
                    level=level,
                    use_mode=use_mode,
                    seed=derive_seed(rep_seed, 3),
                    contrasts=tuple(contrasts),
                )
                draws = parametric_bootstrap(ds, center, bcfg)
            except NumericalError:
                failures += 1
                continue
            cis = confidence_intervals(center, draws, bcfg, n)
            for row in cis.rows:
                tv = truth[row.name]
                cov = row.covers(tv)
                key = (n, row.name)
                cover_acc.setdefault(key, []).append(cov)
                length_acc.setdefault(key, []).append(row.hi - row.lo)
                rows.append(
                    [n, rep, row.name, row.estimate, row.lo, row.hi, tv, int(cov)]
                )
    _check_budget(failures, total)

    coverage = {}
    lengths = {}
    for (n, nm), vals in sorted(cover_acc.items()):
        coverage.setdefault(str(n), {})[nm] = float(np.mean(vals))
        lengths.setdefault(str(n), {})[nm] = float(np.mean(length_acc[(n, nm)]))

    return StudyResult(
        kind="coverage",
        config={
            "spec": spec.to_dict(),
            "n_list": n_list,
            "reps": reps,
            "b_draws": b_draws,
            "level": float(level),
            "use_mode": bool(use_mode),
            "seed": int(seed),
            "contrasts": [list(map(float, np.asarray(c, dtype=float))) for c in contrasts],
        },
        summary={
            "coverage": coverage,
            "mean_length": lengths,
            "failures": failures,
            "total": total,
        },
        tables={"replicates": (header, rows)},
    )


# --------------------------------------------------------------------------
# Direct limit sampling
# --------------------------------------------------------------------------


def limit_sample_study(
    spec: ScenarioSpec, n_draws: int, seed: int, which: str = "both"
) -> StudyResult:
    """Draws from the analytic limit law of a benchmark design."""
    lim_spec = scenario_limit_spec(spec)
    draws = sample_limit_distribution(lim_spec, n_draws, seed, which=which)
    d, p = spec.d, spec.p
    header = (
        ["draw"]
        + [f"w1_{j + 1}" for j in range(d)]
        + [f"w2_{j + 1}" for j in range(d)]
        + [f"omega_dev_mean{c + 1}" for c in range(p)]
        + ["gamma_dev_mean"]
        + [f"omega_dev_mode{c + 1}" for c in range(p)]
        + ["gamma_dev_mode"]
        + ["mode_unique", "k_final", "n_jumps", "exact"]
    )
    rows = []
    for b, dr in enumerate(draws):
        rows.append(
            [b]
            + [float(v) for v in dr.w1]
            + [float(v) for v in dr.w2]
            + [float(v) for v in dr.omega_dev_mean]
            + [dr.gamma_dev_mean]
            + [float(v) for v in dr.omega_dev_mode]
            + [dr.gamma_dev_mode]
            + [int(dr.mode_unique), dr.k_final, dr.n_jumps, int(dr.exact)]
        )
    w1 = np.array([dr.w1 for dr in draws])
    return StudyResult(
        kind="limit-sample",
        config={
            "spec": spec.to_dict(),
            "n_draws": int(n_draws),
            "seed": int(seed),
            "which": which,
        },
        summary={
            "w1_mean": [float(v) for v in w1.mean(axis=0)],
            "w1_cov": [[float(v) for v in row] for row in np.cov(w1, rowvar=False)],
            "non_unique_mode_draws": int(sum(0 if dr.mode_unique else 1 for dr in draws)),
        },
        tables={"draws": (header, rows)},
    )
