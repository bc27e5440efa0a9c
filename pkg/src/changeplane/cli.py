"""Command-line interface.

Subcommands: simulate, fit, rate-study, weakconv-study, coverage-study,
limit-sample.  All randomness flows from --seed, no output embeds wall
time, and floats are written with full repr, so rerunning a command with
identical flags produces byte-identical files.

Exit codes: 0 success, 2 validation error (bad flags, malformed input),
3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from ._rng import derive_seed
from .bootstrap import BootstrapConfig, confidence_intervals, parametric_bootstrap
from .data import (
    ScenarioSpec,
    read_dataset_csv,
    simulate_scenario,
    validate_dataset,
    write_dataset_csv,
    write_truth_json,
)
from .errors import NumericalError, ValidationError
from .midpoint import MidpointConfig
from .search import SearchConfig, fit
from .studies import (
    coverage_study,
    limit_sample_study,
    rate_study,
    weakconv_study,
)


def _json_default(o):
    import numpy as np

    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return [float(v) for v in o]
    raise TypeError(f"not JSON serializable: {type(o)!r}")


def _dump_json(obj, path=None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as e:
        raise ValidationError(f"cannot read config file: {e}") from None
    except json.JSONDecodeError as e:
        raise ValidationError(f"config file is not valid JSON: {e}") from None
    if not isinstance(obj, dict):
        raise ValidationError("config file must hold a JSON object")
    return obj


def _build_cfg(cls, overrides: dict, **base):
    valid = {f.name for f in dataclasses.fields(cls)}
    kw = dict(base)
    for k, v in (overrides or {}).items():
        if k not in valid:
            raise ValidationError(f"unknown {cls.__name__} option {k!r}")
        kw[k] = v
    return cls(**kw)


def _parse_n_list(text: str) -> list:
    try:
        values = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ValidationError(f"--n expects integers, got {text!r}") from None
    if not values:
        raise ValidationError("--n is empty")
    return values


def _scenario_from_args(args) -> ScenarioSpec:
    return ScenarioSpec(model=args.model, scenario=args.scenario, sigma=args.sigma)


def _require_out(args) -> str:
    if args.out is None:
        raise ValidationError("this command requires --out DIR")
    os.makedirs(args.out, exist_ok=True)
    return args.out


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    spec = _scenario_from_args(args)
    n_list = _parse_n_list(args.n)
    if len(n_list) != 1:
        raise ValidationError("simulate expects a single --n")
    n = n_list[0]
    out = _require_out(args)
    ds = simulate_scenario(spec, n, args.seed)
    write_dataset_csv(ds, os.path.join(out, "dataset.csv"))
    write_truth_json(spec, n, args.seed, os.path.join(out, "truth.json"))
    return 0


def cmd_fit(args) -> int:
    overrides = _load_config(args.config)
    ds = read_dataset_csv(args.data)
    report = validate_dataset(ds)
    search_cfg = _build_cfg(SearchConfig, overrides.get("search"), seed=args.seed)
    mid_cfg = _build_cfg(
        MidpointConfig, overrides.get("midpoint"), seed=derive_seed(args.seed, 9001)
    )
    res = fit(ds, search_cfg, mid_cfg)

    payload = {
        "config": {
            "search": dataclasses.asdict(search_cfg),
            "midpoint": dataclasses.asdict(mid_cfg),
            "seed": int(args.seed),
        },
        "validation": report.to_dict(),
        "fit": res.to_dict(),
    }
    if args.bootstrap > 0:
        bcfg = _build_cfg(
            BootstrapConfig,
            overrides.get("bootstrap"),
            b_draws=args.bootstrap,
            level=args.level,
            use_mode=args.mode_fit,
            seed=derive_seed(args.seed, 9002),
        )
        center = res.theta_check if args.mode_fit else res.theta_hat
        draws = parametric_bootstrap(ds, center, bcfg)
        cis = confidence_intervals(center, draws, bcfg, ds.n)
        payload["config"]["bootstrap"] = {
            k: v for k, v in dataclasses.asdict(bcfg).items() if k != "contrasts"
        }
        payload["intervals"] = cis.to_dict()

    if args.out is None:
        _dump_json(payload)
    else:
        out = _require_out(args)
        _dump_json(payload, os.path.join(out, "fit.json"))
        if args.trace:
            res.trace.write_csv(os.path.join(out, "trace.csv"))
    return 0


def cmd_rate_study(args) -> int:
    spec = _scenario_from_args(args)
    out = _require_out(args)
    res = rate_study(spec, _parse_n_list(args.n), args.reps, args.seed)
    res.write(out)
    return 0


def cmd_weakconv_study(args) -> int:
    spec = _scenario_from_args(args)
    out = _require_out(args)
    n_list = _parse_n_list(args.n)
    if len(n_list) != 1:
        raise ValidationError("weakconv-study expects a single --n")
    res = weakconv_study(
        spec, n_list[0], args.reps, args.limit_draws, args.contrasts, args.seed
    )
    res.write(out)
    return 0


def cmd_coverage_study(args) -> int:
    spec = _scenario_from_args(args)
    out = _require_out(args)
    res = coverage_study(
        spec,
        _parse_n_list(args.n),
        args.reps,
        args.bootstrap,
        args.level,
        args.seed,
        use_mode=args.mode_fit,
    )
    res.write(out)
    return 0


def cmd_limit_sample(args) -> int:
    spec = _scenario_from_args(args)
    out = _require_out(args)
    res = limit_sample_study(spec, args.draws, args.seed, which=args.which)
    res.write(out)
    return 0


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


def _add_design_flags(sp) -> None:
    sp.add_argument("--model", type=int, default=1, help="benchmark design: 1, 2 or 3")
    sp.add_argument("--scenario", type=int, default=1, help="coefficient scenario: 1 or 2")
    sp.add_argument("--sigma", type=float, default=1.0, help="noise standard deviation")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="changeplane",
        description="Change-plane regression: fitting, limit sampling, bootstrap studies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="write a simulated dataset and its truth sidecar")
    _add_design_flags(sp)
    sp.add_argument("--n", required=True, help="sample size")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None, help="output directory")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("fit", help="fit a change-plane model to a CSV dataset")
    sp.add_argument("--data", required=True, help="CSV with header y,z1..zd,x1..xp")
    sp.add_argument("--bootstrap", type=int, default=0, help="bootstrap draws (0 = none)")
    sp.add_argument("--level", type=float, default=0.95, help="confidence level")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--config", default=None, help="JSON file with search/midpoint/bootstrap sections")
    sp.add_argument("--mode-fit", action="store_true", help="center the bootstrap at the mode midpoint")
    sp.add_argument("--trace", action="store_true", help="also write the search trace CSV (needs --out)")
    sp.add_argument("--out", default=None, help="output directory (default: JSON to stdout)")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("rate-study", help="Monte Carlo convergence-rate study")
    _add_design_flags(sp)
    sp.add_argument("--n", required=True, help="comma-separated sample sizes")
    sp.add_argument("--reps", type=int, default=200)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None, help="output directory")
    sp.set_defaults(func=cmd_rate_study)

    sp = sub.add_parser("weakconv-study", help="KS comparison of scaled errors vs the limit law")
    _add_design_flags(sp)
    sp.add_argument("--n", required=True, help="sample size")
    sp.add_argument("--reps", type=int, default=500)
    sp.add_argument("--limit-draws", type=int, default=500)
    sp.add_argument("--contrasts", type=int, default=1, help="number of random contrasts")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None, help="output directory")
    sp.set_defaults(func=cmd_weakconv_study)

    sp = sub.add_parser("coverage-study", help="bootstrap interval coverage study")
    _add_design_flags(sp)
    sp.add_argument("--n", required=True, help="comma-separated sample sizes")
    sp.add_argument("--reps", type=int, default=100)
    sp.add_argument("--bootstrap", type=int, default=200, help="bootstrap draws per replicate")
    sp.add_argument("--level", type=float, default=0.95)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--mode-fit", action="store_true", help="use mode midpoints as centers")
    sp.add_argument("--out", default=None, help="output directory")
    sp.set_defaults(func=cmd_coverage_study)

    sp = sub.add_parser("limit-sample", help="draw from the analytic limit law")
    _add_design_flags(sp)
    sp.add_argument("--draws", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--which", choices=("mean", "mode", "both"), default="both")
    sp.add_argument("--out", default=None, help="output directory")
    sp.set_defaults(func=cmd_limit_sample)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
