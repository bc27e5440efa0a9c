"""
Monte Carlo studies and the command line
========================================

The package ships four reproducible study drivers (convergence rates,
weak convergence against the limit law, bootstrap coverage, direct limit
sampling) plus a CLI that wraps them.  This script runs scaled-down
versions of each and shows where the CLI writes its outputs.  Every
command is seeded: rerunning produces byte-identical files.
"""

import json
import pathlib
import subprocess
import sys
import tempfile

from changeplane import ScenarioSpec, rate_study, weakconv_study

spec = ScenarioSpec(model=1, scenario=1)

# Convergence rates: Monte Carlo SD of each coordinate against n, with
# log-log slopes.   Plane parameters shrink like 1/n, coefficients like
# 1/sqrt(n); full-size runs use n up to 1000 and 200 replicates.
res = rate_study(spec, [100, 400, 1600], reps=60, seed=1)
slopes = res.summary["slopes"]["mean"]
print("rate slopes (mean midpoint):")
print(f"  gamma: {slopes['gamma']:+.2f}   (rate-n parameter, expect near -1)")
print(f"  beta1: {slopes['beta1']:+.2f}   (rate-sqrt(n) parameter, expect near -0.5)")

# Weak convergence: scaled estimation errors vs draws from the limit law,
# compared coordinatewise by two-sample KS tests.
res = weakconv_study(spec, n=800, reps=60, limit_draws=200, n_contrasts=1, seed=2)
_, ks_rows = res.tables["ks"]
print("\nKS comparisons vs the limit law (mean midpoint):")
for row in ks_rows:
    if row[1] == "mean" and row[0] in ("gamma", "beta1", "contrast1"):
        print(f"  {row[0]:>9}: stat {row[2]:.3f}  p {row[3]:.3f}")

# The same studies are exposed as CLI subcommands writing summary.json
# plus replicate-level CSVs sufficient to recompute every number.
out = pathlib.Path(tempfile.mkdtemp()) / "limit_run"
cmd = [
    sys.executable, "-m", "changeplane", "limit-sample",
    "--model", "1", "--draws", "200", "--seed", "3", "--out", str(out),
]
subprocess.run(cmd, check=True)
files = sorted(p.name for p in out.iterdir())
print(f"\nCLI wrote {files} to {out}")
summary = json.loads((out / "summary.json").read_text())["summary"]
print("limit-sample w1 covariance:", [[round(v, 3) for v in r] for r in summary["w1_cov"]])
