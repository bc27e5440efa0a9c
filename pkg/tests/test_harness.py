"""Study drivers and the command-line interface."""

import csv
import io
import json
import math

import numpy as np
import pytest

from changeplane import ScenarioSpec, rate_study, weakconv_study, coverage_study, limit_sample_study
from changeplane.cli import main


def _read_table(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def test_rate_study_summary_recomputes_from_table(tmp_path):
    spec = ScenarioSpec(model=1, scenario=1)
    res = rate_study(spec, [50, 100], reps=5, seed=3)
    out = tmp_path / "rate"
    res.write(out)
    header, rows = _read_table(out / "replicates.csv")
    doc = json.loads((out / "summary.json").read_text())
    assert doc["kind"] == "rate"
    assert doc["config"]["n_list"] == [50, 100]
    summary = doc["summary"]

    j = header.index("gamma")
    for n in (50, 100):
        for est in ("mean", "mode"):
            vals = [
                float(r[j])
                for r in rows
                if r[header.index("n")] == str(n) and r[header.index("estimator")] == est
            ]
            assert len(vals) == 5
            assert summary["sd"][est][str(n)]["gamma"] == pytest.approx(
                float(np.std(vals)), rel=1e-12
            )
    # slope recompute for gamma; omega1 is canonically constant at p = 1
    sd50 = summary["sd"]["mean"]["50"]["gamma"]
    sd100 = summary["sd"]["mean"]["100"]["gamma"]
    slope = np.polyfit(np.log([50, 100]), np.log([sd50, sd100]), 1)[0]
    assert summary["slopes"]["mean"]["gamma"] == pytest.approx(slope, rel=1e-12)
    assert summary["slopes"]["mean"]["omega1"] is None


def test_weakconv_study_tables_consistent():
    spec = ScenarioSpec(model=1, scenario=1)
    res = weakconv_study(spec, n=120, reps=5, limit_draws=40, n_contrasts=2, seed=4)
    hdr, rows = res.tables["ks"]
    assert hdr == ["comparison", "estimator", "ks_stat", "p_value", "rejected_1pct", "note"]
    names = {r[0] for r in rows}
    assert {"beta1", "gamma", "contrast1", "contrast2"} <= names
    for r in rows:
        assert (r[3] < 0.01) == bool(r[4])
    # replicate errors are scaled: gamma column equals n * (gamma_hat - 1)
    rhdr, rrows = res.tables["replicates"]
    gj = rhdr.index("gamma")
    assert all(abs(r[gj]) < 120 * 4 for r in rrows)  # gamma_hat within support
    assert res.summary["contrasts"] and len(res.summary["contrasts"]) == 2
    assert set(res.summary["rejected_at_1pct"]) == {"mean", "mode"}


def test_coverage_study_recomputes(tmp_path):
    spec = ScenarioSpec(model=1, scenario=1)
    res = coverage_study(spec, [80], reps=3, b_draws=40, level=0.9, seed=6)
    hdr, rows = res.tables["replicates"]
    cover_j, name_j = hdr.index("cover"), hdr.index("name")
    lo_j, hi_j, true_j = hdr.index("lo"), hdr.index("hi"), hdr.index("true")
    for r in rows:
        assert r[cover_j] == int(r[lo_j] <= r[true_j] <= r[hi_j])
    gamma_rows = [r for r in rows if r[name_j] == "gamma"]
    assert len(gamma_rows) == 3
    cov = np.mean([r[cover_j] for r in gamma_rows])
    assert res.summary["coverage"]["80"]["gamma"] == pytest.approx(cov)
    mean_len = np.mean([r[hi_j] - r[lo_j] for r in gamma_rows])
    assert res.summary["mean_length"]["80"]["gamma"] == pytest.approx(mean_len)


def test_limit_sample_study_recomputes():
    spec = ScenarioSpec(model=1, scenario=1)
    res = limit_sample_study(spec, n_draws=60, seed=7, which="both")
    hdr, rows = res.tables["draws"]
    w1 = np.array([[r[hdr.index("w1_1")], r[hdr.index("w1_2")]] for r in rows])
    assert np.allclose(res.summary["w1_mean"], w1.mean(axis=0))
    assert np.allclose(res.summary["w1_cov"], np.cov(w1, rowvar=False))
    assert res.summary["non_unique_mode_draws"] == sum(
        1 for r in rows if not r[hdr.index("mode_unique")]
    )


def test_cli_simulate_writes_expected_files(tmp_path, capsys):
    out = tmp_path / "sim"
    code = main([
        "simulate", "--model", "1", "--scenario", "2", "--n", "40",
        "--seed", "11", "--out", str(out),
    ])
    assert code == 0
    data = (out / "dataset.csv").read_text().splitlines()
    assert data[0] == "y,z1,z2,x1"
    assert len(data) == 41
    truth = json.loads((out / "truth.json").read_text())
    assert truth["model"] == 1 and truth["scenario"] == 2
    assert truth["n"] == 40 and truth["seed"] == 11
    assert truth["theta0"]["beta"] == [1.5, 1.5]
    assert truth["theta0"]["gamma"] == 1.0

    # byte-identical on rerun
    out2 = tmp_path / "sim2"
    main([
        "simulate", "--model", "1", "--scenario", "2", "--n", "40",
        "--seed", "11", "--out", str(out2),
    ])
    assert (out / "dataset.csv").read_bytes() == (out2 / "dataset.csv").read_bytes()
    assert (out / "truth.json").read_bytes() == (out2 / "truth.json").read_bytes()


def test_cli_fit_stdout_and_outdir(tmp_path, capsys):
    sim = tmp_path / "sim"
    main(["simulate", "--model", "1", "--n", "120", "--seed", "3", "--out", str(sim)])
    capsys.readouterr()

    code = main(["fit", "--data", str(sim / "dataset.csv"), "--seed", "5"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert set(doc) == {"config", "validation", "fit"}
    assert doc["fit"]["theta_hat"]["gamma"] == pytest.approx(1.0, abs=0.3)

    out = tmp_path / "fitdir"
    code = main([
        "fit", "--data", str(sim / "dataset.csv"), "--seed", "5",
        "--bootstrap", "50", "--trace", "--out", str(out),
    ])
    assert code == 0
    doc2 = json.loads((out / "fit.json").read_text())
    assert doc2["fit"]["theta_hat"] == doc["fit"]["theta_hat"]
    assert "intervals" in doc2
    assert (out / "trace.csv").read_text().startswith("iteration,ssr,span")


def test_cli_fit_respects_config_overrides(tmp_path, capsys):
    sim = tmp_path / "sim"
    main(["simulate", "--model", "1", "--n", "60", "--seed", "2", "--out", str(sim)])
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"search": {"n_uniform": 128}, "midpoint": {"r0": 50}}))
    code = main([
        "fit", "--data", str(sim / "dataset.csv"), "--config", str(cfg),
    ])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["config"]["search"]["n_uniform"] == 128
    assert doc["config"]["midpoint"]["r0"] == 50

    cfg.write_text(json.dumps({"search": {"bogus_knob": 1}}))
    assert main(["fit", "--data", str(sim / "dataset.csv"), "--config", str(cfg)]) == 2


def test_cli_exit_codes(tmp_path, capsys):
    # validation problems exit 2
    assert main(["fit", "--data", str(tmp_path / "missing.csv")]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("y,z1,x1\n1.0,nope,0.0\n")
    assert main(["fit", "--data", str(bad)]) == 2

    # numerical failure (no admissible split) exits 3
    tied = tmp_path / "tied.csv"
    rows = ["y,z1,x1"] + [f"{float(i)},1.0,1.0" for i in range(6)]
    tied.write_text("\n".join(rows) + "\n")
    assert main(["fit", "--data", str(tied)]) == 3

    assert main(["simulate", "--model", "7", "--n", "10", "--out", str(tmp_path / "x")]) == 2
    assert main(["rate-study", "--model", "1", "--n", "50", "--reps", "2",
                 "--out", str(tmp_path / "r")]) == 2  # one n is not enough


def test_cli_study_rerun_byte_identical(tmp_path, capsys):
    args = ["limit-sample", "--model", "1", "--draws", "20", "--seed", "9"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert (a / "summary.json").read_bytes() == (b / "summary.json").read_bytes()
    assert (a / "draws.csv").read_bytes() == (b / "draws.csv").read_bytes()


def test_cli_studies_require_out(capsys):
    assert main(["rate-study", "--model", "1", "--n", "50,100", "--reps", "2"]) == 2
