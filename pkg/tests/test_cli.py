import json
from fractions import Fraction

import pytest

from smp import compare
from smp.cli import run
from smp.config import CONFIG_DIR, ConfigError, RunConfig, load_config
from smp.report import fmt, read_csv


def test_config_round_trip():
    cfg = RunConfig(model="discrete_random",
                    params={"multiplier_law": {"kind": "two_delta", "a": 0.5, "mu0": 2.0}, "r": [0.1, 0.3]},
                    outputs=["moments", "interval"], seed=99, ntraj=1234, horizon=30, snapshots=[10, 30],
                    gammas=[0.5, 1.0], M=[3], output_dir="x")
    back = RunConfig.from_json(cfg.to_json())
    assert back == cfg
    assert back.digest() == cfg.digest()


@pytest.mark.parametrize("name", ["fig1", "fig2", "fig3", "fig4", "fig5"])
def test_shipped_configs_validate(name):
    cfg = load_config(f"{name}.json")
    assert (CONFIG_DIR / f"{name}.json").exists()
    assert RunConfig.from_json(cfg.to_json()) == cfg


@pytest.mark.parametrize("d,field", [
    ({"model": "nope"}, "model"),
    ({"model": "discrete_uniform", "params": {"mu": 1.1}}, "params.r"),
    ({"model": "discrete_uniform", "params": {"mu": 1.1, "r": 0.1}, "colour": 1}, "colour"),
    ({"model": "discrete_uniform", "params": {"mu": 1.1, "r": 0.1}, "seed": -1}, "seed"),
    ({"model": "discrete_uniform", "params": {"mu": 1.1, "r": 0.1}, "outputs": ["plots"]}, "outputs"),
    ({"model": "discrete_uniform", "params": {"mu": 1.1, "r": 0.1}, "horizon": 5, "snapshots": [9]}, "snapshots"),
    ({"model": "state_dependent", "params": {"lambda0": 1, "q": 1, "alpha": -1}}, "params.alpha"),
    ({"model": "discrete_random", "params": {"r": 0.1, "multiplier_law": {"kind": "x"}}}, "params.multiplier_law"),
])
def test_config_errors_name_field(d, field):
    with pytest.raises(ConfigError) as info:
        RunConfig.from_dict(d)
    assert info.value.field == field


def test_fmt_rules():
    assert fmt(10.0) == "10.0"
    assert fmt(1.5e-7) == "1.5e-07"
    assert fmt(2.5e6) == "2.5e+06"
    assert fmt(0.0) == "0.0"
    assert fmt(True) == "true"
    assert fmt(Fraction(1, 4)) == "0.25"
    assert fmt(float("inf")) == "inf"
    assert fmt(None) == ""


def test_analytic_moments(tmp_path):
    out = tmp_path / "out"
    code = run(["analytic", "--model", "discrete_uniform", "--mu", "1.1", "--r", "0.1", "--gamma", "1",
                "--t-max", "1000", "-o", str(out)])
    assert code == 0
    comment, header, rows = read_csv(out / "moments.csv")
    assert header == ["t", "gamma", "exact_moment", "convergent", "stationary"]
    assert comment.startswith("# config_sha256=") and "master_seed=0" in comment
    assert len(rows) == 1001
    assert all(float(r["stationary"]) == 10.0 for r in rows)
    assert float(rows[1]["exact_moment"]) == pytest.approx(1.09)
    summary = json.loads((out / "summary.json").read_text())
    assert summary["config_sha256"] in comment
    _, _, occ = read_csv(out / "occupation.csv")
    assert float(occ[0]["probability"]) == pytest.approx(0.1)


def test_bursts_output(tmp_path):
    out = tmp_path / "b"
    assert run(["bursts", "--tau", "10", "--r", "0.1", "-o", str(out)]) == 0
    _, header, rows = read_csv(out / "bursts.csv")
    assert header == ["k", "probability", "numerator", "denominator"]
    first = rows[0]
    assert Fraction(int(first["numerator"]), int(first["denominator"])) == Fraction(9, 10) ** 10
    assert float(first["probability"]) == pytest.approx(0.9 ** 10)
    assert sum(Fraction(int(r["numerator"]), int(r["denominator"])) for r in rows) == 1
    _, _, ta = read_csv(out / "time_average.csv")
    assert sum(Fraction(int(r["numerator"]), int(r["denominator"])) for r in ta) == 1
    assert (out / "burst_table.csv").exists()


def test_passage_output(tmp_path):
    out = tmp_path / "p"
    assert run(["passage", "--mu", "1.1", "--r", "0.1", "--M", "1", "5", "--ntraj", "2000", "-o", str(out)]) == 0
    _, header, rows = read_csv(out / "passage.csv")
    assert "sim_mean_wait" in header
    assert float(rows[0]["mean_wait"]) == pytest.approx(10 / 9)


def test_simulate_writes_histograms(tmp_path):
    out = tmp_path / "s"
    code = run(["simulate", "--model", "discrete_uniform", "--mu", "1.1", "--r", "0.1", "--t-max", "20",
                "--snapshots", "5", "20", "--ntraj", "3000", "--seed", "7", "-o", str(out)])
    assert code == 0
    comment, header, rows = read_csv(out / "histogram_t20.csv")
    assert "master_seed=7" in comment
    assert sum(int(r["count"]) for r in rows) == 3000
    summary = json.loads((out / "summary.json").read_text())
    assert summary["ensembles"][0]["provenance"]["master_seed"] == 7
    assert summary["ensembles"][0]["runtime"]["workers"] >= 1


def test_compare_fig4_passes(tmp_path):
    out = tmp_path / "c"
    assert run(["compare", "--config", "fig4.json", "--ntraj", "20000", "--snapshots", "0", "2", "5",
                "-o", str(out)]) == 0
    _, _, rows = read_csv(out / "compare.csv")
    tv = [r for r in rows if r["quantity"] == "transient_tv"]
    assert [r["key"] for r in tv] == ["t=0", "t=2", "t=5"]
    assert all(r["status"] == "pass" for r in tv)


def test_compare_tolerance_failure_exit_code(tmp_path, monkeypatch):
    monkeypatch.setattr(compare, "TV_CONTINUOUS", 1e-9)
    code = run(["compare", "--config", "fig4.json", "--ntraj", "2000", "--snapshots", "2", "-o", str(tmp_path)])
    assert code == 3


def test_validation_exit_codes(tmp_path, capsys):
    assert run(["analytic", "--model", "discrete_uniform", "--mu", "1.1", "--r", "1.5", "-o", str(tmp_path)]) == 2
    assert "r" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["analytic", "--config", str(bad)]) == 2
    assert "config" in capsys.readouterr().err
    with pytest.raises(SystemExit) as info:
        run(["analytic", "--no-such-flag"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        run(["analytic", "--multiplier-law", "{oops"])
    assert info.value.code == 2
    assert run(["bursts", "--tau", "5", "-o", str(tmp_path)]) == 2
    assert "params.r" in capsys.readouterr().err
