# rdsurv : regression discontinuity estimates for censored time-to-event outcomes
#
# (c) 2026 Michel Anders (varkenvarken)
#
# License: GPL 3, see file LICENSE
#
# Version: 20261017203027

import json
import os
from unittest.mock import patch

import pandas as pd
import pytest

from rdsurv.__main__ import main
from rdsurv.Simulation import DgpSetting, generate


@pytest.fixture(scope="module")
def sample(tmp_path_factory):
    filename = tmp_path_factory.mktemp("data") / "sample.csv"
    ds, _ = generate(DgpSetting(1, n=600, seed=2))
    ds.toFrame().to_csv(filename, index=False)
    return str(filename)


@pytest.fixture(autouse=True)
def clean_environment():
    with patch.dict(os.environ, {}, clear=True):
        yield


def run(argv, capsys):
    code = main(argv)
    return code, json.loads(capsys.readouterr().out)


def load(filename):
    with open(filename) as f:
        return json.load(f)


class TestEstimate:
    def test_naive(self, sample, capsys):
        code, document = run(["estimate", "-i", sample, "--cutoff", "0.5", "--horizon", "7", "--method", "naive"], capsys)
        assert code == 0
        assert document["schema_version"] == 1
        assert document["command"] == "estimate"
        result = document["result"]
        assert result["method"] == "naive"
        assert result["estimand"]["kind"] == "survival_probability"
        assert result["n"] == 600
        assert result["ci_low"] <= result["estimate_bc"] <= result["ci_high"]
        assert document["config_echo"]["cutoff"] == 0.5

    def test_dr(self, sample, tmp_path, capsys):
        scores = str(tmp_path / "scores.csv")
        output = str(tmp_path / "result.json")
        code = main(
            ["estimate", "-i", sample, "--cutoff", "0.5", "--horizon", "7", "--trees", "10",
             "--estimand", "rmst", "--scores", scores, "-o", output]
        )
        assert code == 0
        result = load(output)["result"]
        assert result["panel"]["oob"] is True
        assert "positivity" in result
        assert list(pd.read_csv(scores).columns) == ["unit_id", "z", "gamma"]
        assert os.path.exists(f"{output}.meta.json")

    def test_suggested_horizon(self, sample, capsys):
        code, document = run(["estimate", "-i", sample, "--cutoff", "0.5", "--method", "ipcw"], capsys)
        assert code == 0
        assert any("horizon" in w for w in document["warnings"])

    def test_fuzzy(self, sample, tmp_path, capsys):
        frame = pd.read_csv(sample)
        frame["w"] = (frame["z"] >= 0.5).astype(int)
        fuzzy = tmp_path / "fuzzy.csv"
        frame.to_csv(fuzzy, index=False)
        code, document = run(
            ["estimate", "-i", str(fuzzy), "--cutoff", "0.5", "--horizon", "7", "--method", "naive", "--design", "fuzzy"],
            capsys,
        )
        assert code == 0
        assert document["result"]["first_stage"]["estimate_bc"] == 1.0
        assert "ratio" in document["result"]


class TestOtherCommands:
    def test_diagnose(self, sample, tmp_path, capsys):
        prefix = str(tmp_path / "diag")
        code, document = run(
            ["diagnose", "-i", sample, "--cutoff", "0.5", "--horizon", "7", "--trees", "10",
             "--split", "x1", "--horizons", "5,7", "--csv", prefix],
            capsys,
        )
        assert code == 0
        result = document["result"]
        assert set(result) >= {"positivity", "histogram", "censoring", "logrank", "positivity_by_horizon"}
        assert len(result["histogram"]) == 30
        for suffix in ("histogram", "positivity", "byhorizon"):
            assert os.path.exists(f"{prefix}.{suffix}.csv")

    def test_curves(self, sample, tmp_path, capsys):
        curves = str(tmp_path / "curves.csv")
        code, document = run(["curves", "-i", sample, "--cutoff", "0.5", "--trees", "10", "--csv", curves], capsys)
        assert code == 0
        frame = pd.read_csv(curves)
        assert list(frame.columns) == ["unit_id", "t", "s_event", "s_censor"]
        assert frame["unit_id"].nunique() == 600
        assert len(document["result"]["t"]) == len(document["result"]["mean_event"])

    def test_sweep(self, sample, capsys):
        code, document = run(
            ["sweep", "-i", sample, "--cutoff", "0.5", "--trees", "10", "--horizons", "5,7"], capsys
        )
        assert code == 0
        rows = document["result"]["rows"]
        assert [(r["h"], r["method"]) for r in rows] == [(5.0, "ipcw"), (5.0, "dr"), (7.0, "ipcw"), (7.0, "dr")]
        assert rows[0]["censored_before_h"] <= rows[2]["censored_before_h"]

    def test_simulate_is_reproducible(self, tmp_path, capsys):
        output = str(tmp_path / "sim.json")
        argv = [
            "simulate", "--setting", "1", "--reps", "3", "--n", "400", "--method", "naive",
            "--oracle-draws", "10000", "--truthfile", str(tmp_path / "rdsurv.truth"), "-o", output,
        ]
        assert main(argv) == 0
        with open(output, "rb") as f:
            first = f.read()
        assert main(argv) == 0
        with open(output, "rb") as f:
            assert f.read() == first
        result = json.loads(first)["result"]
        assert result["reps"] == 3
        assert result["truth"]["draws"] == 10000

    def test_simulate_bad_setting(self):
        with pytest.raises(SystemExit) as e:
            main(["simulate", "--setting", "5"])
        assert e.value.code == 2


class TestExitCodes:
    def test_usage(self, tmp_path, capsys):
        code, document = run(["estimate", "-i", str(tmp_path / "missing.csv"), "--cutoff", "0.5"], capsys)
        assert code == 2
        assert document["error"] == "ConfigError"
        assert document["exitcode"] == 2

    def test_data(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("time,event,z\n1,1,0.1\nNaN,0,0.2\n3,1,0.7\n4,0,0.9\n")
        code, document = run(["estimate", "-i", str(bad), "--cutoff", "0.5"], capsys)
        assert code == 3
        assert document["error"] == "NonFiniteValue"

    def test_horizon(self, sample, capsys):
        code, document = run(["estimate", "-i", sample, "--cutoff", "0.5", "--horizon", "1000"], capsys)
        assert code == 3
        assert document["error"] == "InvalidHorizon"

    def test_estimation(self, tmp_path, capsys):
        small = tmp_path / "small.csv"
        small.write_text("time,event,z\n1,1,0.1\n2,0,0.2\n3,1,0.7\n4,0,0.9\n")
        code, document = run(["estimate", "-i", str(small), "--cutoff", "0.5", "--horizon", "2", "--method", "naive"], capsys)
        assert code == 1
        assert document["error"] == "InsufficientData"

    @pytest.mark.parametrize(
        "content",
        [
            b"time,event,z\n1,1,0.1\n2,0,\xff\xfe\n3,1,0.7\n4,0,0.9\n",
            b"",
            b"time,event,z\n1,1,0.1\n2,0,0.2,9,9\n3,1,0.7\n4,0,0.9\n",
        ],
        ids=["not-utf8", "empty", "ragged"],
    )
    def test_unreadable_csv(self, tmp_path, capsys, content):
        bad = tmp_path / "bad.csv"
        bad.write_bytes(content)
        code, document = run(["estimate", "-i", str(bad), "--cutoff", "0.5", "--horizon", "2", "--method", "naive"], capsys)
        assert code == 3
        assert document["error"] == "InvalidCsv"
        assert document["exitcode"] == 3
        assert str(bad) in document["message"]
