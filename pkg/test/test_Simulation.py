# rdsurv : regression discontinuity estimates for censored time-to-event outcomes
#
# (c) 2026 Michel Anders (varkenvarken)
#
# License: GPL 3, see file LICENSE
#
# Version: 20261017193318

import json
import os
from unittest.mock import patch

import numpy as np
import pytest
from pytest import approx

from rdsurv.Errors import ConfigError, SingularDesign, StudyFailed
from rdsurv.Pipeline import runPipeline
from rdsurv.Simulation import (
    DgpSetting,
    Truth,
    TruthCache,
    computeTruth,
    eventTimes,
    generate,
    runStudy,
)

slow = pytest.mark.skipif(
    os.environ.get("RDSURV_SLOW") is None, reason="set RDSURV_SLOW to run Monte Carlo studies"
)


@pytest.fixture
def truth():
    return Truth(0.1, 0.001, 1000, 1)


class TestDgpSetting:
    def test_defaults(self):
        assert DgpSetting(1).horizon == 7.0
        assert DgpSetting(3).horizon == 20.0
        assert DgpSetting(4, horizon=10.0).horizon == 10.0
        assert DgpSetting(2).n == 5000

    @pytest.mark.parametrize("kwargs", [{"id": 5}, {"id": 0}, {"id": 1, "n": 3}])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            DgpSetting(**kwargs)


class TestGenerate:
    @pytest.mark.parametrize("setting", [1, 2, 3, 4])
    def test_shape(self, setting):
        ds, T = generate(DgpSetting(setting, n=500, seed=4))
        assert ds.n == 500
        assert ds.d == 10
        assert ds.covariates == [f"x{j}" for j in range(1, 11)]
        assert ds.cutoff == 0.5
        assert np.all(ds.y <= T)
        assert np.array_equal(ds.y[ds.delta], T[ds.delta])
        assert 0 < ds.delta.mean() < 1

    def test_deterministic(self):
        a, _ = generate(DgpSetting(2, n=300, seed=9))
        b, _ = generate(DgpSetting(2, n=300, seed=9))
        c, _ = generate(DgpSetting(2, n=300, seed=10))
        assert np.array_equal(a.y, b.y) and np.array_equal(a.x, b.x)
        assert not np.array_equal(a.y, c.y)

    def test_no_censoring(self):
        ds, T = generate(DgpSetting(3, n=300, censoring=False))
        assert ds.delta.all()
        assert np.array_equal(ds.y, T)

    def test_recorded_precision(self):
        ds, _ = generate(DgpSetting(3, n=300))
        assert np.allclose(ds.y, np.round(ds.y, 1))
        ds, _ = generate(DgpSetting(1, n=300))
        assert np.allclose(ds.y, np.round(ds.y))

    def test_coupling(self):
        rng = np.random.default_rng(0)
        x = rng.uniform(size=(1000, 10))
        z = np.full(1000, 0.5)
        u = rng.uniform(size=1000)
        for setting in (1, 3):
            s = DgpSetting(setting)
            treated = eventTimes(s, x, z, np.ones(1000), u)
            control = eventTimes(s, x, z, np.zeros(1000), u)
            assert np.all(treated >= control)
            null = DgpSetting(setting, effect_scale=0.0)
            assert np.array_equal(
                eventTimes(null, x, z, np.ones(1000), u), eventTimes(null, x, z, np.zeros(1000), u)
            )


class TestTruth:
    def test_null(self):
        truth = computeTruth(DgpSetting(1, effect_scale=0.0), "survival_probability", oracle_draws=10**4)
        assert truth.value == 0.0
        assert truth.se == 0.0

    def test_positive(self):
        truth = computeTruth(DgpSetting(1), "survival_probability", oracle_draws=10**5, batch=30000)
        assert truth.value > 5 * truth.se
        rmst = computeTruth(DgpSetting(3), "rmst", oracle_draws=10**5)
        assert rmst.value > 0

    def test_batches(self):
        # the batch size changes the streams, not the estimand
        a = computeTruth(DgpSetting(3), "rmst", oracle_draws=2 * 10**5, batch=10**5)
        b = computeTruth(DgpSetting(3), "rmst", oracle_draws=2 * 10**5, batch=5 * 10**4)
        assert a.value == approx(b.value, abs=5 * (a.se + b.se))

    def test_unknown(self):
        with pytest.raises(ConfigError):
            computeTruth(DgpSetting(1), "median", oracle_draws=10)

    def test_cache(self, tmp_path):
        path = str(tmp_path / "rdsurv.truth")
        cache = TruthCache(path)
        first = computeTruth(DgpSetting(2), "survival_probability", oracle_draws=10**4, cache=cache)
        assert not first.cached
        again = computeTruth(
            DgpSetting(2), "survival_probability", oracle_draws=10**4, cache=TruthCache(path)
        )
        assert again.cached
        assert again.toJSON() == first.toJSON()
        with open(path) as f:
            assert json.load(f)["version"] == 1

    def test_cache_version(self, tmp_path):
        path = tmp_path / "rdsurv.truth"
        path.write_text(json.dumps({"version": 0, "truths": {"x": {}}}))
        assert TruthCache(str(path)).truths == {}

    def test_cache_environment(self, tmp_path):
        path = str(tmp_path / "elsewhere.truth")
        with patch.dict(os.environ, {"RDSURV_TRUTHFILE": path}):
            assert TruthCache().path == path


class TestRunStudy:
    def test_report(self, truth):
        report = runStudy(DgpSetting(1, n=600), method="naive", reps=4, truth=truth)
        assert report.reps == 4
        assert report.completed == 4
        assert report.failures == 0
        assert 0 <= report.coverage <= 1
        assert report.truth == truth.toJSON()
        assert list(report.toFrame().columns) == [
            "rep", "estimate", "se", "ci_low", "ci_high", "covered", "censoring_bias", "error"
        ]
        assert report.mean_ci_length > 0
        document = report.toJSON()
        assert "rows" not in document
        assert set(document["bias_distribution"]) == {"median", "q1", "q3", "mean"}

    def test_complete_has_no_censoring_bias(self, truth):
        report = runStudy(DgpSetting(3, n=600), method="complete", reps=3, truth=truth)
        assert list(report.toFrame()["censoring_bias"]) == [0.0, 0.0, 0.0]

    def test_parallel(self, truth):
        setting = DgpSetting(2, n=500, seed=3)
        a = runStudy(setting, method="ipcw", reps=4, truth=truth, n_jobs=1)
        b = runStudy(setting, method="ipcw", reps=4, truth=truth, n_jobs=2)
        assert a.toFrame().equals(b.toFrame())
        assert a.toJSON() == b.toJSON()

    def test_failed(self, truth):
        with patch("rdsurv.Simulation.runPipeline", side_effect=SingularDesign("no")):
            with pytest.raises(StudyFailed):
                runStudy(DgpSetting(1, n=300), method="naive", reps=5, truth=truth)

    def test_some_failures(self, truth):
        calls = []

        def flaky(*args, **kwargs):
            calls.append(1)
            if len(calls) == 1:
                raise SingularDesign("window too small")
            return runPipeline(*args, **kwargs)

        with patch("rdsurv.Simulation.runPipeline", side_effect=flaky):
            report = runStudy(DgpSetting(1, n=400), method="naive", reps=20, truth=truth)
        assert report.failures == 1
        assert report.completed == 19
        assert report.failure_reasons == {"SingularDesign": 1}
        assert len(report.warnings) == 1
        assert report.toFrame()["error"].iloc[0] == "SingularDesign"

    @pytest.mark.parametrize("kwargs", [{"reps": 0}, {"method": "magic"}])
    def test_invalid(self, truth, kwargs):
        with pytest.raises(ConfigError):
            runStudy(DgpSetting(1, n=300), truth=truth, **kwargs)



@slow
class TestStudies:
    """
    Monte Carlo studies at desk scale, minutes to an hour each.
    """

    @pytest.fixture(scope="class")
    def cache(self, tmp_path_factory):
        return TruthCache(str(tmp_path_factory.mktemp("truth") / "rdsurv.truth"))

    @pytest.mark.parametrize("estimand", ["survival_probability", "rmst"])
    @pytest.mark.parametrize("setting", [1, 2, 3, 4])
    def test_dr_coverage(self, cache, setting, estimand):
        report = runStudy(
            DgpSetting(setting, n=1000),
            estimand=estimand,
            method="dr",
            reps=100,
            oracle_draws=10**6,
            cache=cache,
            n_jobs=-1,
        )
        assert report.completed >= 95
        assert 0.85 <= report.coverage <= 1.0

    def test_censoring_bias_simple_censoring(self, truth):
        for method in ("ipcw", "dr"):
            report = runStudy(DgpSetting(1), method=method, reps=200, truth=truth, n_jobs=-1)
            assert abs(report.bias_distribution["median"]) <= 0.01

    def test_censoring_bias_covariate_dependent_censoring(self, truth):
        ipcw = runStudy(DgpSetting(2), method="ipcw", reps=200, truth=truth, n_jobs=-1)
        dr = runStudy(DgpSetting(2), method="dr", reps=200, truth=truth, n_jobs=-1)
        assert abs(dr.bias_distribution["median"]) <= 0.01
        assert abs(ipcw.bias_distribution["median"]) >= 2 * abs(dr.bias_distribution["median"])

    @pytest.mark.parametrize("setting", [1, 3])
    def test_ipcw_and_dr_agree(self, truth, setting):
        s = DgpSetting(setting, n=2000)
        ipcw = runStudy(s, method="ipcw", reps=100, truth=truth, n_jobs=-1).toFrame()
        dr = runStudy(s, method="dr", reps=100, truth=truth, n_jobs=-1).toFrame()
        a, b = ipcw["estimate"].dropna(), dr["estimate"].dropna()
        error = np.sqrt(a.var() / len(a) + b.var() / len(b))
        assert abs(a.mean() - b.mean()) <= 3 * error
