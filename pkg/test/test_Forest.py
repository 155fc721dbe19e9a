# rdsurv : regression discontinuity estimates for censored time-to-event outcomes
#
# (c) 2026 Michel Anders (varkenvarken)
#
# License: GPL 3, see file LICENSE
#
# Version: 20261017174122

import numpy as np
import pandas as pd
import pytest
from pytest import approx

from rdsurv.Dataset import validateDataset
from rdsurv.Errors import ConfigError
from rdsurv.Forest import (
    ForestConfig,
    fitSurvivalForest,
    logrankSplits,
    predictInbagCurves,
    predictOobCurves,
)
from rdsurv.Survival import kaplanMeier


def makeData(n=300, seed=1, censoring=True, separated=False):
    rng = np.random.default_rng(seed)
    x1 = rng.integers(0, 2, n) if separated else rng.uniform(size=n)
    x2 = rng.uniform(size=n)
    z = rng.uniform(size=n)
    scale = np.where(x1 == 1, 10.0, 2.0) if separated else 5.0
    T = np.ceil(rng.exponential(scale, n))
    C = np.ceil(rng.uniform(1, 20, n)) if censoring else np.full(n, np.inf)
    frame = pd.DataFrame(
        {"time": np.minimum(T, C), "event": (T < C).astype(int), "z": z, "x1": x1, "x2": x2}
    )
    return validateDataset(frame, 0.5)


@pytest.fixture
def ds():
    return makeData()


@pytest.fixture
def cfg():
    return ForestConfig(num_trees=40, seed=7)


class TestForestConfig:
    def test_defaults(self):
        cfg = ForestConfig()
        assert cfg.num_trees == 500
        assert cfg.min_node_size == 15
        assert cfg.subsample_fraction == 0.5
        assert cfg.censor_floor == 0.05
        assert cfg.resolvedMtry(11) == 4

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"num_trees": 0},
            {"mtry": 4},
            {"min_node_size": 0},
            {"subsample_fraction": 0.0},
            {"subsample_fraction": 1.5},
            {"censor_floor": 0.0},
            {"censor_floor": 0.6},
            {"seed": -1},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            ForestConfig(**kwargs).validate(d=2)


class TestLogrankSplits:
    def test_identical_groups(self):
        values = np.array([0.0, 0.0, 0.0, 1.0, 1.0, 1.0])
        index = np.array([1, 2, 3, 1, 2, 3])
        stat, cuts = logrankSplits(values, index, np.ones(6, dtype=bool), 3)
        assert list(cuts) == [0.5]
        assert stat[0] == approx(0.0)

    def test_separated_groups(self):
        values = np.arange(8.0)
        index = np.array([1, 1, 1, 1, 6, 6, 6, 6])
        stat, cuts = logrankSplits(values, index, np.ones(8, dtype=bool), 2)
        assert list(cuts) == [1.5, 2.5, 3.5, 4.5, 5.5]
        assert int(np.argmax(stat)) == 2

    def test_minimum_child_size(self):
        values = np.arange(10.0)
        index = np.arange(1, 11)
        _, cuts = logrankSplits(values, index, np.ones(10, dtype=bool), 4)
        assert list(cuts) == [3.5, 4.5, 5.5]

    def test_no_events(self):
        stat, cuts = logrankSplits(np.arange(6.0), np.arange(1, 7), np.zeros(6, dtype=bool), 2)
        assert len(stat) == 0 and len(cuts) == 0

    def test_ties_not_split(self):
        values = np.array([1.0, 1.0, 1.0, 1.0])
        stat, _ = logrankSplits(values, np.arange(1, 5), np.ones(4, dtype=bool), 1)
        assert len(stat) == 0


class TestForest:
    def test_determinism(self, ds, cfg):
        a = predictOobCurves(
            fitSurvivalForest(ds, "event", cfg, n_jobs=1),
            fitSurvivalForest(ds, "censoring", cfg, n_jobs=1),
            ds,
        )
        b = predictOobCurves(
            fitSurvivalForest(ds, "event", cfg, n_jobs=4),
            fitSurvivalForest(ds, "censoring", cfg, n_jobs=4),
            ds,
        )
        assert np.array_equal(a.event, b.event)
        assert np.array_equal(a.censor, b.censor)

    def test_oob_bookkeeping(self, ds, cfg):
        forest = fitSurvivalForest(ds, "event", cfg)
        assert forest.inbag.shape == (40, ds.n)
        assert np.all(forest.inbag.sum(axis=1) == 150)
        for t, tree in enumerate(forest.trees):
            assert np.array_equal(np.flatnonzero(forest.inbag[t]), tree.rows)
        _, counts = forest.accumulate(ds.features(), oob=True)
        assert np.array_equal(counts, (~forest.inbag).sum(axis=0))

    def test_panel_invariants(self, ds, cfg):
        panel = predictOobCurves(
            fitSurvivalForest(ds, "event", cfg), fitSurvivalForest(ds, "censoring", cfg), ds
        )
        assert panel.oob
        assert panel.event.shape == (ds.n, len(ds.grid) + 1)
        assert np.all(panel.event[:, 0] == 1.0)
        assert np.all(np.diff(panel.event, axis=1) <= 0)
        assert np.all(panel.event >= 0) and np.all(panel.event <= 1)
        assert panel.censor.min() >= cfg.censor_floor

    def test_no_censoring(self, cfg):
        ds = makeData(censoring=False)
        forest = fitSurvivalForest(ds, "censoring", cfg)
        panel = predictOobCurves(fitSurvivalForest(ds, "event", cfg), forest, ds)
        assert np.all(panel.censor == 1.0)

    def test_clamp(self, cfg):
        ds = makeData(n=200, seed=5)
        floor = ForestConfig(num_trees=20, seed=7, censor_floor=0.3)
        forest_c = fitSurvivalForest(ds, "censoring", floor)
        raw = forest_c.predict(ds.features())
        panel = predictOobCurves(fitSurvivalForest(ds, "event", floor), forest_c, ds)
        assert raw.min() < 0.3
        assert panel.censor.min() == 0.3

    def test_single_tree(self, ds):
        cfg = ForestConfig(num_trees=1)
        forest_t = fitSurvivalForest(ds, "event", cfg)
        forest_c = fitSurvivalForest(ds, "censoring", cfg)
        panel = predictOobCurves(forest_t, forest_c, ds)
        rows = forest_t.trees[0].rows
        assert panel.inbag == sorted(rows.tolist())
        assert any("NoOobTrees" in w for w in panel.warnings)
        outside = np.setdiff1d(np.arange(ds.n), rows)
        tree = forest_t.trees[0]
        expected = tree.curves[tree.apply(ds.features()[outside])]
        assert panel.event[outside] == approx(np.minimum.accumulate(expected, axis=1))

    def test_independent_survival(self, ds):
        cfg = ForestConfig(num_trees=100, seed=3)
        panel = predictOobCurves(
            fitSurvivalForest(ds, "event", cfg), fitSurvivalForest(ds, "censoring", cfg), ds
        )
        pooled = kaplanMeier(ds.y, ds.delta, ds.grid).full
        assert np.max(np.abs(panel.event.mean(axis=0) - pooled)) < 0.06

    def test_subpopulations(self):
        ds = makeData(n=400, seed=11, censoring=False, separated=True)
        cfg = ForestConfig(num_trees=50, seed=3)
        panel = predictOobCurves(
            fitSurvivalForest(ds, "event", cfg), fitSurvivalForest(ds, "censoring", cfg), ds
        )
        group = ds.x[:, 0] == 1
        pooled = kaplanMeier(ds.y, ds.delta, ds.grid).full
        for g in (group, ~group):
            own = kaplanMeier(ds.y[g], ds.delta[g], ds.grid).full
            curves = panel.event[g]
            assert np.mean(np.max(np.abs(curves - own), axis=1)) < np.mean(
                np.max(np.abs(curves - pooled), axis=1)
            )

    def test_degenerate(self, cfg):
        frame = pd.DataFrame(
            {"time": 3.0, "event": [1, 0] * 20, "z": np.linspace(0, 1, 40), "x1": np.linspace(1, 2, 40)}
        )
        ds = validateDataset(frame, 0.5)
        forest = fitSurvivalForest(ds, "event", cfg)
        assert all(tree.leaves == 1 for tree in forest.trees)
        assert any("DegenerateData" in w for w in forest.warnings)

    def test_unknown_target(self, ds, cfg):
        with pytest.raises(ConfigError):
            fitSurvivalForest(ds, "hazard", cfg)

    def test_inbag_panel_is_marked(self, ds, cfg):
        panel = predictInbagCurves(
            fitSurvivalForest(ds, "event", cfg), fitSurvivalForest(ds, "censoring", cfg), ds
        )
        assert not panel.oob
