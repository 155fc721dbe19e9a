# rdsurv : regression discontinuity estimates for censored time-to-event outcomes
#
# (c) 2026 Michel Anders (varkenvarken)
#
# License: GPL 3, see file LICENSE
#
# Version: 20261017171532

import numpy as np
import pandas as pd
import pytest
from pytest import approx

from rdsurv.Dataset import (
    Horizon,
    TimeGrid,
    Unit,
    readCsv,
    remapToHorizon,
    suggestHorizon,
    validateDataset,
)
from rdsurv.Errors import (
    ConfigError,
    EmptySide,
    InvalidHorizon,
    InvalidValue,
    MissingColumn,
    MissingTreatmentColumn,
    NonFiniteValue,
)


@pytest.fixture
def rows():
    return [
        {"time": 1, "event": 1, "z": 0.1, "x1": 0.3},
        {"time": 2, "event": 0, "z": 0.2, "x1": 0.4},
        {"time": 2, "event": 1, "z": 0.7, "x1": 0.5},
        {"time": 3, "event": 0, "z": 0.9, "x1": 0.6},
    ]


@pytest.fixture
def ds(rows):
    return validateDataset(rows, 0.5)


class TestTimeGrid:
    def test_index_and_snap(self):
        grid = TimeGrid([1.0, 2.0, 3.5])
        assert len(grid) == 3
        assert grid.tmax == 3.5
        assert grid.index(0.0) == 0
        assert grid.index(3.5) == 3
        assert list(grid.index(np.array([1.0, 2.0]))) == [1, 2]
        assert grid.snap(0.5) == 0
        assert grid.snap(2.7) == 2
        assert grid.snap(10) == 3
        with pytest.raises(ValueError):
            grid.index(2.5)

    def test_invalid(self):
        with pytest.raises(ValueError):
            TimeGrid([2.0, 1.0])
        with pytest.raises(ValueError):
            TimeGrid([0.0, 1.0])

    def test_binTimes(self):
        binned = TimeGrid.binTimes(np.array([0.3, 1.0, 1.2, 0.0]), 0.5)
        assert list(binned) == [0.5, 1.0, 1.5, 0.0]

    def test_fromTimes_drops_zero(self):
        grid = TimeGrid.fromTimes([0.0, 2.0, 1.0, 2.0])
        assert list(grid.points) == [1.0, 2.0]
        assert list(grid.times) == [0.0, 1.0, 2.0]

    def test_roundtrip(self):
        grid = TimeGrid.fromTimes([0.2, 1.7, 3.1, 0.2])
        for t in grid.points:
            assert grid.time(grid.index(t)) == t


class TestValidateDataset:
    def test_smallest_valid(self, ds):
        assert ds.n == 4
        assert ds.d == 1
        assert list(ds.grid.points) == [1.0, 2.0, 3.0]
        assert list(ds.yindex) == [1, 2, 2, 3]
        assert ds.design == "sharp"
        assert list(ds.treatment) == [False, False, True, True]
        assert ds.unit(0) == Unit(y=1.0, delta=True, z=0.1, x=(0.3,))

    def test_immutable(self, ds):
        with pytest.raises(ValueError):
            ds.y[0] = 5.0

    def test_nan(self, rows):
        rows[1]["time"] = float("nan")
        with pytest.raises(NonFiniteValue) as e:
            validateDataset(rows, 0.5)
        assert e.value.row == 1
        assert e.value.exitcode == 3

    def test_unparsable(self, rows):
        rows[2]["z"] = "abc"
        with pytest.raises(NonFiniteValue) as e:
            validateDataset(rows, 0.5)
        assert e.value.row == 2
        assert e.value.column == "z"

    def test_fuzzy_without_w(self, rows):
        with pytest.raises(MissingTreatmentColumn):
            validateDataset(rows, 0.5, design="fuzzy")

    def test_fuzzy(self, rows):
        for r, w in zip(rows, (0, 1, 1, 1)):
            r["w"] = w
        ds = validateDataset(rows, 0.5, design="fuzzy")
        assert ds.design == "fuzzy"
        assert list(ds.treatment) == [False, True, True, True]

    def test_empty_side(self, rows):
        with pytest.raises(EmptySide):
            validateDataset(rows, 0.8)

    def test_missing_column(self, rows):
        for r in rows:
            del r["event"]
        with pytest.raises(MissingColumn):
            validateDataset(rows, 0.5)

    def test_negative_time(self, rows):
        rows[0]["time"] = -1
        with pytest.raises(InvalidValue):
            validateDataset(rows, 0.5)

    def test_bad_indicator(self, rows):
        rows[3]["event"] = 2
        with pytest.raises(InvalidValue) as e:
            validateDataset(rows, 0.5)
        assert e.value.row == 3

    def test_unknown_design(self, rows):
        with pytest.raises(ConfigError):
            validateDataset(rows, 0.5, design="blurry")

    def test_covariate_order(self, rows):
        for r in rows:
            r["x10"] = 1.0
            r["x2"] = 2.0
        ds = validateDataset(rows, 0.5)
        assert ds.covariates == ["x1", "x2", "x10"]
        assert list(ds.x[0]) == [0.3, 2.0, 1.0]

    def test_binwidth(self, rows):
        rows[0]["time"] = 0.3
        ds = validateDataset(rows, 0.5, binwidth=2.0)
        assert list(ds.grid.points) == [2.0, 4.0]
        assert list(ds.y) == [2.0, 2.0, 2.0, 4.0]

    def test_readCsv(self, ds, tmp_path):
        filename = tmp_path / "data.csv"
        ds.toFrame().to_csv(filename, index=False)
        again = validateDataset(readCsv(filename), 0.5)
        assert np.array_equal(again.y, ds.y)
        assert np.array_equal(again.delta, ds.delta)
        assert np.array_equal(again.x, ds.x)

    def test_column(self, ds):
        assert list(ds.column("event")) == [1, 0, 1, 0]
        assert list(ds.column("x1")) == approx([0.3, 0.4, 0.5, 0.6])
        with pytest.raises(KeyError):
            ds.column("x7")


class TestHorizon:
    def test_on_grid(self, ds):
        h = Horizon.fromDataset(ds, 2)
        assert h.gridindex == 2
        assert not h.snapped
        assert h.warnings == []

    def test_snapped(self, ds):
        h = Horizon.fromDataset(ds, 2.5)
        assert h.gridindex == 2
        assert h.snapped
        assert len(h.warnings) == 1

    @pytest.mark.parametrize("h", [0, -1, 3.5, float("inf")])
    def test_invalid(self, ds, h):
        with pytest.raises(InvalidHorizon):
            Horizon.fromDataset(ds, h)

    def test_vacuous(self):
        ds = validateDataset(
            [{"time": t, "event": 0, "z": z} for t, z in ((1, 0.1), (2, 0.2), (1, 0.7), (2, 0.8))],
            0.5,
        )
        with pytest.raises(InvalidHorizon):
            Horizon.fromDataset(ds, 2)

    def test_suggestHorizon(self, ds):
        h = suggestHorizon(ds)
        assert h.h == 2.0
        assert len(h.warnings) == 1


class TestRemap:
    def test_remapToHorizon(self):
        ds = validateDataset(
            [
                {"time": 70, "event": 0, "z": 0.1},
                {"time": 12, "event": 1, "z": 0.2},
                {"time": 30, "event": 0, "z": 0.7},
                {"time": 80, "event": 1, "z": 0.8},
            ],
            0.5,
        )
        H, observed = remapToHorizon(ds, Horizon.fromDataset(ds, 60))
        assert list(H) == [60, 12, 30, 60]
        assert list(observed) == [True, True, False, True]

    def test_monotone_in_h(self, ds):
        for h in (1.0, 1.5, 2.0, 2.5):
            H, observed = remapToHorizon(ds, h)
            assert np.all(H <= h) and np.all(H <= ds.y)
        _, early = remapToHorizon(ds, 1.0)
        _, late = remapToHorizon(ds, 2.5)
        censored = ~ds.delta
        assert np.all(early[censored] >= late[censored])
