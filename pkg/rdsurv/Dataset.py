# rdsurv : regression discontinuity estimates for censored time-to-event outcomes
#
# (c) 2026 Michel Anders (varkenvarken)
#
# License: GPL 3, see file LICENSE
#
# Version: 20261017094417

"""
Observational units, dataset validation, the discrete time grid and horizons.

A dataset is read from a CSV file with a header row and the columns

| column      | meaning                                             |
|-------------|-----------------------------------------------------|
| `time`      | observed time, the minimum of event and censoring time |
| `event`     | 1 if the event was observed, 0 if the unit was censored |
| `z`         | running variable                                    |
| `x1` .. `xd`| baseline covariates                                 |
| `w`         | treatment received (0/1), fuzzy designs only         |

!!! note
    Grid index 0 always denotes time zero, where every survival curve equals 1.
    The grid points themselves are the distinct positive observed times.
"""

import logging
import re
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from .Errors import (
    ConfigError,
    EmptySide,
    InvalidCsv,
    InvalidHorizon,
    InvalidValue,
    MissingColumn,
    MissingTreatmentColumn,
    NonFiniteValue,
    warn,
)

log = logging.getLogger(__name__)

DESIGNS = ("sharp", "fuzzy")

covariatepattern = re.compile(r"^x(\d+)$")


@dataclass(frozen=True)
class Unit:
    """
    A single observed unit.

    Args:
        y (float): observed time, min(T, C).
        delta (bool): True if the event was observed.
        z (float): running variable.
        x (tuple): covariate values.
        w (bool, optional): treatment received, only present in fuzzy designs.
    """

    y: float
    delta: bool
    z: float
    x: tuple
    w: Optional[bool] = None


class TimeGrid:
    """
    A strictly increasing list of positive times.

    Args:
        points: the grid times t_1 < ... < t_max.

    Raises:
        ValueError: if the points are not positive or not strictly increasing.
    """

    def __init__(self, points):
        points = np.asarray(points, dtype=float)
        if points.ndim != 1:
            raise ValueError("grid points must be one dimensional")
        if len(points) and (points[0] <= 0 or np.any(np.diff(points) <= 0)):
            raise ValueError("grid points must be positive and strictly increasing")
        self.points = points
        self.times = np.concatenate([[0.0], points])

    @staticmethod
    def binTimes(times, binwidth):
        """
        Coarsen times to the right edge of the bin they fall in.

        A time that lies exactly on a bin edge stays where it is, zero stays zero.
        """
        times = np.asarray(times, dtype=float)
        return np.round(np.ceil(np.round(times / binwidth, 9)) * binwidth, 12)

    @staticmethod
    def fromTimes(times, binwidth=None):
        """
        Build the grid of all distinct positive recorded times.

        Args:
            times: observed times.
            binwidth (float, optional): if given, times are first coarsened to bin right-edges.

        Returns:
            TimeGrid: the grid.
        """
        times = np.asarray(times, dtype=float)
        if binwidth is not None:
            times = TimeGrid.binTimes(times, binwidth)
        return TimeGrid(np.unique(times[times > 0]))

    def __len__(self):
        return len(self.points)

    @property
    def tmax(self):
        return float(self.points[-1]) if len(self.points) else 0.0

    def index(self, t):
        """
        Return the grid index of times that lie on the grid.

        Args:
            t: a time or an array of times.

        Raises:
            ValueError: if a time is not a grid point (or zero).

        Returns:
            int or ndarray: index 0 for time zero, k for t_k.
        """
        t = np.asarray(t, dtype=float)
        k = np.searchsorted(self.times, t)
        kc = np.minimum(k, len(self.times) - 1)
        if np.any(self.times[kc] != t):
            raise ValueError("time not on the grid")
        return int(k) if k.ndim == 0 else k

    def snap(self, t):
        """
        Return the index of the largest grid time not exceeding t.
        """
        k = np.searchsorted(self.times, np.asarray(t, dtype=float), side="right") - 1
        return int(k) if np.ndim(k) == 0 else k

    def time(self, k):
        return float(self.times[k])

    def __eq__(self, other: object):
        return type(other) == TimeGrid and np.array_equal(self.points, other.points)

    def __str__(self):
        if len(self) == 0:
            return "TimeGrid(<empty>)"
        return f"TimeGrid({len(self)} points, {self.points[0]:g} .. {self.points[-1]:g})"


class SurvivalDataset:
    """
    A validated dataset, immutable after construction.

    Use [validateDataset](rdsurv.Dataset.validateDataset) to create one from raw rows.

    Args:
        y (ndarray): observed times.
        delta (ndarray): event indicators (bool).
        z (ndarray): running variable.
        x (ndarray): covariates, shape (n, d).
        cutoff (float): the threshold c.
        grid (TimeGrid): the time grid.
        w (ndarray, optional): treatment received (bool), fuzzy designs only.
        covariates (list, optional): covariate column names.
        binwidth (float, optional): bin width used to coarsen the times, if any.
    """

    def __init__(
        self, y, delta, z, x, cutoff, grid, w=None, covariates=None, binwidth=None
    ):
        self.y = np.asarray(y, dtype=float)
        self.delta = np.asarray(delta, dtype=bool)
        self.z = np.asarray(z, dtype=float)
        self.x = np.asarray(x, dtype=float).reshape(len(self.y), -1)
        self.w = None if w is None else np.asarray(w, dtype=bool)
        self.cutoff = float(cutoff)
        self.grid = grid
        self.binwidth = binwidth
        self.covariates = (
            list(covariates)
            if covariates is not None
            else [f"x{j+1}" for j in range(self.x.shape[1])]
        )
        self.yindex = grid.index(self.y)
        for a in (self.y, self.delta, self.z, self.x, self.yindex):
            a.flags.writeable = False

    def __len__(self):
        return len(self.y)

    @property
    def n(self):
        return len(self.y)

    @property
    def d(self):
        return self.x.shape[1]

    @property
    def design(self):
        return "sharp" if self.w is None else "fuzzy"

    @property
    def right(self):
        """
        True for units on or above the cutoff.
        """
        return self.z >= self.cutoff

    @property
    def treatment(self):
        """
        The treatment indicator, implied by the cutoff in a sharp design.
        """
        return self.right if self.w is None else self.w

    def features(self):
        """
        Return the split features (X, Z) used by the survival forests.
        """
        return np.column_stack([self.x, self.z])

    def unit(self, i) -> Unit:
        return Unit(
            y=float(self.y[i]),
            delta=bool(self.delta[i]),
            z=float(self.z[i]),
            x=tuple(float(v) for v in self.x[i]),
            w=None if self.w is None else bool(self.w[i]),
        )

    @property
    def units(self):
        return [self.unit(i) for i in range(self.n)]

    def column(self, name):
        """
        Return a data column by its CSV name.

        Raises:
            KeyError: if there is no such column.
        """
        if name == "time":
            return self.y
        if name == "event":
            return self.delta.astype(int)
        if name == "z":
            return self.z
        if name == "w" and self.w is not None:
            return self.w.astype(int)
        if name in self.covariates:
            return self.x[:, self.covariates.index(name)]
        raise KeyError(name)

    def toFrame(self):
        """
        Return the dataset as a DataFrame with the CSV input schema.
        """
        frame = pd.DataFrame(
            {"time": self.y, "event": self.delta.astype(int), "z": self.z}
        )
        for j, name in enumerate(self.covariates):
            frame[name] = self.x[:, j]
        if self.w is not None:
            frame["w"] = self.w.astype(int)
        return frame

    def __str__(self):
        return (
            f"SurvivalDataset(n={self.n}, d={self.d}, cutoff={self.cutoff:g}, "
            f"design={self.design}, events={int(self.delta.sum())}, {self.grid})"
        )


class Horizon:
    """
    A horizon h together with the index of the largest grid point not exceeding it.

    Args:
        h (float): the horizon.
        gridindex (int): grid index of the largest grid time <= h.
        snapped (bool, optional): True if h is not itself a grid time.
    """

    def __init__(self, h, gridindex, snapped=False):
        self.h = float(h)
        self.gridindex = int(gridindex)
        self.snapped = snapped
        self.warnings = []

    @staticmethod
    def fromDataset(ds: SurvivalDataset, h):
        """
        Validate a horizon against a dataset.

        Args:
            ds (SurvivalDataset): the dataset.
            h (float): the horizon.

        Raises:
            InvalidHorizon: if h is outside (0, t_max] or no unit carries information about h.

        Returns:
            Horizon: the validated horizon.
        """
        h = float(h)
        if not np.isfinite(h) or h <= 0 or h > ds.grid.tmax:
            raise InvalidHorizon(
                f"horizon {h:g} outside (0, {ds.grid.tmax:g}], the range of observed times"
            )
        if not np.any((ds.y > h) | ((ds.y <= h) & ds.delta)):
            raise InvalidHorizon(
                f"no unit is followed past {h:g} or has an event before it"
            )
        k = ds.grid.snap(h)
        horizon = Horizon(h, k, snapped=bool(ds.grid.times[k] != h))
        if horizon.snapped:
            warn(
                horizon.warnings,
                f"horizon {h:g} is not a grid time, curves are evaluated at {ds.grid.times[k]:g}",
                log,
            )
        return horizon

    def toJSON(self):
        return {"h": self.h, "gridindex": self.gridindex, "snapped": self.snapped}

    def __eq__(self, other: object):
        return (
            type(other) == Horizon
            and self.h == other.h
            and self.gridindex == other.gridindex
        )

    def __str__(self):
        return f"Horizon(h={self.h:g}, gridindex={self.gridindex})"


def readCsv(path):
    """
    Read raw rows from a comma separated UTF-8 file with a header row.

    Raises:
        InvalidCsv: if the file is empty, not UTF-8 or not parseable as CSV.
    """
    try:
        return pd.read_csv(path, sep=",", encoding="utf-8")
    except UnicodeDecodeError as e:
        raise InvalidCsv(f"{path} is not UTF-8 encoded: {e.reason} at byte {e.start}") from e
    except pd.errors.EmptyDataError as e:
        raise InvalidCsv(f"{path} is empty") from e
    except pd.errors.ParserError as e:
        raise InvalidCsv(f"{path} is not a valid CSV file: {e}") from e


def _numeric(frame, name):
    values = pd.to_numeric(frame[name], errors="coerce").to_numpy(dtype=float)
    bad = np.flatnonzero(~np.isfinite(values))
    if len(bad):
        raise NonFiniteValue(int(bad[0]), name)
    return values


def _binary(values, name):
    bad = np.flatnonzero((values != 0) & (values != 1))
    if len(bad):
        raise InvalidValue(int(bad[0]), name, "must be 0 or 1")
    return values == 1


def validateDataset(raw, cutoff, design="sharp", binwidth=None) -> SurvivalDataset:
    """
    Validate raw rows and build a dataset with its time grid.

    Args:
        raw (DataFrame or list of dict): the parsed rows.
        cutoff (float): the threshold c.
        design (str, optional): "sharp" or "fuzzy". Defaults to "sharp".
        binwidth (float, optional): coarsen times to bins of this width. Defaults to None (exact times).

    Raises:
        MissingColumn: if time, event or z is missing.
        NonFiniteValue: for NaN, infinite or unparsable values (the row index is reported).
        InvalidValue: for negative times or indicators other than 0/1.
        MissingTreatmentColumn: for a fuzzy design without a w column.
        EmptySide: if fewer than 2 units lie on either side of the cutoff.

    Returns:
        SurvivalDataset: the validated dataset.
    """
    if design not in DESIGNS:
        raise ConfigError(f"unknown design {design}, not one of {DESIGNS}")
    if binwidth is not None and not binwidth > 0:
        raise ConfigError("binwidth must be positive")
    frame = raw if isinstance(raw, pd.DataFrame) else pd.DataFrame(raw)
    for name in ("time", "event", "z"):
        if name not in frame.columns:
            raise MissingColumn(f"required column '{name}' is missing")
    if design == "fuzzy" and "w" not in frame.columns:
        raise MissingTreatmentColumn("a fuzzy design needs a treatment column 'w'")
    cutoff = float(cutoff)
    if not np.isfinite(cutoff):
        raise ConfigError("cutoff must be finite")

    covariates = sorted(
        (c for c in frame.columns if covariatepattern.match(str(c))),
        key=lambda c: int(covariatepattern.match(str(c)).group(1)),
    )

    y = _numeric(frame, "time")
    bad = np.flatnonzero(y < 0)
    if len(bad):
        raise InvalidValue(int(bad[0]), "time", "must be nonnegative")
    delta = _binary(_numeric(frame, "event"), "event")
    z = _numeric(frame, "z")
    x = (
        np.column_stack([_numeric(frame, c) for c in covariates])
        if covariates
        else np.empty((len(frame), 0))
    )
    w = _binary(_numeric(frame, "w"), "w") if design == "fuzzy" else None

    left = int(np.sum(z < cutoff))
    right = len(z) - left
    if left < 2 or right < 2:
        raise EmptySide(
            f"need at least 2 units on each side of the cutoff {cutoff:g}, got {left} left and {right} right"
        )

    if binwidth is not None:
        y = TimeGrid.binTimes(y, binwidth)
    grid = TimeGrid.fromTimes(y)
    ds = SurvivalDataset(
        y, delta, z, x, cutoff, grid, w=w, covariates=covariates, binwidth=binwidth
    )
    log.info(f"validated {ds}")
    return ds


def remapToHorizon(ds: SurvivalDataset, horizon) -> Tuple[np.ndarray, np.ndarray]:
    """
    Remap every unit tracked past the horizon to the horizon.

    A unit censored after h is known to be alive at h, so it counts as observed.

    Args:
        ds (SurvivalDataset): the dataset.
        horizon (Horizon or float): the horizon.

    Returns:
        tuple: (H, observed) with H = min(y, h) and observed = max(delta, 1(y > h)).
    """
    h = horizon.h if isinstance(horizon, Horizon) else float(horizon)
    return np.minimum(ds.y, h), ds.delta | (ds.y > h)


def suggestHorizon(ds: SurvivalDataset, quantile=0.9) -> Horizon:
    """
    Choose a horizon from the data: a quantile of the observed follow-up times.

    The quantile is snapped down to a grid time.

    Args:
        ds (SurvivalDataset): the dataset.
        quantile (float, optional): the quantile of observed times. Defaults to 0.9.

    Returns:
        Horizon: the suggested horizon, with a warning recording the choice.
    """
    if not 0 < quantile <= 1:
        raise ConfigError("horizon quantile must lie in (0, 1]")
    k = max(ds.grid.snap(np.quantile(ds.y, quantile)), 1)
    horizon = Horizon.fromDataset(ds, ds.grid.times[k])
    warn(
        horizon.warnings,
        f"no horizon given, using the {quantile:.0%} quantile of observed times h={horizon.h:g}",
        log,
    )
    return horizon
