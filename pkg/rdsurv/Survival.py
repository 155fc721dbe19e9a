# rdsurv : regression discontinuity estimates for censored time-to-event outcomes
#
# (c) 2026 Michel Anders (varkenvarken)
#
# License: GPL 3, see file LICENSE
#
# Version: 20261017101532

"""
Survival curves on a time grid, Kaplan-Meier estimates and restricted means.

Curves are step functions: the value stored for grid index k holds on [t_k, t_k+1).
Index 0 is time zero where every curve equals 1.
"""

import logging

import numpy as np
import pandas as pd

from .Dataset import Horizon, TimeGrid
from .Errors import EmptyInput, ZeroSurvival

log = logging.getLogger(__name__)


def _horizonIndex(grid: TimeGrid, horizon):
    if isinstance(horizon, Horizon):
        return horizon.h, horizon.gridindex
    return float(horizon), grid.snap(horizon)


def checkCurves(values, tolerance=1e-12):
    """
    Check that curves are monotone nonincreasing with values in [0, 1].

    Args:
        values (ndarray): one curve or a stack of curves (rows), time along the last axis.

    Raises:
        AssertionError: if a curve violates the invariants.
    """
    values = np.asarray(values)
    assert np.all(values >= -tolerance) and np.all(values <= 1 + tolerance)
    assert np.all(np.diff(values, axis=-1) <= tolerance)


class SurvivalCurve:
    """
    A survival function S(t) on a time grid.

    Args:
        grid (TimeGrid): the grid the curve lives on.
        values: S(t_k) for k = 1 .. len(grid); S(time zero) = 1 is implicit.
    """

    def __init__(self, grid: TimeGrid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (len(grid),):
            raise ValueError(
                f"curve has {len(values)} values, grid has {len(grid)} points"
            )
        checkCurves(np.concatenate([[1.0], values]))
        self.grid = grid
        self.values = values

    @property
    def full(self):
        """
        The curve including the leading 1 at time zero, indexed by grid index.
        """
        return np.concatenate([[1.0], self.values])

    def at(self, k):
        """
        Return S at grid index k (0 is time zero).
        """
        return 1.0 if k == 0 else float(self.values[k - 1])

    def __call__(self, t):
        """
        Evaluate the step function at time t.
        """
        return self.at(self.grid.snap(t))

    def toJSON(self):
        return {"t": self.grid.points.tolist(), "s": self.values.tolist()}

    def __eq__(self, other: object):
        return (
            type(other) == SurvivalCurve
            and self.grid == other.grid
            and np.array_equal(self.values, other.values)
        )

    def __str__(self):
        return f"SurvivalCurve({len(self.values)} points, S(t_max)={self.values[-1] if len(self.values) else 1.0:.4f})"


class CurvePanel:
    """
    One conditional event curve and one conditional censoring curve per unit.

    Curves are stored as rows of two arrays of shape (n, len(grid) + 1), column 0 being time zero.

    Args:
        grid (TimeGrid): the grid.
        event (ndarray): the event survival curves S_T(.; X_i, Z_i).
        censor (ndarray): the censoring survival curves S_C(.; X_i, Z_i).
        oob (bool): True if every curve was estimated without its own unit.
        censorfloor (float, optional): lower clamp applied to the censoring curves. Defaults to 0.
        inbag (list, optional): units that had to be predicted in-bag.
    """

    def __init__(self, grid, event, censor, oob, censorfloor=0.0, inbag=None):
        event = np.asarray(event, dtype=float)
        censor = np.asarray(censor, dtype=float)
        if event.shape != censor.shape or event.shape[1] != len(grid) + 1:
            raise ValueError("event and censoring curves must both be (n, len(grid)+1)")
        checkCurves(event)
        checkCurves(censor)
        assert np.all(censor >= censorfloor)
        self.grid = grid
        self.event = event
        self.censor = censor
        self.oob = oob
        self.censorfloor = float(censorfloor)
        self.inbag = list(inbag or [])
        self.warnings = []

    def __len__(self):
        return self.event.shape[0]

    def eventCurve(self, i) -> SurvivalCurve:
        return SurvivalCurve(self.grid, self.event[i, 1:])

    def censorCurve(self, i) -> SurvivalCurve:
        return SurvivalCurve(self.grid, self.censor[i, 1:])

    def meta(self):
        """
        Provenance of the panel, as recorded with the scores computed from it.
        """
        return {
            "oob": self.oob,
            "censorfloor": self.censorfloor,
            "inbag_units": len(self.inbag),
            "gridpoints": len(self.grid),
        }

    def toFrame(self):
        """
        Return the panel in long format with columns unit_id, t, s_event, s_censor.
        """
        n, g = len(self), len(self.grid)
        return pd.DataFrame(
            {
                "unit_id": np.repeat(np.arange(n), g),
                "t": np.tile(self.grid.points, n),
                "s_event": self.event[:, 1:].ravel(),
                "s_censor": self.censor[:, 1:].ravel(),
            }
        )

    def __str__(self):
        return f"CurvePanel(n={len(self)}, gridpoints={len(self.grid)}, oob={self.oob}, floor={self.censorfloor:g})"


def productLimit(index, indicator, size):
    """
    The product-limit estimate on grid indices.

    Args:
        index (ndarray): grid index of each observed time.
        indicator (ndarray): True where the process of interest happened at that time.
        size (int): number of grid points.

    Returns:
        ndarray: S at grid indices 0 .. size, with S[0] = 1.

    !!! note
        A process event at time zero lowers the curve from the first grid point on.
    """
    index = np.asarray(index)
    indicator = np.asarray(indicator, dtype=bool)
    removed = np.bincount(index, minlength=size + 1)
    events = np.bincount(index[indicator], minlength=size + 1)
    atrisk = len(index) - np.concatenate([[0], np.cumsum(removed)[:-1]])
    factor = np.ones(size + 1)
    np.divide(events, atrisk, out=factor, where=atrisk > 0)
    factor = np.where(atrisk > 0, 1.0 - factor, 1.0)
    curve = np.cumprod(factor)
    curve[0] = 1.0
    return curve


def kaplanMeier(y, indicator, grid: TimeGrid) -> SurvivalCurve:
    """
    Fit a Kaplan-Meier curve on a time grid.

    Pass the event indicator to estimate S_T, or 1 - delta to estimate the censoring curve S_C.
    An event and a censoring at the same time are ordered event first.

    Args:
        y: observed times.
        indicator: True where the process of interest was observed.
        grid (TimeGrid): the grid to evaluate on; times are snapped down to it.

    Raises:
        EmptyInput: if there are no observations.

    Returns:
        SurvivalCurve: the product-limit estimate, constant beyond the last observed time.
    """
    y = np.asarray(y, dtype=float)
    if len(y) == 0:
        raise EmptyInput("cannot fit a Kaplan-Meier curve without observations")
    curve = productLimit(grid.snap(y), indicator, len(grid))
    return SurvivalCurve(grid, curve[1:])


def restrictedMeans(curves, grid: TimeGrid, horizon):
    """
    Conditional restricted means for a stack of curves.

    For every curve S and grid index k <= kh (the grid index of h) this computes
    m(t_k) = E[min(T, h) | T > t_k] = t_k + (area under S on [t_k, h]) / S(t_k).

    Args:
        curves (ndarray): curves of shape (n, len(grid)+1), column 0 being time zero.
        grid (TimeGrid): the grid.
        horizon (Horizon or float): the horizon.

    Returns:
        ndarray: m of shape (n, kh+1).
    """
    h, kh = _horizonIndex(grid, horizon)
    curves = np.atleast_2d(curves)[:, : kh + 1]
    times = grid.times[: kh + 1]
    steps = np.diff(times) * curves[:, :kh]
    area = np.empty_like(curves)
    area[:, kh] = (h - times[kh]) * curves[:, kh]
    if kh:
        area[:, :kh] = area[:, kh : kh + 1] + np.cumsum(steps[:, ::-1], axis=1)[:, ::-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        return times + area / curves


def conditionalRmst(curve: SurvivalCurve, horizon, t) -> float:
    """
    The conditional restricted mean E[min(T, h) | T > t_k] from a survival curve.

    Args:
        curve (SurvivalCurve): the survival curve.
        horizon (Horizon or float): the horizon h.
        t (int): grid index k, 0 for time zero, at most the grid index of h.

    Raises:
        ZeroSurvival: if S(t_k) = 0.
        ValueError: if t lies beyond the horizon.

    Returns:
        float: m(t_k), which lies in [t_k, h].
    """
    h, kh = _horizonIndex(curve.grid, horizon)
    if not 0 <= t <= kh:
        raise ValueError(f"grid index {t} outside [0, {kh}]")
    if curve.at(t) <= 0:
        raise ZeroSurvival(f"survival is zero at grid index {t}")
    return float(restrictedMeans(curve.full, curve.grid, horizon)[0, t])


def exportCurves(panel: CurvePanel, path):
    """
    Write a panel to CSV with columns unit_id, t, s_event, s_censor.
    """
    panel.toFrame().to_csv(path, index=False)
    log.info(f"wrote {len(panel)} curve pairs to {path}")
