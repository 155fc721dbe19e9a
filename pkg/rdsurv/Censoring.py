# rdsurv : regression discontinuity estimates for censored time-to-event outcomes
#
# (c) 2026 Michel Anders (varkenvarken)
#
# License: GPL 3, see file LICENSE
#
# Version: 20261017134410

"""
Censoring corrections: inverse probability of censoring weights and doubly robust scores.

Both turn censored observations into per-unit outcomes that the discontinuity step
can consume as if they were complete data.

The doubly robust score of unit i with H = min(y, h) is

    Γ = Q(0) + Σ_{0<t<H} (Q(t) - Q(t⁻)) / S_C(t) + obs / S_C(H) · (R - Q(H⁻))

with obs = max(Δ, 1(y > h)). For the survival probability Q(t) = S_T(h) / S_T(t) and
R = 1(y > h); for the restricted mean Q(t) = m(t), the conditional restricted mean,
and R = min(y, h). It is evaluated in the telescoped form

    Γ = a·R + (1 - a)·Q(H⁻) + Σ_{0<t<H} (1/S_C(t) - 1)(Q(t) - Q(t⁻)),   a = obs / S_C(H)

which returns R exactly when S_C ≡ 1.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .Dataset import Horizon, SurvivalDataset
from .Errors import ConfigError, PanelNotOob, ZeroCensorSurvival, warn
from .Survival import CurvePanel, SurvivalCurve, kaplanMeier, restrictedMeans

log = logging.getLogger(__name__)

KINDS = ("survival_probability", "rmst")

SURVIVAL_CLAMP = 1e-12


class Estimand:
    """
    What is estimated: the survival probability at h or the restricted mean up to h.

    Args:
        kind (str): "survival_probability" or "rmst".
        horizon (Horizon): the horizon.
    """

    def __init__(self, kind, horizon: Horizon):
        if kind not in KINDS:
            raise ConfigError(f"unknown estimand {kind}, not one of {KINDS}")
        self.kind = kind
        self.horizon = horizon

    @property
    def h(self):
        return self.horizon.h

    def outcome(self, times):
        """
        The complete-data outcome for the given times, 1(T > h) or min(T, h).
        """
        times = np.asarray(times, dtype=float)
        if self.kind == "survival_probability":
            return (times > self.h).astype(float)
        return np.minimum(times, self.h)

    def toJSON(self):
        return {"kind": self.kind, "horizon": self.horizon.toJSON()}

    def __eq__(self, other: object):
        return (
            type(other) == Estimand
            and self.kind == other.kind
            and self.horizon == other.horizon
        )

    def __str__(self):
        return f"Estimand({self.kind}, h={self.h:g})"


@dataclass
class IpcwResult:
    """
    Per-unit inverse probability of censoring weights.

    Args:
        included (ndarray): True for units with an observed event before h or followed past h.
        weight (ndarray): 1/S_C(min(h, y)) for included units, 0 for excluded units.
        outcome (ndarray): 1(y > h) or min(y, h).
        estimand (Estimand): the estimand.
        clamped (int): number of weights capped at 1/floor.
    """

    included: np.ndarray
    weight: np.ndarray
    outcome: np.ndarray
    estimand: Estimand
    clamped: int = 0
    warnings: list = field(default_factory=list)

    def toFrame(self, z):
        return pd.DataFrame(
            {
                "unit_id": np.arange(len(self.weight)),
                "z": z,
                "outcome": self.outcome,
                "weight": self.weight,
                "included": self.included.astype(int),
            }
        )


@dataclass
class DrScores:
    """
    Per-unit doubly robust scores.

    Args:
        gamma (ndarray): the scores.
        estimand (Estimand): the estimand.
        panel_meta (dict): provenance of the curve panel the scores were computed from.
    """

    gamma: np.ndarray
    estimand: Estimand
    panel_meta: dict
    warnings: list = field(default_factory=list)

    def toFrame(self, z):
        return pd.DataFrame(
            {"unit_id": np.arange(len(self.gamma)), "z": z, "gamma": self.gamma}
        )


def _horizonGridIndex(ds: SurvivalDataset, kh):
    return np.minimum(np.asarray(ds.yindex), kh)


def ipcwTransform(
    ds: SurvivalDataset, estimand: Estimand, censor=None, floor=0.05
) -> IpcwResult:
    """
    Inverse probability of censoring weights.

    Units censored at or before h drop out; every other unit is weighted by
    1/S_C(min(h, y)).

    Args:
        ds (SurvivalDataset): the dataset.
        estimand (Estimand): the estimand.
        censor (SurvivalCurve or CurvePanel, optional): the censoring curve(s). Defaults to the
            unconditional Kaplan-Meier curve of the censoring times.
        floor (float, optional): lower clamp on S_C for a single curve; a panel uses its own floor.
            Defaults to 0.05.

    Raises:
        ZeroCensorSurvival: if S_C is zero at min(h, y) for an included unit.

    Returns:
        IpcwResult: weights, inclusion flags and outcomes.
    """
    kh = estimand.horizon.gridindex
    k = _horizonGridIndex(ds, kh)
    if censor is None:
        censor = kaplanMeier(ds.y, ~ds.delta, ds.grid)
    if isinstance(censor, CurvePanel):
        raw = censor.censor[np.arange(ds.n), k]
        floor = censor.censorfloor
    elif isinstance(censor, SurvivalCurve):
        raw = censor.full[k]
    else:
        raise TypeError("censor must be a SurvivalCurve or a CurvePanel")

    included = ds.delta | (ds.y > estimand.h)
    zero = np.flatnonzero(included & (raw <= 0))
    if len(zero):
        raise ZeroCensorSurvival(int(zero[0]))
    clamped = included & (raw < floor)
    weight = np.zeros(ds.n)
    weight[included] = 1.0 / np.maximum(raw[included], floor)

    result = IpcwResult(
        included=included,
        weight=weight,
        outcome=estimand.outcome(ds.y),
        estimand=estimand,
        clamped=int(clamped.sum()),
    )
    if result.clamped:
        warn(
            result.warnings,
            f"{result.clamped} censoring weights capped at 1/{floor:g}, positivity is weak",
            log,
        )
    log.info(
        f"ipcw: {int(included.sum())} of {ds.n} units included, max weight {weight.max():.3f}"
    )
    return result


def _scores(ds: SurvivalDataset, horizon: Horizon, panel: CurvePanel, kind, allowInbag):
    if len(panel) != ds.n or not panel.grid == ds.grid:
        raise ValueError("panel does not belong to this dataset")
    if not panel.oob and not allowInbag:
        raise PanelNotOob(
            "doubly robust scores need out-of-bag curves, pass allowInbag for debugging"
        )
    warnings = []
    n, kh = ds.n, horizon.gridindex
    rows = np.arange(n)
    K = _horizonGridIndex(ds, kh)
    previous = np.maximum(K - 1, 0)

    event = panel.event[:, : kh + 1]
    cols = np.arange(kh + 1)
    used = cols[None, :] < np.maximum(K, 1)[:, None]
    zero = used & (event <= 0)
    if zero.any():
        warn(
            warnings,
            f"ZeroSurvival: event curves of {int(zero.any(axis=1).sum())} units reach zero before their observed time, clamped at {SURVIVAL_CLAMP:g}",
            log,
        )
    event = np.maximum(event, SURVIVAL_CLAMP)

    if kind == "survival_probability":
        Q = event[:, kh : kh + 1] / event
        R = (ds.y > horizon.h).astype(float)
    else:
        Q = restrictedMeans(event, ds.grid, horizon)
        R = np.minimum(ds.y, horizon.h)

    censor = panel.censor[:, : kh + 1]
    observed = ds.delta | (ds.y > horizon.h)
    a = observed / censor[rows, K]
    inner = (cols[None, 1:] < K[:, None]) * (1.0 / censor[:, 1:] - 1.0) * np.diff(Q, axis=1)
    gamma = a * R + (1.0 - a) * Q[rows, previous] + inner.sum(axis=1)

    assert np.all(np.isfinite(gamma))
    if kind == "survival_probability":
        floor = max(panel.censorfloor, censor.min())
        assert np.all(gamma >= -1.0 / floor - 1e-9)
        assert np.all(gamma <= 1.0 + 2.0 / floor + 1e-9)
    return gamma, warnings


def drScoresSurvival(
    ds: SurvivalDataset, horizon: Horizon, panel: CurvePanel, allowInbag=False
) -> DrScores:
    """
    Doubly robust scores for the probability of surviving past h.

    Args:
        ds (SurvivalDataset): the dataset.
        horizon (Horizon): the horizon.
        panel (CurvePanel): conditional event and censoring curves per unit.
        allowInbag (bool, optional): accept an in-bag panel. For debugging only. Defaults to False.

    Raises:
        PanelNotOob: for an in-bag panel unless allowInbag is set.

    Returns:
        DrScores: the scores, mean unbiased for P(T > h) if either curve is correct.
    """
    gamma, warnings = _scores(ds, horizon, panel, "survival_probability", allowInbag)
    scores = DrScores(gamma, Estimand("survival_probability", horizon), panel.meta())
    scores.warnings.extend(warnings)
    return scores


def drScoresRmst(
    ds: SurvivalDataset, horizon: Horizon, panel: CurvePanel, allowInbag=False
) -> DrScores:
    """
    Doubly robust scores for the restricted mean survival time E[min(T, h)].

    Same as [drScoresSurvival](rdsurv.Censoring.drScoresSurvival) with the ratio S_T(h)/S_T(t)
    replaced by the conditional restricted mean m(t) and the outcome by min(y, h).
    """
    gamma, warnings = _scores(ds, horizon, panel, "rmst", allowInbag)
    scores = DrScores(gamma, Estimand("rmst", horizon), panel.meta())
    scores.warnings.extend(warnings)
    return scores


def drScores(ds, estimand: Estimand, panel, allowInbag=False) -> DrScores:
    if estimand.kind == "survival_probability":
        return drScoresSurvival(ds, estimand.horizon, panel, allowInbag)
    return drScoresRmst(ds, estimand.horizon, panel, allowInbag)


def exportScores(result, ds: SurvivalDataset, path):
    """
    Write DR scores (unit_id, z, gamma) or IPCW outcomes (unit_id, z, outcome, weight, included) to CSV.
    """
    result.toFrame(ds.z).to_csv(path, index=False)
    log.info(f"wrote {ds.n} scores to {path}")
