# rdsurv : regression discontinuity estimates for censored time-to-event outcomes
#
# (c) 2026 Michel Anders (varkenvarken)
#
# License: GPL 3, see file LICENSE
#
# Version: 20261017141922

"""
From a censored dataset to a discontinuity estimate.

| method   | outcome fed to the estimator                                        |
|----------|---------------------------------------------------------------------|
| dr       | doubly robust scores from out-of-bag forest curves                  |
| ipcw     | 1(y > h) or min(y, h) of uncensored units, weighted by 1/S_C        |
| naive    | 1(y > h) or min(y, h) of all units, censoring ignored               |
| complete | the same outcomes computed from the true event times (simulation)   |
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .Censoring import Estimand, drScores, ipcwTransform
from .Dataset import SurvivalDataset
from .Errors import ConfigError
from .Estimator import RdEstimator, RdInput, getEstimator
from .Forest import ForestConfig, fitSurvivalForest, predictOobCurves
from .Survival import CurvePanel

log = logging.getLogger(__name__)

METHODS = ("dr", "ipcw", "naive", "complete")


@dataclass
class PipelineResult:
    """
    Args:
        fit (RdFit or FuzzyFit): the estimate.
        method (str): the censoring correction used.
        estimand (Estimand): the estimand.
        rdinput (RdInput): what was passed to the estimator.
        artifact: the DrScores or IpcwResult behind the outcomes, if any.
        panel (CurvePanel): the out-of-bag panel for method dr.
    """

    fit: Any
    method: str
    estimand: Estimand
    rdinput: RdInput
    artifact: Any = None
    panel: Optional[CurvePanel] = None
    warnings: list = field(default_factory=list)

    def toJSON(self):
        result = self.fit.toJSON()
        result["method"] = self.method
        result["estimand"] = self.estimand.toJSON()
        if self.panel is not None:
            result["panel"] = self.panel.meta()
        return result


def fitPanel(ds: SurvivalDataset, cfg: ForestConfig = None, n_jobs=None) -> CurvePanel:
    """
    Fit the event and censoring forests and predict out-of-bag curves for every unit.
    """
    forest_t = fitSurvivalForest(ds, "event", cfg, n_jobs)
    forest_c = fitSurvivalForest(ds, "censoring", cfg, n_jobs)
    panel = predictOobCurves(forest_t, forest_c, ds)
    panel.warnings[:0] = forest_t.warnings + forest_c.warnings
    return panel


def buildInput(
    ds: SurvivalDataset,
    estimand: Estimand,
    method="dr",
    panel: CurvePanel = None,
    complete=None,
    floor=0.05,
):
    """
    Construct the estimator input for a censoring correction.

    Args:
        ds (SurvivalDataset): the dataset.
        estimand (Estimand): the estimand.
        method (str, optional): one of METHODS. Defaults to "dr".
        panel (CurvePanel, optional): out-of-bag curves, required for method dr.
        complete (ndarray, optional): true event times, required for method complete.
        floor (float, optional): clamp of the censoring curve for method ipcw. Defaults to 0.05.

    Returns:
        tuple: (RdInput, artifact) where artifact is the DrScores, the IpcwResult or None.
    """
    if method == "dr":
        if panel is None:
            raise ValueError("method dr needs a curve panel")
        scores = drScores(ds, estimand, panel)
        return RdInput(ds.z, scores.gamma, cutoff=ds.cutoff), scores
    if method == "ipcw":
        ipcw = ipcwTransform(ds, estimand, floor=floor)
        return (
            RdInput(ds.z, ipcw.outcome, ipcw.weight, ipcw.included, ds.cutoff),
            ipcw,
        )
    if method == "naive":
        return RdInput(ds.z, estimand.outcome(ds.y), cutoff=ds.cutoff), None
    if method == "complete":
        if complete is None:
            raise ConfigError("method complete needs the true event times")
        return RdInput(ds.z, estimand.outcome(complete), cutoff=ds.cutoff), None
    raise ConfigError(f"unknown method {method}, not one of {METHODS}")


def runPipeline(
    ds: SurvivalDataset,
    estimand: Estimand,
    method="dr",
    cfg: ForestConfig = None,
    estimator: RdEstimator = None,
    alpha=0.05,
    complete=None,
    panel: CurvePanel = None,
    min_first_stage=0.02,
    n_jobs=None,
) -> PipelineResult:
    """
    Run one censoring correction and the discontinuity estimate.

    A fuzzy dataset gets a fuzzy estimate with the treatment indicator as second outcome,
    sharing the weights and inclusion flags of the outcome equation.

    Args:
        ds (SurvivalDataset): the dataset.
        estimand (Estimand): the estimand.
        method (str, optional): one of METHODS. Defaults to "dr".
        cfg (ForestConfig, optional): forest hyperparameters for method dr.
        estimator (RdEstimator, optional): the estimator. Defaults to the robust local linear one.
        alpha (float, optional): one minus the confidence level. Defaults to 0.05.
        complete (ndarray, optional): true event times for method complete.
        panel (CurvePanel, optional): a precomputed out-of-bag panel, skips forest fitting.
        n_jobs (int, optional): threads for forest fitting.

    Returns:
        PipelineResult: the estimate and everything it was built from.
    """
    if method not in METHODS:
        raise ConfigError(f"unknown method {method}, not one of {METHODS}")
    cfg = cfg or ForestConfig()
    estimator = estimator or getEstimator()
    warnings = list(estimand.horizon.warnings)
    if method == "dr" and panel is None:
        panel = fitPanel(ds, cfg, n_jobs)
    if panel is not None:
        warnings.extend(panel.warnings)

    rdinput, artifact = buildInput(ds, estimand, method, panel, complete, cfg.censor_floor)
    if artifact is not None:
        warnings.extend(artifact.warnings)

    if ds.design == "fuzzy":
        treatment = RdInput(
            rdinput.z, ds.w.astype(float), rdinput.weight, rdinput.included, rdinput.cutoff
        )
        fit = estimator.estimateFuzzy(rdinput, treatment, alpha, min_first_stage)
    else:
        fit = estimator.estimate(rdinput, alpha)
    warnings.extend(fit.warnings)
    fit.meta.update(
        {
            "method": method,
            "estimand": estimand.kind,
            "horizon": estimand.h,
            "estimator": estimator.toJSON(),
        }
    )
    log.info(f"{method} {estimand}: {fit}")
    return PipelineResult(
        fit=fit,
        method=method,
        estimand=estimand,
        rdinput=rdinput,
        artifact=artifact,
        panel=panel if method == "dr" else None,
        warnings=warnings,
    )
