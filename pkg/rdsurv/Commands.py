# rdsurv : regression discontinuity estimates for censored time-to-event outcomes
#
# (c) 2026 Michel Anders (varkenvarken)
#
# License: GPL 3, see file LICENSE
#
# Version: 20261017165302

"""
The sub-commands of the command line.

Each takes a resolved [RunConfig](rdsurv.Utils.RunConfig), writes its CSV companions
and returns the result object and the warnings that go into the result JSON.
"""

import logging

import numpy as np
import pandas as pd

from .Censoring import Estimand, exportScores
from .Dataset import Horizon, readCsv, suggestHorizon, validateDataset
from .Diagnostics import (
    censoringSummary,
    eventHistogram,
    logrankSplit,
    positivity,
    positivityByHorizon,
)
from .Errors import EstimationError
from .Estimator import RdInput, getEstimator, selectBandwidth
from .Pipeline import fitPanel, runPipeline
from .Simulation import DgpSetting, TruthCache, runStudy
from .Survival import exportCurves
from .Utils import RunConfig

log = logging.getLogger(__name__)


def loadDataset(cfg: RunConfig):
    return validateDataset(readCsv(cfg.input_path), cfg.cutoff, cfg.design, cfg.binwidth)


def resolveHorizon(ds, cfg: RunConfig) -> Horizon:
    if cfg.horizon is None:
        return suggestHorizon(ds, cfg.horizon_quantile)
    return Horizon.fromDataset(ds, cfg.horizon)


def _bandwidth(fit):
    return fit.bandwidth_h if hasattr(fit, "bandwidth_h") else fit.itt.bandwidth_h


def runEstimate(cfg: RunConfig):
    """
    Estimate the effect at the cutoff with the configured censoring correction.

    For method dr the result includes a positivity summary of the units within the bandwidth.
    """
    ds = loadDataset(cfg)
    horizon = resolveHorizon(ds, cfg)
    estimand = Estimand(cfg.estimand, horizon)
    estimator = getEstimator(cfg.estimator, rho=cfg.rho)
    result = runPipeline(
        ds,
        estimand,
        cfg.method,
        cfg.forest,
        estimator,
        cfg.alpha,
        min_first_stage=cfg.min_first_stage,
        n_jobs=cfg.threads,
    )
    warnings = list(result.warnings)
    if cfg.scores_path is not None and result.artifact is not None:
        exportScores(result.artifact, ds, cfg.scores_path)
    output = result.toJSON()
    output.update({"n": ds.n, "design": ds.design, "cutoff": ds.cutoff, "horizon": horizon.toJSON()})
    if result.panel is not None:
        check = positivity(ds, horizon, result.panel, _bandwidth(result.fit), cfg.threshold)
        output["positivity"] = check.toJSON()
        warnings.extend(check.warnings)
    return output, warnings


def runDiagnose(cfg: RunConfig):
    """
    Positivity, event and censoring histograms, censoring rates and optional log-rank tests.

    "Near the cutoff" uses the bandwidth selected for the uncorrected outcomes.
    """
    ds = loadDataset(cfg)
    horizon = resolveHorizon(ds, cfg)
    warnings = list(horizon.warnings)
    panel = fitPanel(ds, cfg.forest, cfg.threads)
    warnings.extend(panel.warnings)
    outcome = Estimand("survival_probability", horizon).outcome(ds.y)
    bandwidth, _ = selectBandwidth(RdInput(ds.z, outcome, cutoff=ds.cutoff))

    check = positivity(ds, horizon, panel, bandwidth, cfg.threshold)
    warnings.extend(check.warnings)
    histogram = eventHistogram(ds, horizon, cfg.bins)
    output = {
        "n": ds.n,
        "horizon": horizon.toJSON(),
        "positivity": check.toJSON(),
        "histogram": histogram.to_dict(orient="records"),
        "censoring": censoringSummary(ds, horizon),
    }
    if cfg.split is not None:
        output["logrank"] = logrankSplit(ds, cfg.split, horizon)
    byhorizon = None
    if cfg.horizons:
        byhorizon = positivityByHorizon(ds, panel, cfg.horizons, bandwidth, cfg.threshold)
        output["positivity_by_horizon"] = byhorizon.to_dict(orient="records")
    if cfg.csv_path is not None:
        histogram.to_csv(f"{cfg.csv_path}.histogram.csv", index=False)
        check.toFrame().to_csv(f"{cfg.csv_path}.positivity.csv", index=False)
        if byhorizon is not None:
            byhorizon.to_csv(f"{cfg.csv_path}.byhorizon.csv", index=False)
    return output, warnings


def runCurves(cfg: RunConfig):
    """
    Fit both forests and export the out-of-bag curves.
    """
    ds = loadDataset(cfg)
    panel = fitPanel(ds, cfg.forest, cfg.threads)
    if cfg.csv_path is not None:
        exportCurves(panel, cfg.csv_path)
    output = panel.meta()
    output.update(
        {
            "n": ds.n,
            "t": ds.grid.points.tolist(),
            "mean_event": panel.event[:, 1:].mean(axis=0).tolist(),
            "mean_censor": panel.censor[:, 1:].mean(axis=0).tolist(),
        }
    )
    return output, list(panel.warnings)


def runSweep(cfg: RunConfig):
    """
    IPCW and DR estimates side by side for a list of horizons, from one pair of forests.

    A horizon where an estimate fails gets a row with the error instead.
    """
    ds = loadDataset(cfg)
    panel = fitPanel(ds, cfg.forest, cfg.threads)
    warnings = list(panel.warnings)
    estimator = getEstimator(cfg.estimator, rho=cfg.rho)
    rows = []
    for h in cfg.horizons:
        horizon = Horizon.fromDataset(ds, h)
        estimand = Estimand(cfg.estimand, horizon)
        censored = censoringSummary(ds, horizon)["censored_before_h"]
        for method in ("ipcw", "dr"):
            row = {"h": horizon.h, "method": method, "censored_before_h": censored}
            try:
                fit = runPipeline(
                    ds,
                    estimand,
                    method,
                    cfg.forest,
                    estimator,
                    cfg.alpha,
                    panel=panel if method == "dr" else None,
                    min_first_stage=cfg.min_first_stage,
                ).fit
            except EstimationError as e:
                warnings.append(f"h={horizon.h:g} {method}: {e}")
                log.warning(warnings[-1])
                row["error"] = e.__class__.__name__
            else:
                row.update(
                    estimate=fit.estimate_bc,
                    ci_low=fit.ci_low,
                    ci_high=fit.ci_high,
                    error=None,
                )
            rows.append(row)
    frame = pd.DataFrame(rows)
    if cfg.csv_path is not None:
        frame.to_csv(cfg.csv_path, index=False)
    return {"estimand": cfg.estimand, "rows": frame.replace({np.nan: None}).to_dict(orient="records")}, warnings


def runSimulate(cfg: RunConfig):
    """
    Run a Monte Carlo study of one setting and method.
    """
    setting = DgpSetting(cfg.setting, cfg.n, cfg.horizon, cfg.seed, cfg.censoring, cfg.effect_scale)
    report = runStudy(
        setting,
        cfg.estimand,
        cfg.method,
        cfg.reps,
        cfg.forest,
        getEstimator(cfg.estimator, rho=cfg.rho),
        cfg.alpha,
        oracle_draws=cfg.oracle_draws,
        cache=TruthCache(cfg.truthfile),
        n_jobs=cfg.threads,
    )
    if cfg.csv_path is not None:
        report.toFrame().to_csv(cfg.csv_path, index=False)
    return report.toJSON(), report.warnings


RUNNERS = {
    "estimate": runEstimate,
    "diagnose": runDiagnose,
    "curves": runCurves,
    "sweep": runSweep,
    "simulate": runSimulate,
}
