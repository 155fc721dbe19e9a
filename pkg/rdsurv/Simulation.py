# rdsurv : regression discontinuity estimates for censored time-to-event outcomes
#
# (c) 2026 Michel Anders (varkenvarken)
#
# License: GPL 3, see file LICENSE
#
# Version: 20261017150233

"""
Simulated discontinuity designs with censored survival times, brute force ground truth
and a Monte Carlo harness that reports coverage, RMSE, interval length and censoring bias.

All settings draw X uniform on [0,1]^10, Z uniform on [0,1] and W = 1(Z >= 0.5).

| setting | event time T                              | censoring time C                          | h  |
|---------|-------------------------------------------|-------------------------------------------|----|
| 1       | Poisson, mean X1² + X3 + 6 + 2(√X1 - 0.3) + Z² + 0.9W | uniform on [1, 15], rounded   | 7  |
| 2       | as setting 1                              | Poisson, mean 10 + log(1 + e^X3) - 1.5·1(Z >= 0.5) | 9  |
| 3       | log T = 1.8 + 0.7√X2 + 0.2X3 - 0.4√X4 - 0.5Z² + 0.75W + N(0,1) | uniform on [0, 50] | 20 |
| 4       | as setting 3                              | hazard 2t·exp(-5.75 - 0.5√X2 + 0.2X3 + 0.3√X4·Z) | 15 |

Continuous times are recorded with one decimal. An event is observed if T < C.
"""

import json
import logging
import os
from collections import Counter
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.stats import norm, poisson

from .Censoring import KINDS, Estimand
from .Dataset import Horizon, validateDataset
from .Errors import ConfigError, RdsurvError, StudyFailed
from .Forest import ForestConfig
from .Pipeline import METHODS, runPipeline

log = logging.getLogger(__name__)

SETTINGS = (1, 2, 3, 4)
DEFAULT_HORIZONS = {1: 7.0, 2: 9.0, 3: 20.0, 4: 15.0}
DIMENSION = 10
CUTOFF = 0.5
TRUTHFILE = "rdsurv.truth"
TRUTH_VERSION = 1
MAX_FAILURE_RATE = 0.05


@dataclass(frozen=True)
class DgpSetting:
    """
    One simulation setting.

    Args:
        id (int): setting 1, 2, 3 or 4.
        n (int, optional): sample size. Defaults to 5000.
        horizon (float, optional): the horizon, defaults to 7, 9, 20 or 15 by setting.
        seed (int, optional): random seed. Defaults to 0.
        censoring (bool, optional): False disables censoring. Defaults to True.
        effect_scale (float, optional): multiplies the treatment coefficient, 0 gives a null effect. Defaults to 1.
    """

    id: int
    n: int = 5000
    horizon: Optional[float] = None
    seed: int = 0
    censoring: bool = True
    effect_scale: float = 1.0

    def __post_init__(self):
        if self.id not in SETTINGS:
            raise ConfigError(f"unknown setting {self.id}, not one of {SETTINGS}")
        if self.n < 8:
            raise ConfigError("a setting needs at least 8 units")
        if self.horizon is None:
            object.__setattr__(self, "horizon", DEFAULT_HORIZONS[self.id])

    def toJSON(self):
        return asdict(self)


def _repSeed(seed, rep):
    return int(np.random.SeedSequence([seed, rep]).generate_state(1, dtype=np.uint64)[0])


def _poissonMean(x, z, w, scale):
    return x[:, 0] ** 2 + x[:, 2] + 6 + 2 * (np.sqrt(x[:, 0]) - 0.3) + z**2 + 0.9 * scale * w


def _aftLog(x, z, w, scale, noise):
    return (
        1.8
        + 0.7 * np.sqrt(x[:, 1])
        + 0.2 * x[:, 2]
        - 0.4 * np.sqrt(x[:, 3])
        - 0.5 * z**2
        + 0.75 * scale * w
        + noise
    )


def eventTimes(setting: DgpSetting, x, z, w, u):
    """
    Event times from uniform draws u, by inversion for the Poisson settings and through
    the normal quantile for the accelerated failure time settings.

    Sharing u between w = 0 and w = 1 gives coupled potential outcomes.
    """
    if setting.id in (1, 2):
        return np.maximum(poisson.ppf(u, _poissonMean(x, z, w, setting.effect_scale)), 0.0)
    return np.round(np.exp(_aftLog(x, z, w, setting.effect_scale, norm.ppf(u))), 1)


def censoringTimes(setting: DgpSetting, x, z, rng):
    n = len(z)
    if setting.id == 1:
        return np.round(rng.uniform(1, 15, n))
    if setting.id == 2:
        return rng.poisson(10 + np.log1p(np.exp(x[:, 2])) - 1.5 * (z >= CUTOFF)).astype(float)
    if setting.id == 3:
        return np.round(rng.uniform(0, 50, n), 1)
    theta = np.exp(-5.75 - 0.5 * np.sqrt(x[:, 1]) + 0.2 * x[:, 2] + 0.3 * np.sqrt(x[:, 3]) * z)
    return np.round(np.sqrt(rng.exponential(size=n) / theta), 1)


def generate(setting: DgpSetting):
    """
    Draw one dataset.

    Args:
        setting (DgpSetting): the setting.

    Returns:
        tuple: (SurvivalDataset, T) with T the complete-data event times.
    """
    rng = np.random.default_rng(setting.seed)
    x = rng.uniform(size=(setting.n, DIMENSION))
    z = rng.uniform(size=setting.n)
    w = (z >= CUTOFF).astype(float)
    T = eventTimes(setting, x, z, w, rng.uniform(size=setting.n))
    if setting.censoring:
        C = censoringTimes(setting, x, z, rng)
    else:
        C = np.full(setting.n, np.inf)
    frame = pd.DataFrame({"time": np.minimum(T, C), "event": (T < C).astype(int), "z": z})
    for j in range(DIMENSION):
        frame[f"x{j + 1}"] = x[:, j]
    return validateDataset(frame, CUTOFF), T


@dataclass
class Truth:
    """
    A brute force value of an estimand with its Monte Carlo standard error.
    """

    value: float
    se: float
    draws: int
    seed: int
    cached: bool = False

    def toJSON(self):
        return {"value": self.value, "se": self.se, "draws": self.draws, "seed": self.seed}


class TruthCache:
    """
    Truths stored in a versioned JSON file.

    Args:
        path (str, optional): the file. Defaults to RDSURV_TRUTHFILE or rdsurv.truth.
    """

    def __init__(self, path=None):
        self.path = path or os.environ.get("RDSURV_TRUTHFILE", TRUTHFILE)
        self.truths = {}
        if os.path.exists(self.path):
            with open(self.path) as f:
                content = json.load(f)
            if content.get("version") == TRUTH_VERSION:
                self.truths = content.get("truths", {})
            else:
                log.warning(f"ignoring truth file {self.path} with version {content.get('version')}")

    @staticmethod
    def key(setting: DgpSetting, kind, h, draws, seed):
        return f"{setting.id}:{setting.effect_scale:g}:{kind}:{h:g}:{draws}:{seed}"

    def get(self, key) -> Optional[Truth]:
        if key in self.truths:
            return Truth(**self.truths[key], cached=True)
        return None

    def put(self, key, truth: Truth):
        self.truths[key] = truth.toJSON()
        with open(self.path, "w") as f:
            json.dump({"version": TRUTH_VERSION, "truths": self.truths}, f, indent=2, sort_keys=True)


def computeTruth(
    setting: DgpSetting,
    estimand,
    oracle_draws=10**7,
    seed=20260101,
    batch=10**6,
    cache: TruthCache = None,
) -> Truth:
    """
    Brute force the effect at the cutoff.

    Covariates are drawn, Z is fixed at the cutoff and coupled event times are simulated with
    W = 1 and W = 0. The mean difference of 1(T > h) (or min(T, h)) is the truth.

    Args:
        setting (DgpSetting): the setting, its horizon is used unless the estimand carries one.
        estimand (Estimand or str): the estimand or its kind.
        oracle_draws (int, optional): number of draws. Defaults to 10**7.
        seed (int, optional): oracle seed. Defaults to 20260101.
        batch (int, optional): draws per batch. Defaults to 10**6.
        cache (TruthCache, optional): where to look up and store the result.

    Returns:
        Truth: value and standard error.
    """
    if isinstance(estimand, Estimand):
        kind, h = estimand.kind, estimand.h
    else:
        kind, h = estimand, setting.horizon
    if kind not in KINDS:
        raise ConfigError(f"unknown estimand {kind}, not one of {KINDS}")
    key = TruthCache.key(setting, kind, h, oracle_draws, seed)
    if cache is not None:
        truth = cache.get(key)
        if truth is not None:
            log.info(f"truth {key} from {cache.path}")
            return truth

    total = 0.0
    squares = 0.0
    done = 0
    b = 0
    while done < oracle_draws:
        m = min(batch, oracle_draws - done)
        rng = np.random.default_rng([seed, setting.id, b])
        x = rng.uniform(size=(m, 4))
        z = np.full(m, CUTOFF)
        u = rng.uniform(size=m)
        treated = eventTimes(setting, x, z, np.ones(m), u)
        control = eventTimes(setting, x, z, np.zeros(m), u)
        if kind == "survival_probability":
            d = (treated > h).astype(float) - (control > h)
        else:
            d = np.minimum(treated, h) - np.minimum(control, h)
        total += d.sum()
        squares += np.sum(d * d)
        done += m
        b += 1
    mean = total / done
    variance = max(squares / done - mean**2, 0.0)
    truth = Truth(float(mean), float(np.sqrt(variance / done)), oracle_draws, seed)
    log.info(f"truth {key} = {truth.value:.5f} ({truth.se:.2g})")
    if cache is not None:
        cache.put(key, truth)
    return truth


@dataclass
class SimReport:
    """
    Monte Carlo performance of one method on one setting and estimand.

    Coverage, RMSE and interval length are computed over completed replications only;
    failed replications are counted by error class.
    """

    setting: dict
    estimand: str
    method: str
    reps: int
    completed: int
    failures: int
    failure_reasons: dict
    coverage: float
    rmse: float
    mean_ci_length: float
    mean_estimate: float
    bias_distribution: dict
    truth: dict
    rows: pd.DataFrame = field(repr=False, default=None)
    warnings: list = field(default_factory=list)

    def toJSON(self):
        result = asdict(self)
        del result["rows"]
        return result

    def toFrame(self):
        return self.rows


def _replicate(setting, rep, kind, method, cfg, estimator, alpha):
    rs = replace(setting, seed=_repSeed(setting.seed, rep))
    row = {"rep": rep, "error": None}
    try:
        ds, T = generate(rs)
        estimand = Estimand(kind, Horizon.fromDataset(ds, rs.horizon))
        forest = replace(cfg, seed=rs.seed % 2**32)
        fit = runPipeline(ds, estimand, method, forest, estimator, alpha, complete=T, n_jobs=1).fit
        if method == "complete":
            complete = fit
        else:
            complete = runPipeline(ds, estimand, "complete", forest, estimator, alpha, complete=T).fit
    except RdsurvError as e:
        row["error"] = e.__class__.__name__
        log.info(f"replication {rep} failed: {e}")
        return row
    row.update(
        estimate=fit.estimate_bc,
        se=getattr(fit, "se_robust", None),
        ci_low=fit.ci_low,
        ci_high=fit.ci_high,
        complete_estimate=complete.estimate_bc,
        censoring_bias=fit.estimate_bc - complete.estimate_bc,
        censored=float(1 - ds.delta.mean()),
    )
    return row


def runStudy(
    setting: DgpSetting,
    estimand="survival_probability",
    method="dr",
    reps=100,
    cfg: ForestConfig = None,
    estimator=None,
    alpha=0.05,
    truth: Truth = None,
    oracle_draws=10**7,
    cache: TruthCache = None,
    n_jobs=None,
) -> SimReport:
    """
    Repeat generate and estimate and summarize the results against the truth.

    Replication r uses a seed derived from (setting.seed, r), so the report does not
    depend on n_jobs.

    Args:
        setting (DgpSetting): the setting.
        estimand (str, optional): the estimand kind. Defaults to "survival_probability".
        method (str, optional): dr, ipcw, naive or complete. Defaults to "dr".
        reps (int, optional): number of replications. Defaults to 100.
        cfg (ForestConfig, optional): forest hyperparameters. Defaults to 200 trees.
        truth (Truth, optional): the truth, computed (and cached) if None.
        n_jobs (int, optional): parallel replications. Defaults to None (sequential).

    Raises:
        StudyFailed: if more than 5% of the replications fail.

    Returns:
        SimReport: the report.
    """
    if reps < 1:
        raise ConfigError("reps must be at least 1")
    if method not in METHODS:
        raise ConfigError(f"unknown method {method}, not one of {METHODS}")
    kind = estimand.kind if isinstance(estimand, Estimand) else estimand
    cfg = cfg or ForestConfig(num_trees=200)
    if truth is None:
        truth = computeTruth(setting, kind, oracle_draws, cache=cache)

    rows = Parallel(n_jobs=n_jobs)(
        delayed(_replicate)(setting, rep, kind, method, cfg, estimator, alpha)
        for rep in range(reps)
    )
    frame = pd.DataFrame(rows)
    failed = frame["error"].notna()
    failures = int(failed.sum())
    reasons = dict(sorted(Counter(frame.loc[failed, "error"]).items()))
    if failures > MAX_FAILURE_RATE * reps:
        raise StudyFailed(f"{failures} of {reps} replications failed: {reasons}")
    ok = frame[~failed].copy()
    ok["covered"] = (ok["ci_low"] <= truth.value) & (truth.value <= ok["ci_high"])
    frame.loc[~failed, "covered"] = ok["covered"]

    bias = ok["censoring_bias"].to_numpy(dtype=float)
    estimates = ok["estimate"].to_numpy(dtype=float)
    q1, median, q3 = np.percentile(bias, [25, 50, 75])
    report = SimReport(
        setting=setting.toJSON(),
        estimand=kind,
        method=method,
        reps=reps,
        completed=len(ok),
        failures=failures,
        failure_reasons=reasons,
        coverage=float(ok["covered"].mean()),
        rmse=float(np.sqrt(np.mean((estimates - truth.value) ** 2))),
        mean_ci_length=float(np.mean(ok["ci_high"] - ok["ci_low"])),
        mean_estimate=float(estimates.mean()),
        bias_distribution={
            "median": float(median),
            "q1": float(q1),
            "q3": float(q3),
            "mean": float(bias.mean()),
        },
        truth=truth.toJSON(),
        rows=frame[
            ["rep", "estimate", "se", "ci_low", "ci_high", "covered", "censoring_bias", "error"]
        ],
    )
    if failures:
        report.warnings.append(f"{failures} replications failed: {reasons}")
        log.warning(report.warnings[-1])
    log.info(
        f"setting {setting.id} {kind} {method}: coverage {report.coverage:.3f} rmse {report.rmse:.4f}"
    )
    return report
