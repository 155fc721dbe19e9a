# rdsurv : regression discontinuity estimates for censored time-to-event outcomes
#
# (c) 2026 Michel Anders (varkenvarken)
#
# License: GPL 3, see file LICENSE
#
# Version: 20261017154840

"""
Checks to run before trusting a censoring correction.

* positivity: how likely each unit is to remain uncensored up to min(h, y), and how many
  units near the cutoff have a probability at or below a threshold.
* histograms of events and censorings over time, with the units remapped to the horizon.
* two-sample log-rank tests of a covariate split, for the event and for the censoring process.
* the share of units censored before the horizon.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from lifelines.statistics import logrank_test

from .Dataset import Horizon, SurvivalDataset
from .Errors import ConfigError, UnknownCovariate, warn
from .Survival import CurvePanel

log = logging.getLogger(__name__)

THRESHOLD = 0.05


@dataclass
class PositivityDiagnostic:
    """
    Per-unit probability of remaining uncensored, S_C(min(h, y); x, z).

    Args:
        z (ndarray): running variable.
        p_uncensored (ndarray): the probabilities.
        flagged (ndarray): p_uncensored <= threshold.
        threshold (float): the threshold.
        bandwidth (float): units with |z - c| < bandwidth count as near the cutoff.
        share_flagged_near_cutoff (float): share of flagged units among those near the cutoff.
    """

    z: np.ndarray
    p_uncensored: np.ndarray
    flagged: np.ndarray
    threshold: float
    bandwidth: float
    share_flagged_near_cutoff: float
    n_near: int
    warnings: list = field(default_factory=list)

    def toJSON(self):
        q = np.percentile(self.p_uncensored, [0, 5, 25, 50])
        return {
            "threshold": self.threshold,
            "bandwidth": self.bandwidth,
            "n_flagged": int(self.flagged.sum()),
            "n_near": self.n_near,
            "share_flagged_near_cutoff": self.share_flagged_near_cutoff,
            "p_uncensored": {
                "min": float(q[0]),
                "q05": float(q[1]),
                "q25": float(q[2]),
                "median": float(q[3]),
            },
        }

    def toFrame(self):
        return pd.DataFrame(
            {
                "unit_id": np.arange(len(self.z)),
                "z": self.z,
                "p_uncensored": self.p_uncensored,
                "flagged": self.flagged.astype(int),
            }
        )


def _uncensored(ds: SurvivalDataset, kh, panel: CurvePanel):
    return panel.censor[np.arange(ds.n), np.minimum(ds.yindex, kh)]


def positivity(
    ds: SurvivalDataset, horizon: Horizon, panel: CurvePanel, bandwidth, threshold=THRESHOLD
) -> PositivityDiagnostic:
    """
    Evaluate the positivity of censoring for every unit.

    Args:
        ds (SurvivalDataset): the dataset.
        horizon (Horizon): the horizon.
        panel (CurvePanel): conditional censoring curves.
        bandwidth (float): the estimator's bandwidth, defines "near the cutoff".
        threshold (float, optional): flag probabilities at or below this. Defaults to 0.05.

    Returns:
        PositivityDiagnostic: the diagnostic.
    """
    if not 0 < threshold < 1:
        raise ConfigError("positivity threshold must lie in (0, 1)")
    p = _uncensored(ds, horizon.gridindex, panel)
    flagged = p <= threshold
    near = np.abs(ds.z - ds.cutoff) < bandwidth
    n_near = int(near.sum())
    share = float((flagged & near).sum() / n_near) if n_near else 0.0
    diagnostic = PositivityDiagnostic(
        z=ds.z,
        p_uncensored=p,
        flagged=flagged,
        threshold=threshold,
        bandwidth=float(bandwidth),
        share_flagged_near_cutoff=share,
        n_near=n_near,
    )
    if share > 0:
        warn(
            diagnostic.warnings,
            f"{share:.1%} of units near the cutoff have a probability of remaining uncensored at or below {threshold:g}",
            log,
        )
    return diagnostic


def positivityByHorizon(
    ds: SurvivalDataset, panel: CurvePanel, horizons, bandwidth, threshold=THRESHOLD
):
    """
    Positivity summaries for a list of horizons, to find one where censoring is not yet critical.

    Returns:
        DataFrame: one row per horizon.
    """
    rows = []
    for h in horizons:
        horizon = h if isinstance(h, Horizon) else Horizon.fromDataset(ds, h)
        d = positivity(ds, horizon, panel, bandwidth, threshold)
        rows.append(
            {
                "h": horizon.h,
                "min": float(d.p_uncensored.min()),
                "q05": float(np.percentile(d.p_uncensored, 5)),
                "median": float(np.median(d.p_uncensored)),
                "share_flagged": float(d.flagged.mean()),
                "share_flagged_near_cutoff": d.share_flagged_near_cutoff,
            }
        )
    return pd.DataFrame(rows)


def eventHistogram(ds: SurvivalDataset, horizon: Horizon = None, bins=30):
    """
    Count events and censorings per time bin.

    With a horizon, units followed past h are counted separately as remapped
    and left out of the event and censoring counts.

    Args:
        ds (SurvivalDataset): the dataset.
        horizon (Horizon, optional): the horizon.
        bins (int, optional): number of equal width bins on [0, t_max]. Defaults to 30.

    Returns:
        DataFrame: columns bin_low, bin_high, events, censored, remapped.
    """
    if bins < 1:
        raise ConfigError("need at least one histogram bin")
    edges = np.linspace(0.0, max(ds.grid.tmax, np.finfo(float).tiny), bins + 1)
    past = ds.y > horizon.h if horizon is not None else np.zeros(ds.n, dtype=bool)

    def count(mask):
        return np.histogram(ds.y[mask], bins=edges)[0]

    return pd.DataFrame(
        {
            "bin_low": edges[:-1],
            "bin_high": edges[1:],
            "events": count(ds.delta & ~past),
            "censored": count(~ds.delta & ~past),
            "remapped": count(past),
        }
    )


def _split(ds: SurvivalDataset, covariate):
    try:
        values = np.asarray(ds.column(covariate), dtype=float)
    except KeyError:
        raise UnknownCovariate(f"no column '{covariate}' in the data") from None
    if np.all(np.isin(values, (0.0, 1.0))):
        return values == 1, "binary"
    median = float(np.median(values))
    return values > median, f"> {median:g}"


def _test(y, observed, group):
    result = logrank_test(
        y[group], y[~group], event_observed_A=observed[group], event_observed_B=observed[~group]
    )
    return {"statistic": float(result.test_statistic), "p_value": float(result.p_value)}


def logrankSplit(ds: SurvivalDataset, covariate, horizon: Horizon = None):
    """
    Two-sample log-rank tests between the groups of a covariate split.

    A 0/1 covariate splits on its value, any other at its median. The event test uses the
    event indicator, the censoring test the flipped indicator. With a horizon both processes
    are curtailed at h.

    Raises:
        UnknownCovariate: if the data has no such column.

    Returns:
        dict: group sizes and statistic and p-value for both processes.
    """
    group, split = _split(ds, covariate)
    if group.all() or not group.any():
        raise ConfigError(f"splitting '{covariate}' leaves an empty group")
    y, event, censor = ds.y, ds.delta, ~ds.delta
    if horizon is not None:
        within = ds.y <= horizon.h
        y = np.minimum(ds.y, horizon.h)
        event = event & within
        censor = censor & within
    result = {
        "covariate": covariate,
        "split": split,
        "n_a": int(group.sum()),
        "n_b": int((~group).sum()),
        "event": _test(y, event, group),
        "censoring": _test(y, censor, group),
    }
    log.info(
        f"log-rank {covariate} ({split}): event p={result['event']['p_value']:.3g} censoring p={result['censoring']['p_value']:.3g}"
    )
    return result


def censoringSummary(ds: SurvivalDataset, horizon: Horizon):
    """
    Share of units censored at or before the horizon, overall and on each side of the cutoff.
    """
    early = ~ds.delta & (ds.y <= horizon.h)
    right = ds.right
    summary = {
        "h": horizon.h,
        "censored_before_h": float(early.mean()),
        "censored_before_h_left": float(early[~right].mean()),
        "censored_before_h_right": float(early[right].mean()),
        "censored_overall": float((~ds.delta).mean()),
    }
    if not early.any():
        summary["note"] = "no unit is censored before the horizon, no censoring correction is needed"
    return summary
