# rdsurv : regression discontinuity estimates for censored time-to-event outcomes
#
# (c) 2026 Michel Anders (varkenvarken)
#
# License: GPL 3, see file LICENSE
#
# Version: 20261017125527

"""
The regression discontinuity step: local polynomial fits on each side of the cutoff
with a triangular kernel, a plug-in bandwidth, robust bias-corrected confidence
intervals and the fuzzy (rescaled) parameter.

Any outcome can be fed in: complete-data outcomes, doubly robust scores or IPCW outcomes
together with their weights. Estimators are looked up by name in
[ESTIMATORS](rdsurv.Estimator.ESTIMATORS) so alternatives can be plugged in.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import norm

from .Errors import (
    ConfigError,
    DegenerateRunningVariable,
    InsufficientData,
    InvalidValue,
    SingularDesign,
    WeakIdentification,
    warn,
)

log = logging.getLogger(__name__)

SIDES = ("left", "right")

# constant of the one-sided local linear MSE optimal bandwidth for the triangular kernel
TRIANGULAR_CONSTANT = 3.4375

MIN_DISTINCT_PER_SIDE = 10


def triangular(u):
    return np.maximum(1.0 - np.abs(u), 0.0)


@dataclass
class RdInput:
    """
    Outcomes around a cutoff, ready for the discontinuity estimate.

    Args:
        z (ndarray): running variable.
        outcome (ndarray): per-unit outcome.
        weight (ndarray, optional): nonnegative sample weights. Defaults to all ones.
        included (ndarray, optional): units taking part in the fit. Defaults to all.
        cutoff (float): the threshold c.
    """

    z: np.ndarray
    outcome: np.ndarray
    weight: Optional[np.ndarray] = None
    included: Optional[np.ndarray] = None
    cutoff: float = 0.0

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float)
        self.outcome = np.asarray(self.outcome, dtype=float)
        n = len(self.z)
        self.weight = (
            np.ones(n) if self.weight is None else np.asarray(self.weight, dtype=float)
        )
        self.included = (
            np.ones(n, dtype=bool)
            if self.included is None
            else np.asarray(self.included, dtype=bool)
        )
        self.cutoff = float(self.cutoff)
        if not (
            self.outcome.shape == self.weight.shape == self.included.shape == (n,)
        ):
            raise ValueError("z, outcome, weight and included must have equal length")
        if np.any(self.weight < 0):
            raise ValueError("weights must be nonnegative")
        usable = self.included & (self.weight > 0)
        if not np.all(np.isfinite(self.outcome[usable])):
            raise ValueError("outcomes of included units must be finite")

    def side(self, side):
        """
        Included units with positive weight on one side; the cutoff itself belongs to the right.
        """
        right = self.z >= self.cutoff
        return self.included & (self.weight > 0) & (right if side == "right" else ~right)

    def validate(self, order):
        """
        Raises:
            InsufficientData: if a side has fewer than order+2 distinct running variable values.
        """
        for side in SIDES:
            distinct = len(np.unique(self.z[self.side(side)]))
            if distinct < order + 2:
                raise InsufficientData(
                    f"{distinct} distinct running variable values {side} of the cutoff, need {order + 2}"
                )
        return self


@dataclass
class RdFit:
    """
    A sharp discontinuity estimate.

    Args:
        estimate (float): conventional local linear jump.
        estimate_bc (float): bias-corrected jump (local quadratic at bandwidth b).
        se_robust (float): robust standard error of estimate_bc.
        ci_low, ci_high (float): confidence interval around estimate_bc.
        bandwidth_h, bandwidth_b (float): main and bias bandwidths.
        n_eff_left, n_eff_right (int): units with positive kernel weight at bandwidth h.
        alpha (float): one minus the confidence level.
        degenerate (bool): True if all residuals are zero and the interval collapses.
    """

    estimate: float
    estimate_bc: float
    se_robust: float
    ci_low: float
    ci_high: float
    bandwidth_h: float
    bandwidth_b: float
    n_eff_left: int
    n_eff_right: int
    alpha: float = 0.05
    degenerate: bool = False
    warnings: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def toJSON(self):
        return asdict(self)

    def __str__(self):
        return (
            f"RdFit(estimate={self.estimate:.4f}, estimate_bc={self.estimate_bc:.4f}, "
            f"se={self.se_robust:.4f}, ci=[{self.ci_low:.4f}, {self.ci_high:.4f}], "
            f"h={self.bandwidth_h:.4g}, n_eff={self.n_eff_left}/{self.n_eff_right})"
        )


@dataclass
class FuzzyFit:
    """
    A fuzzy discontinuity estimate: the outcome jump rescaled by the jump in treatment.

    Args:
        itt (RdFit): the intention-to-treat fit of the outcome.
        first_stage (RdFit): the fit of the treatment indicator.
        ratio (float): itt.estimate_bc / first_stage.estimate_bc.
        se_ratio (float): delta method standard error of the ratio.
        ci_low, ci_high (float): confidence interval around the ratio.
    """

    itt: RdFit
    first_stage: RdFit
    ratio: float
    se_ratio: float
    ci_low: float
    ci_high: float
    alpha: float = 0.05
    warnings: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def estimate_bc(self):
        return self.ratio

    def toJSON(self):
        return asdict(self)

    def __str__(self):
        return (
            f"FuzzyFit(ratio={self.ratio:.4f}, se={self.se_ratio:.4f}, "
            f"ci=[{self.ci_low:.4f}, {self.ci_high:.4f}], first_stage={self.first_stage.estimate_bc:.4f})"
        )


@dataclass
class _SideFit:
    intercept: float
    weights: np.ndarray
    residuals: np.ndarray
    rows: np.ndarray


def _sideFit(data: RdInput, side, order, bandwidth) -> _SideFit:
    u = (data.z - data.cutoff) / bandwidth
    k = triangular(u) * data.weight
    rows = np.flatnonzero(data.side(side) & (k > 0))
    if len(np.unique(u[rows])) < order + 1:
        raise SingularDesign(
            f"{len(rows)} units {side} of the cutoff within bandwidth {bandwidth:.4g}, too few for order {order}"
        )
    X = np.vander(u[rows], order + 1, increasing=True)
    XtK = X.T * k[rows]
    gram = XtK @ X
    if np.linalg.cond(gram) > 1e12:
        raise SingularDesign(f"collinear design {side} of the cutoff, widen the bandwidth")
    try:
        B = np.linalg.solve(gram, XtK)
    except np.linalg.LinAlgError as e:
        raise SingularDesign(str(e)) from e
    y = data.outcome[rows]
    beta = B @ y
    residuals = y - X @ beta
    # constant outcomes are reproduced exactly
    if np.all(y == y[0]):
        beta[0] = y[0]
        residuals[:] = 0.0
    # round-off relative to the outcome scale
    residuals[np.abs(residuals) < 1e-9 * np.abs(y).max()] = 0.0
    weights = np.zeros(len(data.z))
    weights[rows] = B[0]
    full = np.zeros(len(data.z))
    full[rows] = residuals
    return _SideFit(float(beta[0]), weights, full, rows)


def localPolyFit(data: RdInput, side, order, bandwidth):
    """
    Weighted local polynomial fit at the cutoff on one side.

    The regression of outcome on (1, z-c, .., (z-c)^order) uses weights weight_i * K((z_i-c)/bandwidth)
    with the triangular kernel K(u) = max(1-|u|, 0).

    Args:
        data (RdInput): the input.
        side (str): "left" or "right".
        order (int): polynomial order, 1 or 2.
        bandwidth (float): the bandwidth.

    Raises:
        SingularDesign: if the window holds too few distinct points or the design is collinear.

    Returns:
        tuple: (intercept, weights) where weights is the linear functional on outcomes giving the intercept.
    """
    if side not in SIDES:
        raise ValueError(f"unknown side {side}")
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    fit = _sideFit(data, side, order, bandwidth)
    return fit.intercept, fit.weights


def _globalCurvature(data: RdInput, side):
    rows = data.side(side)
    dz = data.z[rows] - data.cutoff
    scale = max(np.abs(dz).max(), np.finfo(float).tiny)
    X = np.vander(dz / scale, 5, increasing=True)
    sw = np.sqrt(data.weight[rows])
    coef, *_ = np.linalg.lstsq(X * sw[:, None], data.outcome[rows] * sw, rcond=None)
    residuals = data.outcome[rows] - X @ coef
    variance = np.sum(data.weight[rows] * residuals**2) / np.sum(data.weight[rows])
    return 2.0 * coef[2] / scale**2, variance


def selectBandwidth(data: RdInput, rho=1.0):
    """
    Plug-in bandwidth for the local linear estimate.

    Second derivatives at the cutoff and residual variances come from a global quartic
    fit on each side, the density of z at the cutoff from a histogram window. They are
    combined in the one-sided local linear optimal bandwidth formula with a regularization
    term added to the squared curvature difference.

    Args:
        data (RdInput): the input.
        rho (float, optional): ratio of bias to main bandwidth. Defaults to 1.

    Raises:
        DegenerateRunningVariable: if a side has fewer than 10 distinct values of z.

    Returns:
        tuple: (bandwidth_h, bandwidth_b)
    """
    usable = data.included & (data.weight > 0)
    for side in SIDES:
        distinct = len(np.unique(data.z[data.side(side)]))
        if distinct < MIN_DISTINCT_PER_SIDE:
            raise DegenerateRunningVariable(
                f"{distinct} distinct running variable values {side} of the cutoff, need {MIN_DISTINCT_PER_SIDE}"
            )
    z = data.z[usable]
    n = len(z)
    c = data.cutoff
    m2l, s2l = _globalCurvature(data, "left")
    m2r, s2r = _globalCurvature(data, "right")

    spread = np.std(z)
    iqr = np.subtract(*np.percentile(z, [75, 25])) / 1.349
    if iqr > 0:
        spread = min(spread, iqr)
    window = 1.06 * spread * n ** (-0.2)
    density = np.sum(np.abs(z - c) <= window) / (n * 2 * window)
    zrange = z.max() - z.min()
    if density <= 0:
        density = 1.0 / zrange

    nmin = min(np.sum(data.side("left")), np.sum(data.side("right")))
    variance = s2l + s2r
    regularization = 720.0 * variance / (nmin * zrange**4)
    curvature = (m2r - m2l) ** 2 + regularization
    if variance <= 0:
        h = np.inf
    else:
        h = TRIANGULAR_CONSTANT * (variance / (density * curvature)) ** 0.2 * n ** (-0.2)

    hmax = max(c - z.min(), z.max() - c)
    hmin = max(
        np.sort(np.abs(data.z[data.side(side)] - c))[
            min(MIN_DISTINCT_PER_SIDE, np.sum(data.side(side)) - 1)
        ]
        for side in SIDES
    )
    h = float(np.clip(h, hmin, hmax))
    b = float(np.clip(rho * h, hmin, hmax))
    log.info(f"bandwidth h={h:.4g} b={b:.4g} (curvature {m2l:.4g}/{m2r:.4g}, density {density:.4g})")
    return h, b


def _fit(data: RdInput, order, alpha, h, b):
    """
    Conventional and bias-corrected jump at given bandwidths.

    Returns:
        tuple: (RdFit, per-unit variance weights, per-unit residuals of the bias-corrected fit)
    """
    left = _sideFit(data, "left", order, h)
    right = _sideFit(data, "right", order, h)
    leftbc = _sideFit(data, "left", order + 1, b)
    rightbc = _sideFit(data, "right", order + 1, b)

    signed = rightbc.weights - leftbc.weights
    varweights = signed**2
    for fit in (leftbc, rightbc):
        m = len(fit.rows)
        if m > order + 2:
            varweights[fit.rows] *= m / (m - (order + 2))
    residuals = leftbc.residuals + rightbc.residuals
    se = float(np.sqrt(np.sum(varweights * residuals**2)))

    estimate_bc = rightbc.intercept - leftbc.intercept
    q = norm.ppf(1 - alpha / 2)
    fit = RdFit(
        estimate=right.intercept - left.intercept,
        estimate_bc=estimate_bc,
        se_robust=se,
        ci_low=estimate_bc - q * se,
        ci_high=estimate_bc + q * se,
        bandwidth_h=float(h),
        bandwidth_b=float(b),
        n_eff_left=len(left.rows),
        n_eff_right=len(right.rows),
        alpha=alpha,
        degenerate=se == 0,
    )
    if fit.degenerate:
        warn(fit.warnings, "all residuals are zero, the confidence interval is degenerate", log)
    return fit, varweights, residuals


def rdEstimate(data: RdInput, order=1, alpha=0.05, bandwidth=None, rho=1.0) -> RdFit:
    """
    Estimate the discontinuity at the cutoff with robust bias-corrected inference.

    The conventional estimate is the difference of local linear intercepts at bandwidth h.
    The bias-corrected estimate repeats this at order 2 and bandwidth b. Its standard error
    uses the order 2 outcome weights and squared local residuals.

    Args:
        data (RdInput): the input.
        order (int, optional): order of the conventional fit. Defaults to 1.
        alpha (float, optional): one minus the confidence level. Defaults to 0.05.
        bandwidth (float, optional): fixed main bandwidth, selected from the data if None.
        rho (float, optional): ratio b/h. Defaults to 1.

    Raises:
        InsufficientData: if a side has too few distinct running variable values.
        SingularDesign: if a local fit is not identified.

    Returns:
        RdFit: the fit.
    """
    if not 0 < alpha < 0.5:
        raise ConfigError("alpha must lie in (0, 0.5)")
    data.validate(order + 1)
    if bandwidth is None:
        h, b = selectBandwidth(data, rho)
    else:
        h, b = float(bandwidth), float(rho * bandwidth)
    fit, _, _ = _fit(data, order, alpha, h, b)
    return fit


def fuzzyEstimate(
    outcome_input: RdInput,
    treatment_input: RdInput,
    min_first_stage=0.02,
    order=1,
    alpha=0.05,
    bandwidth=None,
    rho=1.0,
) -> FuzzyFit:
    """
    Estimate the fuzzy discontinuity parameter, the outcome jump divided by the treatment jump.

    Both jumps use the bandwidth selected on the outcome equation. The standard error of the
    ratio follows from the delta method with the joint covariance of the two jumps.

    Args:
        outcome_input (RdInput): outcomes.
        treatment_input (RdInput): treatment indicators (0/1) with the same z, weights and cutoff.
        min_first_stage (float, optional): smallest admissible absolute treatment jump. Defaults to 0.02.

    Raises:
        WeakIdentification: if the treatment jump is smaller than min_first_stage in absolute value.

    Returns:
        FuzzyFit: the fit.
    """
    if not (
        np.array_equal(outcome_input.z, treatment_input.z)
        and np.array_equal(outcome_input.weight, treatment_input.weight)
        and np.array_equal(outcome_input.included, treatment_input.included)
        and outcome_input.cutoff == treatment_input.cutoff
    ):
        raise ValueError("outcome and treatment inputs must share z, weights and cutoff")
    w = treatment_input.outcome[treatment_input.included]
    bad = np.flatnonzero((w != 0) & (w != 1))
    if len(bad):
        raise InvalidValue(int(bad[0]), "w", "treatment must be 0 or 1")
    if not 0 < alpha < 0.5:
        raise ConfigError("alpha must lie in (0, 0.5)")
    outcome_input.validate(order + 1)
    if bandwidth is None:
        h, b = selectBandwidth(outcome_input, rho)
    else:
        h, b = float(bandwidth), float(rho * bandwidth)
    itt, varweights, ra = _fit(outcome_input, order, alpha, h, b)
    first, _, rb = _fit(treatment_input, order, alpha, h, b)
    p = first.estimate_bc
    if abs(p) < min_first_stage:
        raise WeakIdentification(
            f"jump in treatment probability {p:.4f} is below {min_first_stage}, the fuzzy parameter is not identified"
        )
    ratio = itt.estimate_bc / p
    va = np.sum(varweights * ra * ra)
    vb = np.sum(varweights * rb * rb)
    cab = np.sum(varweights * ra * rb)
    se = float(np.sqrt(max(va - 2 * ratio * cab + ratio**2 * vb, 0.0)) / abs(p))
    q = norm.ppf(1 - alpha / 2)
    fit = FuzzyFit(
        itt=itt,
        first_stage=first,
        ratio=ratio,
        se_ratio=se,
        ci_low=ratio - q * se,
        ci_high=ratio + q * se,
        alpha=alpha,
    )
    fit.warnings.extend(itt.warnings)
    return fit


class RdEstimator(ABC):
    """
    Interface of a discontinuity estimator.

    Subclasses implement estimate() and may implement estimateFuzzy().
    """

    name = None

    @abstractmethod
    def estimate(self, data: RdInput, alpha=0.05) -> RdFit:
        ...

    def estimateFuzzy(
        self, outcome_input: RdInput, treatment_input: RdInput, alpha=0.05, min_first_stage=0.02
    ) -> FuzzyFit:
        raise NotImplementedError(f"{self.name} has no fuzzy estimate")

    def toJSON(self):
        return {"name": self.name}


class RobustLocalPolynomial(RdEstimator):
    """
    Local linear estimate with a local quadratic bias correction and robust standard errors.

    Args:
        order (int, optional): order of the conventional fit. Defaults to 1.
        rho (float, optional): ratio of bias to main bandwidth. Defaults to 1.
        bandwidth (float, optional): a fixed main bandwidth. Defaults to None (plug-in).
    """

    name = "robust"

    def __init__(self, order=1, rho=1.0, bandwidth=None):
        self.order = order
        self.rho = rho
        self.bandwidth = bandwidth

    def estimate(self, data, alpha=0.05):
        return rdEstimate(data, self.order, alpha, self.bandwidth, self.rho)

    def estimateFuzzy(self, outcome_input, treatment_input, alpha=0.05, min_first_stage=0.02):
        return fuzzyEstimate(
            outcome_input,
            treatment_input,
            min_first_stage,
            self.order,
            alpha,
            self.bandwidth,
            self.rho,
        )

    def toJSON(self):
        return {
            "name": self.name,
            "order": self.order,
            "rho": self.rho,
            "bandwidth": self.bandwidth,
        }


ESTIMATORS = {RobustLocalPolynomial.name: RobustLocalPolynomial}


def getEstimator(name="robust", **kwargs) -> RdEstimator:
    """
    Instantiate a registered estimator by name.

    Raises:
        ConfigError: for an unknown name.
    """
    if name not in ESTIMATORS:
        raise ConfigError(f"unknown estimator {name}, not one of {sorted(ESTIMATORS)}")
    return ESTIMATORS[name](**kwargs)
