# rdsurv : regression discontinuity estimates for censored time-to-event outcomes
#
# (c) 2026 Michel Anders (varkenvarken)
#
# License: GPL 3, see file LICENSE
#
# Version: 20261017113048

"""
Random survival forests with log-rank splitting and out-of-bag prediction.

Each tree is grown on a subsample drawn without replacement. Nodes split on the
features (X, Z) at the midpoint between sorted distinct values, choosing the split
that maximizes the two-sample log-rank statistic. Leaves hold Kaplan-Meier curves on
the dataset grid.

Example:
    ```python
    cfg = ForestConfig(num_trees=200, seed=7)
    forest_t = fitSurvivalForest(ds, "event", cfg)
    forest_c = fitSurvivalForest(ds, "censoring", cfg)
    panel = predictOobCurves(forest_t, forest_c, ds)
    ```

!!! note
    The randomness of tree k only depends on (seed, k) and results are gathered in
    tree order, so forests and predictions do not depend on the number of threads.
"""

import logging
from dataclasses import asdict, dataclass
from math import ceil, sqrt
from typing import Optional

import numpy as np
from joblib import Parallel, delayed

from .Dataset import SurvivalDataset
from .Errors import ConfigError, NoOobTrees, warn
from .Survival import CurvePanel, checkCurves, productLimit

log = logging.getLogger(__name__)

TARGETS = ("event", "censoring")


@dataclass
class ForestConfig:
    """
    Hyperparameters of a random survival forest.

    Args:
        num_trees (int): number of trees. Defaults to 500.
        mtry (int, optional): features tried per split, defaults to ceil(sqrt(d+1)).
        min_node_size (int): minimum number of units in each child of a split. Defaults to 15.
        subsample_fraction (float): share of units each tree is grown on. Defaults to 0.5.
        seed (int): seed of the per-tree random streams. Defaults to 42.
        censor_floor (float): lower clamp of conditional censoring curves. Defaults to 0.05.
    """

    num_trees: int = 500
    mtry: Optional[int] = None
    min_node_size: int = 15
    subsample_fraction: float = 0.5
    seed: int = 42
    censor_floor: float = 0.05

    def resolvedMtry(self, p):
        return self.mtry if self.mtry is not None else int(ceil(sqrt(p)))

    def validate(self, d=None):
        """
        Check the configuration, optionally against a covariate dimension d.

        Raises:
            ConfigError: if a value is out of range.
        """
        if self.num_trees < 1:
            raise ConfigError("num_trees must be positive")
        if self.mtry is not None and (
            self.mtry < 1 or (d is not None and self.mtry > d + 1)
        ):
            raise ConfigError("mtry must lie in [1, d+1]")
        if self.min_node_size < 1:
            raise ConfigError("min_node_size must be positive")
        if not 0 < self.subsample_fraction <= 1:
            raise ConfigError("subsample_fraction must lie in (0, 1]")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a nonnegative 64-bit integer")
        if not 0 < self.censor_floor < 0.5:
            raise ConfigError("censor_floor must lie in (0, 0.5)")
        return self

    def toJSON(self):
        return asdict(self)


def logrankSplits(values, index, indicator, minsize):
    """
    Log-rank statistics of all admissible splits of a node on one feature.

    Args:
        values (ndarray): feature values of the units in the node.
        index (ndarray): grid index of their observed times.
        indicator (ndarray): True where the process of interest was observed.
        minsize (int): minimum number of units in each child.

    Returns:
        tuple: (statistics, thresholds), one entry per admissible split, possibly empty.
    """
    m = len(values)
    order = np.argsort(values, kind="stable")
    v = values[order]
    sizes = np.arange(minsize, m - minsize + 1)
    sizes = sizes[v[sizes - 1] < v[sizes]]
    eventtimes = np.unique(index[indicator])
    if len(sizes) == 0 or len(eventtimes) == 0:
        return np.empty(0), np.empty(0)

    idx = index[order][:, None]
    atrisk = idx >= eventtimes[None, :]
    events = (idx == eventtimes[None, :]) & indicator[order][:, None]
    n = atrisk.sum(axis=0).astype(float)
    d = events.sum(axis=0).astype(float)
    nl = np.cumsum(atrisk, axis=0)[sizes - 1].astype(float)
    dl = np.cumsum(events, axis=0)[sizes - 1].astype(float)

    expected = nl * d / n
    share = nl / n
    spread = np.where(n > 1, d * (n - d) / np.maximum(n - 1, 1), 0.0)
    u = (dl - expected).sum(axis=1)
    var = (share * (1 - share) * spread).sum(axis=1)
    stat = np.zeros(len(sizes))
    np.divide(u * u, var, out=stat, where=var > 0)
    return stat, (v[sizes - 1] + v[sizes]) / 2


class SurvivalTree:
    """
    A fitted survival tree.

    Internal nodes have feature >= 0, leaves have feature == -1 and an index into curves.

    Args:
        feature, threshold, left, right, leaf (ndarray): node arrays.
        curves (ndarray): leaf Kaplan-Meier curves, shape (leaves, gridpoints+1).
        rows (ndarray): the dataset rows the tree was grown on.
    """

    def __init__(self, feature, threshold, left, right, leaf, curves, rows):
        self.feature = np.asarray(feature, dtype=int)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=int)
        self.right = np.asarray(right, dtype=int)
        self.leaf = np.asarray(leaf, dtype=int)
        self.curves = curves
        self.rows = rows

    @property
    def nodes(self):
        return len(self.feature)

    @property
    def leaves(self):
        return len(self.curves)

    def apply(self, features):
        """
        Return the leaf index every row of features falls in.
        """
        node = np.zeros(len(features), dtype=int)
        while True:
            active = np.flatnonzero(self.feature[node] >= 0)
            if len(active) == 0:
                break
            current = node[active]
            goleft = (
                features[active, self.feature[current]] <= self.threshold[current]
            )
            node[active] = np.where(goleft, self.left[current], self.right[current])
        return self.leaf[node]


def growTree(features, index, indicator, size, rows, cfg: ForestConfig, rng, split=True):
    """
    Grow a single survival tree on the given rows.

    Args:
        features (ndarray): split features of all units.
        index (ndarray): grid index of the observed time of all units.
        indicator (ndarray): process indicator of all units.
        size (int): number of grid points.
        rows (ndarray): rows of the subsample.
        cfg (ForestConfig): hyperparameters.
        rng (Generator): the random stream of this tree.
        split (bool, optional): if False the tree is a single leaf. Defaults to True.

    Returns:
        SurvivalTree: the tree.
    """
    p = features.shape[1]
    mtry = min(cfg.resolvedMtry(p), p)
    feature, threshold, left, right, leaf, curves = [], [], [], [], [], []

    def newNode():
        for a in (feature, left, right, leaf):
            a.append(-1)
        threshold.append(np.nan)
        return len(feature) - 1

    stack = [(newNode(), rows)]
    while stack:
        node, members = stack.pop()
        best = None
        if split and len(members) >= 2 * cfg.min_node_size and indicator[members].any():
            for f in rng.choice(p, mtry, replace=False):
                stat, cuts = logrankSplits(
                    features[members, f],
                    index[members],
                    indicator[members],
                    cfg.min_node_size,
                )
                if len(stat):
                    k = int(np.argmax(stat))
                    if stat[k] > 0 and (best is None or stat[k] > best[0]):
                        best = (stat[k], int(f), cuts[k])
        if best is None:
            leaf[node] = len(curves)
            curves.append(productLimit(index[members], indicator[members], size))
            continue
        _, f, cut = best
        goleft = features[members, f] <= cut
        feature[node] = f
        threshold[node] = cut
        left[node] = newNode()
        right[node] = newNode()
        stack.append((right[node], members[~goleft]))
        stack.append((left[node], members[goleft]))

    return SurvivalTree(feature, threshold, left, right, leaf, np.array(curves), rows)


class SurvivalForest:
    """
    A fitted random survival forest for either the event or the censoring process.

    Args:
        trees (list): the SurvivalTree instances, in tree order.
        inbag (ndarray): boolean matrix (trees, units), True if a unit was in the tree's subsample.
        grid (TimeGrid): the grid the leaf curves live on.
        target (str): "event" or "censoring".
        cfg (ForestConfig): the hyperparameters used.
    """

    def __init__(self, trees, inbag, grid, target, cfg):
        self.trees = trees
        self.inbag = inbag
        self.grid = grid
        self.target = target
        self.cfg = cfg
        self.warnings = []

    def __len__(self):
        return len(self.trees)

    def accumulate(self, features, oob=True):
        """
        Sum leaf curves over trees.

        Args:
            features (ndarray): split features of the units the forest was fitted on.
            oob (bool, optional): only use trees whose subsample excludes the unit. Defaults to True.

        Returns:
            tuple: (sums of shape (n, gridpoints+1), number of contributing trees per unit)
        """
        n = len(features)
        sums = np.zeros((n, len(self.grid) + 1))
        counts = np.zeros(n, dtype=int)
        for t, tree in enumerate(self.trees):
            units = np.flatnonzero(~self.inbag[t]) if oob else np.arange(n)
            if len(units) == 0:
                continue
            assert not oob or not self.inbag[t, units].any()
            sums[units] += tree.curves[tree.apply(features[units])]
            counts[units] += 1
        return sums, counts

    def predict(self, features):
        """
        Average the leaf curves of all trees for arbitrary units.

        Returns:
            ndarray: monotone curves of shape (n, gridpoints+1).
        """
        sums, counts = self.accumulate(np.asarray(features, dtype=float), oob=False)
        return _monotone(sums / counts[:, None])

    def __str__(self):
        leaves = sum(t.leaves for t in self.trees)
        return f"SurvivalForest(target={self.target}, trees={len(self)}, leaves={leaves})"


def _monotone(curves):
    curves = np.minimum.accumulate(np.clip(curves, 0.0, 1.0), axis=1)
    checkCurves(curves)
    return curves


def _growOne(t, features, index, indicator, size, n, samplesize, cfg, split):
    rng = np.random.default_rng([cfg.seed, t])
    rows = np.sort(rng.choice(n, samplesize, replace=False))
    return growTree(features, index, indicator, size, rows, cfg, rng, split=split)


def fitSurvivalForest(
    ds: SurvivalDataset, target="event", cfg: ForestConfig = None, n_jobs=None
) -> SurvivalForest:
    """
    Fit a random survival forest to the event or the censoring process.

    For the censoring process the indicator is flipped to 1 - delta.

    Args:
        ds (SurvivalDataset): the dataset.
        target (str, optional): "event" or "censoring". Defaults to "event".
        cfg (ForestConfig, optional): hyperparameters. Defaults to ForestConfig().
        n_jobs (int, optional): number of threads, None for one. The result does not depend on it.

    Returns:
        SurvivalForest: the fitted forest.

    !!! note
        If all units share one distinct time no split is possible; every tree is then a
        single leaf and a warning is recorded on the forest.
    """
    if target not in TARGETS:
        raise ConfigError(f"unknown target {target}, not one of {TARGETS}")
    cfg = (cfg or ForestConfig()).validate(ds.d)
    indicator = np.asarray(ds.delta if target == "event" else ~ds.delta)
    features = ds.features()
    index = np.asarray(ds.yindex)
    samplesize = max(1, int(round(cfg.subsample_fraction * ds.n)))
    split = len(np.unique(ds.y)) > 1

    trees = Parallel(n_jobs=n_jobs, backend="threading")(
        delayed(_growOne)(
            t, features, index, indicator, len(ds.grid), ds.n, samplesize, cfg, split
        )
        for t in range(cfg.num_trees)
    )
    inbag = np.zeros((cfg.num_trees, ds.n), dtype=bool)
    for t, tree in enumerate(trees):
        inbag[t, tree.rows] = True

    forest = SurvivalForest(trees, inbag, ds.grid, target, cfg)
    if not split:
        warn(
            forest.warnings,
            f"DegenerateData: all units share one observed time, the {target} forest has single-leaf trees",
            log,
        )
    log.info(f"fitted {forest}")
    return forest


def predictOobCurves(
    forest_t: SurvivalForest, forest_c: SurvivalForest, ds: SurvivalDataset
) -> CurvePanel:
    """
    Out-of-bag conditional event and censoring curves for every unit.

    The curve of unit i averages the leaf curves of exactly those trees whose subsample
    excludes i, and is then made monotone by a running minimum. Censoring curves are
    clamped below at the forest's censor_floor.

    A unit that is in every subsample is predicted with the full forest instead; it is
    recorded in the panel's inbag list and a warning is issued.

    Args:
        forest_t (SurvivalForest): forest fitted to the event process.
        forest_c (SurvivalForest): forest fitted to the censoring process.
        ds (SurvivalDataset): the dataset both forests were fitted on.

    Returns:
        CurvePanel: the out-of-bag panel.
    """
    if forest_t.target != "event" or forest_c.target != "censoring":
        raise ValueError("expected an event forest and a censoring forest")
    if forest_t.inbag.shape[1] != ds.n or forest_c.inbag.shape[1] != ds.n:
        raise ValueError("forests were not fitted on this dataset")
    features = ds.features()
    warnings = []
    inbag = set()
    curves = []
    for forest in (forest_t, forest_c):
        sums, counts = forest.accumulate(features, oob=True)
        missing = np.flatnonzero(counts == 0)
        if len(missing):
            warn(
                warnings,
                f"{NoOobTrees.__name__}: {len(missing)} units are in every {forest.target} tree's subsample, predicting them in-bag",
                log,
            )
            fsums, fcounts = forest.accumulate(features[missing], oob=False)
            sums[missing] = fsums
            counts[missing] = fcounts
            inbag.update(missing.tolist())
        curves.append(_monotone(sums / counts[:, None]))
    floor = forest_c.cfg.censor_floor
    panel = CurvePanel(
        ds.grid,
        curves[0],
        np.maximum(curves[1], floor),
        oob=True,
        censorfloor=floor,
        inbag=sorted(inbag),
    )
    panel.warnings.extend(warnings)
    return panel


def predictInbagCurves(
    forest_t: SurvivalForest, forest_c: SurvivalForest, ds: SurvivalDataset
) -> CurvePanel:
    """
    In-bag curves from the full forests, for debugging only.

    Scores refuse such a panel unless explicitly overridden.
    """
    features = ds.features()
    floor = forest_c.cfg.censor_floor
    return CurvePanel(
        ds.grid,
        forest_t.predict(features),
        np.maximum(forest_c.predict(features), floor),
        oob=False,
        censorfloor=floor,
    )
