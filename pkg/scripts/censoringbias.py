# rdsurv : regression discontinuity estimates for censored time-to-event outcomes
#
# (c) 2026 Michel Anders (varkenvarken)
#
# License: GPL 3, see file LICENSE
#
# Version: 20261017204802

import argparse
import pathlib
import sys
from sys import path

# add the parent directory of the current (scripts) directory to the path so we can test without installing
d = pathlib.Path(__file__).parent.parent.resolve()
path.append(str(d))

from rdsurv.Censoring import Estimand
from rdsurv.Dataset import Horizon
from rdsurv.Forest import ForestConfig
from rdsurv.Pipeline import METHODS, fitPanel, runPipeline
from rdsurv.Simulation import DgpSetting, computeTruth, generate
from rdsurv.Utils import createLogger

if __name__ == "__main__":

    cmdline = argparse.ArgumentParser(description="compare censoring corrections on one simulated dataset")
    cmdline.add_argument("--setting", type=int, default=1, choices=[1, 2, 3, 4])
    cmdline.add_argument("--n", type=int, default=5000)
    cmdline.add_argument("--seed", type=int, default=0)
    cmdline.add_argument("--estimand", default="survival_probability", choices=["survival_probability", "rmst"])
    cmdline.add_argument("--trees", type=int, default=200)
    cmdline.add_argument("-l", "--log", action="store_true")
    args = cmdline.parse_args()

    createLogger(args.log)
    setting = DgpSetting(args.setting, n=args.n, seed=args.seed)
    ds, T = generate(setting)
    estimand = Estimand(args.estimand, Horizon.fromDataset(ds, setting.horizon))
    truth = computeTruth(setting, estimand, oracle_draws=10**6)

    # one panel serves every method that needs it
    panel = fitPanel(ds, ForestConfig(num_trees=args.trees, seed=args.seed))
    print(f"{ds}\ntruth {truth.value:.4f}\n")
    print(f"{'method':10s} {'estimate':>9s} {'ci_low':>9s} {'ci_high':>9s}")
    for method in METHODS:
        fit = runPipeline(ds, estimand, method, complete=T, panel=panel if method == "dr" else None).fit
        print(f"{method:10s} {fit.estimate_bc:9.4f} {fit.ci_low:9.4f} {fit.ci_high:9.4f}")
    sys.stdout.flush()
