# rdsurv : regression discontinuity estimates for censored time-to-event outcomes
#
# (c) 2026 Michel Anders (varkenvarken)
#
# License: GPL 3, see file LICENSE
#
# Version: 20261017204410

import argparse
import pathlib
import sys
from sys import path

# add the parent directory of the current (scripts) directory to the path so we can test without installing
d = pathlib.Path(__file__).parent.parent.resolve()
path.append(str(d))

from rdsurv.Simulation import DgpSetting, generate

if __name__ == "__main__":

    cmdline = argparse.ArgumentParser(description="write a simulated dataset as CSV")
    cmdline.add_argument("csvfile", help="output file")
    cmdline.add_argument("--setting", type=int, default=1, choices=[1, 2, 3, 4])
    cmdline.add_argument("--n", type=int, default=5000)
    cmdline.add_argument("--seed", type=int, default=0)
    cmdline.add_argument("--complete", help="add the true event times as column T", action="store_true")
    args = cmdline.parse_args()

    ds, T = generate(DgpSetting(args.setting, n=args.n, seed=args.seed))
    frame = ds.toFrame()
    if args.complete:
        frame["T"] = T
    frame.to_csv(args.csvfile, index=False)
    print(f"{ds}", file=sys.stderr, flush=True)
