# rdsurv : regression discontinuity estimates for censored time-to-event outcomes
#
# (c) 2026 Michel Anders (varkenvarken)
#
# License: GPL 3, see file LICENSE
#
# Version: 20261017170342

"""
This package can be invoked as a module.

Example:
```
python -m rdsurv estimate --input data.csv --cutoff 0.5 --horizon 7
```

It estimates the jump at a cutoff of the probability of surviving past a horizon,
or of the restricted mean survival time, from right censored data. Censoring is
corrected with doubly robust scores built from random survival forests, or with
inverse probability of censoring weights.

Other sub-commands are diagnose, curves, sweep and simulate. For more info run

```
python -m rdsurv --help
```

"""

__version__ = "0.1.0"
