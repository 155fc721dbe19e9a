# rdsurv : regression discontinuity estimates for censored time-to-event outcomes
#
# (c) 2026 Michel Anders (varkenvarken)
#
# License: GPL 3, see file LICENSE
#
# Version: 20261017162015

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime
from os import environ, path
from typing import List, Optional

import numpy as np
import yaml

from .Errors import ConfigError
from .Forest import ForestConfig

# version of the result file layout
SCHEMA_VERSION = 1

COMMANDS = ("estimate", "diagnose", "curves", "sweep", "simulate")
DATA_COMMANDS = ("estimate", "diagnose", "curves", "sweep")

TRUTHY = {"true", "True", "TRUE", "1", "Y", "y"}


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got '{text}'")


class Args:
    """
    Command line argument parsing.

    Every option defaults to argparse.SUPPRESS, so the namespace holds only the options
    given on the command line and they can be layered on top of a config file.

    Args:
        argv (list, optional): arguments to parse. Defaults to sys.argv[1:].
    """

    def __init__(self, argv=None):
        common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
        common.add_argument("-l", "--log", help="log progress to stderr", action="store_true")
        common.add_argument("-c", "--config", help="YAML config file")
        common.add_argument("-o", "--output", dest="output_path", help="result JSON file, stdout if absent")
        common.add_argument("-j", "--threads", help="number of threads", type=int)
        common.add_argument("--seed", help="random seed", type=int)
        common.add_argument("--alpha", help="one minus the confidence level", type=float)

        forest = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
        forest.add_argument("--trees", dest="num_trees", help="trees per forest", type=int)
        forest.add_argument("--mtry", help="features tried per split", type=int)
        forest.add_argument("--min-node-size", dest="min_node_size", help="minimum units per child", type=int)
        forest.add_argument("--subsample", dest="subsample_fraction", help="subsample fraction per tree", type=float)
        forest.add_argument("--censor-floor", dest="censor_floor", help="lower clamp of censoring curves", type=float)

        data = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
        data.add_argument("-i", "--input", dest="input_path", help="input CSV with columns time, event, z, x1.., [w]")
        data.add_argument("--cutoff", help="threshold of the running variable", type=float)
        data.add_argument("--design", help="sharp or fuzzy", choices=["sharp", "fuzzy"])
        data.add_argument("--binwidth", help="coarsen observed times to bins of this width", type=float)
        data.add_argument("--horizon", help="the horizon h", type=float)
        data.add_argument(
            "--horizon-quantile",
            dest="horizon_quantile",
            help="quantile of observed times used as horizon if none is given",
            type=float,
        )

        estimand = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
        estimand.add_argument("--estimand", help="the estimand", choices=["survival_probability", "rmst"])
        estimand.add_argument("--estimator", help="registered discontinuity estimator")
        estimand.add_argument("--rho", help="ratio of bias to main bandwidth", type=float)
        estimand.add_argument(
            "--min-first-stage", dest="min_first_stage", help="smallest admissible treatment jump", type=float
        )

        cmdline = argparse.ArgumentParser(
            prog="rdsurv",
            description="Regression discontinuity estimates for censored time-to-event outcomes",
        )
        commands = cmdline.add_subparsers(dest="command", required=True)

        p = commands.add_parser("estimate", parents=[common, data, estimand, forest], help="estimate the effect at the cutoff")
        p.add_argument("--method", help="censoring correction", choices=["dr", "ipcw", "naive"], default=argparse.SUPPRESS)
        p.add_argument("--scores", dest="scores_path", help="write per-unit scores to this CSV", default=argparse.SUPPRESS)

        p = commands.add_parser("diagnose", parents=[common, data, forest], help="positivity, histograms and log-rank tests")
        p.add_argument("--split", help="covariate for the log-rank tests", default=argparse.SUPPRESS)
        p.add_argument("--threshold", help="positivity threshold", type=float, default=argparse.SUPPRESS)
        p.add_argument("--bins", help="histogram bins", type=int, default=argparse.SUPPRESS)
        p.add_argument("--horizons", help="comma separated horizons for positivity by horizon", type=_floats, default=argparse.SUPPRESS)
        p.add_argument("--csv", dest="csv_path", help="prefix of the CSV companions", default=argparse.SUPPRESS)

        p = commands.add_parser("curves", parents=[common, data, forest], help="export out-of-bag curves")
        p.add_argument("--csv", dest="csv_path", help="curve CSV", default=argparse.SUPPRESS)

        p = commands.add_parser("sweep", parents=[common, data, estimand, forest], help="IPCW and DR estimates over horizons")
        p.add_argument("--horizons", help="comma separated horizons", type=_floats, default=argparse.SUPPRESS)
        p.add_argument("--csv", dest="csv_path", help="sweep CSV", default=argparse.SUPPRESS)

        p = commands.add_parser("simulate", parents=[common, estimand, forest], help="Monte Carlo study of one setting")
        p.add_argument("--setting", help="simulation setting", type=int, choices=[1, 2, 3, 4], default=argparse.SUPPRESS)
        p.add_argument("--reps", help="replications", type=int, default=argparse.SUPPRESS)
        p.add_argument("--n", help="units per replication", type=int, default=argparse.SUPPRESS)
        p.add_argument("--horizon", help="the horizon h", type=float, default=argparse.SUPPRESS)
        p.add_argument(
            "--method", help="censoring correction", choices=["dr", "ipcw", "naive", "complete"], default=argparse.SUPPRESS
        )
        p.add_argument("--oracle-draws", dest="oracle_draws", help="draws for the truth", type=int, default=argparse.SUPPRESS)
        p.add_argument("--truthfile", help="truth cache file", default=argparse.SUPPRESS)
        p.add_argument(
            "--no-censoring", dest="censoring", help="simulate without censoring", action="store_false", default=argparse.SUPPRESS
        )
        p.add_argument(
            "--effect-scale", dest="effect_scale", help="multiplies the treatment coefficient", type=float, default=argparse.SUPPRESS
        )
        p.add_argument("--csv", dest="csv_path", help="per replication CSV", default=argparse.SUPPRESS)

        self.args = cmdline.parse_args(argv)


class EnvArgs:
    def __init__(self):
        threads = environ.get("RDSURV_THREADS")
        try:
            self.threads = int(threads) if threads else None
        except ValueError:
            raise ConfigError(f"RDSURV_THREADS must be an integer, got '{threads}'") from None
        self.log = environ.get("RDSURV_LOG", "False") in TRUTHY
        self.config = environ.get("RDSURV_CONFIG")
        self.truthfile = environ.get("RDSURV_TRUTHFILE")


@dataclass
class RunConfig:
    """
    The resolved configuration of one command.

    See the configuration page of the documentation for the meaning of every key.
    """

    command: str = "estimate"
    input_path: Optional[str] = None
    design: str = "sharp"
    estimand: str = "survival_probability"
    horizon: Optional[float] = None
    horizon_quantile: float = 0.9
    horizons: Optional[List[float]] = None
    method: str = "dr"
    cutoff: Optional[float] = None
    binwidth: Optional[float] = None
    forest: ForestConfig = field(default_factory=ForestConfig)
    estimator: str = "robust"
    rho: float = 1.0
    min_first_stage: float = 0.02
    alpha: float = 0.05
    seed: int = 42
    output_path: Optional[str] = None
    scores_path: Optional[str] = None
    csv_path: Optional[str] = None
    split: Optional[str] = None
    threshold: float = 0.05
    bins: int = 30
    setting: int = 1
    reps: int = 100
    n: int = 5000
    oracle_draws: int = 10**7
    truthfile: Optional[str] = None
    censoring: bool = True
    effect_scale: float = 1.0
    threads: Optional[int] = None
    log: bool = False

    def validate(self):
        """
        Raises:
            ConfigError: for an unknown command, an alpha outside (0, 0.5), a missing input file
                or cutoff, or an unsupported method.
        """
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command}, not one of {COMMANDS}")
        if not 0 < self.alpha < 0.5:
            raise ConfigError(f"alpha {self.alpha} outside (0, 0.5)")
        if self.command in DATA_COMMANDS:
            if self.input_path is None or not path.isfile(self.input_path):
                raise ConfigError(f"input file {self.input_path} does not exist")
            if self.cutoff is None:
                raise ConfigError("a cutoff is required")
        if self.command == "estimate" and self.method not in ("dr", "ipcw", "naive"):
            raise ConfigError(f"method {self.method} cannot be used on observed data")
        if self.command == "sweep" and not self.horizons:
            raise ConfigError("sweep needs a list of horizons")
        if self.command == "simulate" and self.setting not in (1, 2, 3, 4):
            raise ConfigError(f"unknown setting {self.setting}")
        if self.threads is not None and self.threads < 1:
            raise ConfigError("threads must be at least 1")
        self.forest.validate()
        return self

    def toJSON(self):
        """
        The configuration as echoed in result files; the thread count and logging flag are left out.
        """
        echo = asdict(self)
        del echo["threads"]
        del echo["log"]
        return echo


FOREST_KEYS = {f.name for f in fields(ForestConfig)}
RUN_KEYS = {f.name for f in fields(RunConfig)} - {"forest"}


def loadConfig(args: argparse.Namespace, env: EnvArgs = None) -> RunConfig:
    """
    Resolve the configuration: command line flags override the YAML file, which overrides defaults.

    Raises:
        ConfigError: for an unreadable file or unknown keys.

    Returns:
        RunConfig: the validated configuration.
    """
    env = env or EnvArgs()
    given = vars(args).copy()
    values = {}
    forest = {}
    configfile = given.pop("config", None) or env.config
    if configfile:
        try:
            with open(configfile) as f:
                content = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ConfigError(f"cannot read config file {configfile}: {e}") from e
        if not isinstance(content, dict):
            raise ConfigError(f"config file {configfile} is not a mapping")
        fileforest = content.pop("forest", None) or {}
        unknown = (set(content) - RUN_KEYS) | (set(fileforest) - FOREST_KEYS)
        if unknown:
            raise ConfigError(f"unknown keys in {configfile}: {sorted(unknown)}")
        values.update(content)
        forest.update(fileforest)
    for key, value in given.items():
        (values if key in RUN_KEYS else forest)[key] = value
    # one seed drives both the data side and the forests unless the file sets a forest seed
    if "seed" in given or ("seed" in values and "seed" not in forest):
        forest["seed"] = values["seed"]
    values.setdefault("threads", env.threads)
    values["log"] = values.get("log", False) or env.log
    if values.get("truthfile") is None:
        values["truthfile"] = env.truthfile
    try:
        cfg = RunConfig(**values, forest=ForestConfig(**forest))
    except TypeError as e:
        raise ConfigError(str(e)) from e
    return cfg.validate()


class _Formatter(logging.Formatter):
    def __init__(self):
        super().__init__("%(asctime)s %(message)s", "%H:%M:%S")
        self.flagged = logging.Formatter("%(asctime)s %(levelname)s %(message)s", "%H:%M:%S")

    def format(self, record):
        if record.levelno >= logging.WARNING:
            return self.flagged.format(record)
        return super().format(record)


def createLogger(verbose=False):
    """
    Send the package log to stderr, each line prefixed with the time.

    Args:
        verbose (bool, optional): log progress (INFO) as well as warnings. Defaults to False.
    """
    logger = logging.getLogger("rdsurv")
    for handler in [h for h in logger.handlers if getattr(h, "rdsurv", False)]:
        logger.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(_Formatter())
    handler.rdsurv = True
    logger.addHandler(handler)
    logger.setLevel(logging.INFO if verbose else logging.WARNING)
    return logger


def _jsonDefault(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "toJSON"):
        return o.toJSON()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def resultDocument(command, result, warnings, config_echo):
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "result": result,
        "warnings": list(warnings),
        "config_echo": config_echo,
    }


def dumps(document):
    return json.dumps(document, sort_keys=True, indent=2, default=_jsonDefault) + "\n"


def versions():
    import joblib
    import lifelines
    import pandas
    import scipy

    from . import __version__

    return {
        "rdsurv": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pandas.__version__,
        "lifelines": lifelines.__version__,
        "joblib": joblib.__version__,
    }


def writeJson(outputpath, command, result, warnings, config_echo, threads=None):
    """
    Write a result document; to stdout if no path is given.

    The document holds only what the inputs determine, so equal inputs give byte identical
    files. The timestamp, thread count and package versions go to <outputpath>.meta.json
    together with the SHA-256 of the result file.

    Returns:
        str: the serialized result document.
    """
    text = dumps(resultDocument(command, result, warnings, config_echo))
    if outputpath is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return text
    with open(outputpath, "w", encoding="utf-8") as f:
        f.write(text)
    meta = {
        "timestamp": datetime.now().isoformat(timespec="seconds"),
        "threads": threads,
        "versions": versions(),
        "sha256": hashlib.sha256(text.encode("utf-8")).hexdigest(),
        "result": path.basename(outputpath),
    }
    with open(f"{outputpath}.meta.json", "w", encoding="utf-8") as f:
        json.dump(meta, f, sort_keys=True, indent=2)
    logging.getLogger(__name__).info(f"wrote {outputpath}")
    return text
