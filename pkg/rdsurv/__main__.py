# rdsurv : regression discontinuity estimates for censored time-to-event outcomes
#
# (c) 2026 Michel Anders (varkenvarken)
#
# License: GPL 3, see file LICENSE
#
# Version: 20261017170110

import logging
import sys

from .Commands import RUNNERS
from .Errors import RdsurvError
from .Utils import SCHEMA_VERSION, Args, EnvArgs, createLogger, dumps, loadConfig, writeJson

log = logging.getLogger("rdsurv")


def main(argv=None):
    """
    Run one sub-command and return the exit code.

    Errors of the package are written to stdout as a JSON object with the error class,
    message and exit code.
    """
    args = Args(argv).args
    try:
        env = EnvArgs()
        createLogger(env.log or getattr(args, "log", False))
        cfg = loadConfig(args, env)
        result, warnings = RUNNERS[cfg.command](cfg)
        writeJson(cfg.output_path, cfg.command, result, warnings, cfg.toJSON(), cfg.threads)
    except RdsurvError as e:
        log.error(str(e))
        sys.stdout.write(dumps({"schema_version": SCHEMA_VERSION, **e.toJSON()}))
        sys.stdout.flush()
        return e.exitcode
    return 0


if __name__ == "__main__":
    sys.exit(main())
