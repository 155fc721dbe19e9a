# rdsurv : regression discontinuity estimates for censored time-to-event outcomes
#
# (c) 2026 Michel Anders (varkenvarken)
#
# License: GPL 3, see file LICENSE
#
# Version: 20261017091204

"""
Exceptions raised by the rdsurv package.

Every exception derives from [RdsurvError](rdsurv.Errors.RdsurvError), which itself
is a ValueError, and carries the exit code the command line will use when the
exception reaches it.

| class                 | exit code |
|-----------------------|-----------|
| EstimationError       | 1         |
| UsageError            | 2         |
| DataValidationError   | 3         |
"""

import logging

log = logging.getLogger(__name__)


class RdsurvError(ValueError):
    exitcode = 1

    def toJSON(self):
        """
        Returns an object suitable for serialiazing as JSON.

        Returns:
            dict: error class name, message and exit code.
        """
        return {
            "error": self.__class__.__name__,
            "message": str(self),
            "exitcode": self.exitcode,
        }


class EstimationError(RdsurvError):
    exitcode = 1


class UsageError(RdsurvError):
    exitcode = 2


class DataValidationError(RdsurvError):
    exitcode = 3


# data validation


class MissingColumn(DataValidationError):
    pass


class NonFiniteValue(DataValidationError):
    def __init__(self, row, column):
        super().__init__(f"non finite value in row {row}, column '{column}'")
        self.row = row
        self.column = column


class InvalidValue(DataValidationError):
    def __init__(self, row, column, message):
        super().__init__(f"invalid value in row {row}, column '{column}': {message}")
        self.row = row
        self.column = column


class MissingTreatmentColumn(DataValidationError):
    pass


class EmptySide(DataValidationError):
    pass


class InvalidHorizon(DataValidationError):
    pass


class InvalidCsv(DataValidationError):
    pass


# usage


class UnknownCovariate(UsageError):
    pass


class ConfigError(UsageError):
    pass


# estimation


class EmptyInput(EstimationError):
    pass


class ZeroSurvival(EstimationError):
    pass


class NoOobTrees(EstimationError):
    pass


class PanelNotOob(EstimationError):
    pass


class ZeroCensorSurvival(EstimationError):
    def __init__(self, unit):
        super().__init__(
            f"censoring survival is zero for unit {unit}, positivity is violated"
        )
        self.unit = unit


class SingularDesign(EstimationError):
    pass


class DegenerateRunningVariable(EstimationError):
    pass


class InsufficientData(EstimationError):
    pass


class WeakIdentification(EstimationError):
    pass


class StudyFailed(EstimationError):
    pass


def warn(sink, message, logger=None):
    """
    Record a warning on a result object and on the log stream.

    Args:
        sink (list): the warnings list of the result that produced the warning.
        message (str): the warning text.
        logger (Logger, optional): the logger of the calling module. Defaults to the package logger.
    """
    sink.append(message)
    (logger or log).warning(message)
