"""Exceptions raised across the cpol package."""
from typing import Optional


class CpolError(Exception):
    """Base class for all errors raised by cpol."""


class KinematicsError(CpolError, ValueError):
    """An energy pair or angle that Compton kinematics cannot produce."""


class InvalidDepositError(KinematicsError):
    """Energy deposit above the 180 degree backscatter maximum."""


class QuadratureError(CpolError):
    """Fixed-rule quadrature failed its doubling check."""

    def __init__(self, message: str, achieved_tolerance: float) -> None:
        super().__init__(f"{message} (achieved tolerance {achieved_tolerance:.3e})")
        self.achieved_tolerance = achieved_tolerance


class FitError(CpolError):
    """Visibility fit could not be performed."""


class HistogramError(CpolError):
    """Histogram does not cover the angles a construction needs."""


class IllConditionedError(CpolError):
    """Product of mean analyzing powers too small to divide by."""


class EmptySelectionError(CpolError):
    """No events survived a selection."""


class BinningError(CpolError):
    """A binning scheme could not be built from the given distribution."""


class ConfigError(CpolError):
    """Run configuration failed validation.

    Args:
        field_path: dotted path of the offending field, e.g. ``geometry.mode``
        message: validation message
    """

    def __init__(self, field_path: str, message: str) -> None:
        super().__init__(f"{field_path}: {message}")
        self.field_path = field_path


class EventFileError(CpolError):
    """Reading or writing an event file failed."""

    def __init__(self, message: str, records_written: Optional[int] = None) -> None:
        if records_written is not None:
            message = f"{message} after {records_written} records"
        super().__init__(message)
        self.records_written = records_written


class FormatVersionError(EventFileError):
    """Event file written with an incompatible major format version."""
