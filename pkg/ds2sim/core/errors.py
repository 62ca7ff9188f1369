"""
Exception hierarchy for the DS-II simulator.

The command-line layer maps these onto exit codes, so every failure a run
can hit belongs to exactly one family.
"""
from typing import Any, Optional, Tuple


class DS2Error(Exception):
    """Base class for all simulator errors."""


class ConfigurationError(DS2Error):
    """Invalid parameters, grids or configuration keys."""

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        if key is not None and key not in message:
            message = f"{key}: {message}"
        super().__init__(message)


class GridTooLargeError(ConfigurationError):
    """The convolution oracle refused a grid above its size guard."""


class NumericalError(DS2Error):
    """Non-finite values appeared in a field."""

    def __init__(self, message: str, iteration: Optional[int] = None):
        self.iteration = iteration
        if iteration is not None:
            message = f"{message} (Picard iteration {iteration})"
        super().__init__(message)


class RejectedStepError(DS2Error):
    """A Picard step failed to contract; the run stops at the last good time."""

    def __init__(self, report: Any, t_last_good: float, last_good: Any = None):
        self.report = report
        self.t_last_good = t_last_good
        self.last_good = last_good
        ratios = ", ".join(f"{r:.3g}" for r in report.contraction_ratios)
        super().__init__(
            f"Picard step rejected after {report.iters} iterations "
            f"(residual {report.final_residual:.3e}, ratios [{ratios}]); "
            f"last good time t={t_last_good:.17g}"
        )


class NoContractionError(DS2Error):
    """Even the smallest existence-time probe did not contract."""

    def __init__(self, report: Any):
        self.report = report
        super().__init__("no contraction at probe scale")


class SnapshotError(DS2Error):
    """Snapshot file could not be read."""


class SnapshotFormatError(SnapshotError):
    """Bad magic, unsupported version or truncated payload."""


class SnapshotDimensionError(SnapshotError):
    """Snapshot grid does not match the expected grid."""

    def __init__(self, found: Tuple[int, ...], expected: Tuple[int, ...]):
        self.found = found
        self.expected = expected
        super().__init__(
            f"snapshot has shape {found[0]}x{found[1]}, expected "
            f"{expected[0]}x{expected[1]}"
        )
