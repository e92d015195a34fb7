"""Exception taxonomy mapped to CLI exit codes."""


class PowercastError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(PowercastError):
    """Invalid configuration or parameter choice."""

    exit_code = 2


class AliasingError(ConfigError):
    """Synthesis tone at or above the Nyquist frequency."""


class DataError(PowercastError):
    """Problem with input data (parsing, cadence, gaps, degenerate scales)."""

    exit_code = 3


class ParseError(DataError):
    """Malformed value in an input file."""


class CadenceError(DataError):
    """Non-uniform timestamp spacing."""


class GapError(DataError):
    """Missing value; imputation is never attempted."""


class SplitError(DataError):
    """A chronological partition would be too small to window."""


class WindowError(DataError):
    """Series too short for the requested lag window."""


class MetricError(DataError):
    """Metric preconditions violated (empty input, non-positive scale)."""


class NumericError(PowercastError):
    """Numerical failure during fitting, training, or optimization."""

    exit_code = 4


class GpFitError(NumericError):
    """Gaussian-process fit failed (inconsistent or indefinite system)."""


class CandidateExhaustionError(NumericError):
    """Every acquisition candidate duplicates an evaluated point."""


class OptimizationError(NumericError):
    """Optimization budget exhausted without a single successful trial."""


class FixtureMismatchError(PowercastError):
    """Embedded reference-table arithmetic failed to reproduce."""

    exit_code = 5
