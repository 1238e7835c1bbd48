"""Exception hierarchy for spinprobe."""


class SpinProbeError(Exception):
    """Base class for all errors raised by this package."""


class InvalidSpinError(SpinProbeError, ValueError):
    """A spin or magnetic quantum number is out of range or has the wrong parity."""


class LayoutError(SpinProbeError, ValueError):
    """Operator/state dimensions do not match the declared site layout."""


class ContractViolation(SpinProbeError, ArithmeticError):
    """A numerical contract (Hermiticity, unitarity, normalization) was breached."""


class ExtractionError(SpinProbeError, ValueError):
    """Not enough (or degenerate) coupling-strength data to extract a correlation."""


class ConfigError(SpinProbeError, ValueError):
    """Invalid run configuration."""
