"""Exception types shared across the package.

``ConfigError`` marks bad user input (CLI exit code 2); everything deriving
from ``NumericsError`` marks a numerical-quality failure (CLI exit code 3).
"""


class KerrcatError(Exception):
    """Base class for all package errors."""


class ConfigError(KerrcatError):
    """Invalid configuration or malformed input file."""


class NumericsError(KerrcatError):
    """A numerical validity condition was violated."""


class TruncationError(NumericsError):
    """Requested state or operator is not safe in the truncated basis."""


class DegenerateGapError(NumericsError):
    """Penalty denominator fell below the configured gap floor."""


class PlannerStuckError(NumericsError):
    """No admissible descent candidate, or the step budget was exhausted."""


class AdiabaticityError(NumericsError):
    """Penalty density crossed the hard admissibility threshold."""


class StepSizeError(NumericsError):
    """Integrator step size too large for the requested evolution."""


class PositivityError(NumericsError):
    """Density matrix lost positivity beyond tolerance."""


class TraceError(NumericsError):
    """Density matrix trace drifted beyond tolerance."""


class GridTooSmallError(NumericsError):
    """Phase-space grid does not contain the state's support."""


class LobeDetectionError(NumericsError):
    """Could not locate two Wigner lobes for a size estimate."""
