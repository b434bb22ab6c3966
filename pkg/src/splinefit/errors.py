"""Exception types shared across the package.

Configuration mistakes (bad degrees, sites outside the domain, malformed
subsets) raise plain ``ValueError``. The classes below mark failures of the
numerics themselves or of file parsing, so callers -- the CLI in particular --
can map them to distinct exit codes.
"""


class NumericError(RuntimeError):
    """Base class for failures of the numerical machinery."""


class RankDeficiencyError(NumericError):
    """Least-squares system is rank deficient within the pivot threshold."""


class SingularSystemError(NumericError):
    """Regularized normal system could not be factorized."""


class SubsetCapError(NumericError):
    """Number of size-n subsets exceeds the combinatorial cap."""


class StagnationError(NumericError):
    """Adaptive refinement added no degrees of freedom two levels running."""


class PointCloudFormatError(ValueError):
    """Malformed point-cloud file; message carries the offending line number."""


class ModelFormatError(ValueError):
    """Malformed or inconsistent model file."""
