"""Error hierarchy shared by the library and the CLI.

Every error carries the ``kind`` name printed by the CLI
(``error: <kind>: <detail>``) and the process exit code it maps to.
"""


class BrainLearnError(Exception):
    """Base class for all expected failures."""
    kind = "Error"
    exit_code = 1

    def __init__(self, detail: str = ""):
        super().__init__(detail)
        self.detail = detail

    def __str__(self) -> str:
        return self.detail or self.kind


# =============================================================================
# CONFIG ERRORS (exit 2)
# =============================================================================

class ConfigError(BrainLearnError, ValueError):
    kind = "ConfigError"
    exit_code = 2


# =============================================================================
# DATA ERRORS (exit 3)
# =============================================================================

class DataError(BrainLearnError, ValueError):
    kind = "DataError"
    exit_code = 3


class UnsupportedDatatype(DataError):
    kind = "UnsupportedDatatype"


class UnsupportedLayout(DataError):
    kind = "UnsupportedLayout"


class TruncatedFile(DataError):
    kind = "TruncatedFile"


class BadMagic(DataError):
    kind = "BadMagic"


class NonFiniteData(DataError):
    kind = "NonFiniteData"


class IoFailure(DataError):
    kind = "IoFailure"


class SingularAffine(DataError):
    kind = "SingularAffine"


class EmptyMask(DataError):
    kind = "EmptyMask"


class ShapeMismatch(DataError):
    kind = "ShapeMismatch"


class AffineMismatch(DataError):
    kind = "AffineMismatch"


class LengthMismatch(DataError):
    kind = "LengthMismatch"


class TooFewTimepoints(DataError):
    kind = "TooFewTimepoints"


class BadBand(DataError):
    kind = "BadBand"


class SingleClass(DataError):
    kind = "SingleClass"


class EmptyClass(DataError):
    kind = "EmptyClass"


class MulticlassNotSupported(DataError):
    kind = "MulticlassNotSupported"


class BadK(DataError):
    kind = "BadK"


class BadFraction(DataError):
    kind = "BadFraction"


class BadComponentCount(DataError):
    kind = "BadComponentCount"


class VoxelCountMismatch(DataError):
    kind = "VoxelCountMismatch"


class TooManyClusters(DataError):
    kind = "TooManyClusters"


class BadShape(DataError):
    kind = "BadShape"


class BadSlice(DataError):
    kind = "BadSlice"


# =============================================================================
# NUMERIC ERRORS (exit 4)
# =============================================================================

class NumericError(BrainLearnError, ArithmeticError):
    kind = "NumericError"
    exit_code = 4


class SingularSystem(NumericError):
    kind = "SingularSystem"


class DegenerateCorrelation(NumericError):
    kind = "DegenerateCorrelation"
