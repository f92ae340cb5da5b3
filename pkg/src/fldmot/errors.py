"""Exception types shared by all fldmot modules.

Every error carries a short machine-readable ``code`` used by the CLI for
single-line error reporting, and an ``exit_code`` (1 for input/validation
problems, 2 for internal solver failures).
"""


class FldmotError(Exception):
    code = "INTERNAL"
    exit_code = 1


# --- linear algebra ---------------------------------------------------------

class ZeroVectorError(FldmotError):
    code = "ZERO_VECTOR"


class NotPositiveDefiniteError(FldmotError):
    code = "NOT_POSITIVE_DEFINITE"
    exit_code = 2

    def __init__(self, pivot: int, message: str | None = None):
        self.pivot = pivot
        super().__init__(message or f"non-positive pivot at index {pivot}")


class SolverDivergedError(FldmotError):
    code = "SOLVER_DIVERGED"
    exit_code = 2


class DimensionMismatchError(FldmotError):
    code = "DIMENSION"


# --- discriminant fitting ---------------------------------------------------

class EmptyQueueError(FldmotError):
    code = "EMPTY_QUEUE"


class EmptySampleSetError(FldmotError):
    code = "EMPTY_SAMPLES"


class InsufficientClassesError(FldmotError):
    code = "INSUFFICIENT_CLASSES"


class InsufficientSamplesError(FldmotError):
    code = "INSUFFICIENT_SAMPLES"


# --- assignment -------------------------------------------------------------

class InvalidCostError(FldmotError):
    code = "INVALID_COST"


# --- tracker ----------------------------------------------------------------

class ConfigError(FldmotError):
    code = "CONFIG"

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class FrameOrderError(FldmotError):
    code = "FRAME_ORDER"


# --- file formats -----------------------------------------------------------

class ParseError(FldmotError):
    code = "PARSE"

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class FormatError(FldmotError):
    code = "FORMAT"


class TruncationError(FldmotError):
    code = "TRUNCATION"


class DataError(FldmotError):
    code = "DATA"

    def __init__(self, index: int, message: str):
        self.index = index
        super().__init__(f"value {index}: {message}")


class AlignmentError(FldmotError):
    code = "ALIGNMENT"


# --- evaluation -------------------------------------------------------------

class DuplicateKeyError(FldmotError):
    code = "DUPLICATE_KEY"
