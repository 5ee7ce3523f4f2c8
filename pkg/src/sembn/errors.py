"""Exception types shared across the package."""


class SembnError(Exception):
    """Base class for all package errors."""


class ConfigError(SembnError):
    """Invalid or inconsistent pipeline configuration."""


# --- dataset ingest ---

class UnreadableData(SembnError):
    """The data file cannot be opened or read."""


class UnknownColumn(SembnError):
    pass


class OutOfRangeValue(SembnError):
    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class UnparseableCell(SembnError):
    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class DegenerateSplit(SembnError):
    pass


# --- model specification / SEM ---

class ModelSyntaxError(SembnError):
    def __init__(self, message, line=None, col=None):
        super().__init__(message)
        self.line = line
        self.col = col


class CycleError(SembnError):
    pass


class UnderidentifiedLatent(SembnError):
    pass


class SingularSystem(SembnError):
    pass


class NonConvergence(SembnError):
    pass


class NonPositiveDefiniteSample(SembnError):
    pass


class ZeroDf(SembnError):
    pass


class SingularImpliedCov(SembnError):
    pass


# --- discretization ---

class InsufficientData(SembnError):
    pass


# --- Bayesian network ---

class UnknownNode(SembnError):
    pass


class EmptyData(SembnError):
    pass


class IncompleteAssignment(SembnError):
    pass


class ZeroProbabilityEvidence(SembnError):
    pass


class InvalidDistribution(SembnError):
    pass


class LengthMismatch(SembnError):
    pass
