"""Exception hierarchy shared by every stage of the package."""


class ForecastabilityError(Exception):
    """Base class for all errors raised by this package."""


class DataError(ForecastabilityError):
    """Input data violates a precondition (maps to CLI exit code 3)."""


class ConfigError(ForecastabilityError):
    """Invalid pipeline configuration (maps to CLI exit code 2)."""


class MalformedRow(DataError):
    def __init__(self, line, reason):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class DuplicateTimestamp(DataError):
    pass


class NonUniformStep(DataError):
    pass


class AllMissing(DataError):
    pass


class CoverageGap(DataError):
    pass


class InsufficientHistory(DataError):
    pass


class DegenerateDesign(DataError):
    pass


class SchemaMismatch(DataError):
    pass


class EmptySet(DataError):
    pass


class LengthMismatch(DataError):
    pass


class EmptyInput(DataError):
    pass


class UnknownLabel(DataError):
    pass


class EmptyMatrix(DataError):
    pass


class TooShort(DataError):
    pass


class NameCollision(ForecastabilityError):
    pass


class EmptyCorpus(DataError):
    pass


class MissingScore(DataError):
    pass


class TooFewRows(DataError):
    pass


class StageFailed(ForecastabilityError):
    """A pipeline stage raised; ``stage`` names it (exit code 4)."""

    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause
