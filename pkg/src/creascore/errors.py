"""Exception types raised by the scoring engine."""


class EngineError(Exception):
    """Base class for all engine errors."""


class ParseError(EngineError):
    """A corpus input file could not be parsed. Carries file/line context."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)
        self.path = path
        self.line = line


class SchemaError(EngineError):
    """Input data contradicts the declared attribute schema."""


class IntegrityError(EngineError):
    """Duplicate or mutually inconsistent corpus records."""


class ImputationError(EngineError):
    """An attribute has no observed values to impute from."""


class ThresholdError(EngineError):
    """A percentile threshold was requested on a graph with no positive forward edges."""


class ConvergenceError(EngineError):
    """Power iteration failed to converge and strict mode is on."""


class UndefinedCorrelationError(EngineError):
    """Pearson correlation was requested against a constant vector."""
