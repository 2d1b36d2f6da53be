"""Exception hierarchy.

Every error raised on bad input derives from :class:`FxTailsError`, which is
itself a ``ValueError`` so callers that only care about "bad value" can catch
that.  :class:`ConfigError` is kept separate because the CLI maps it to its own
exit code.
"""


class FxTailsError(ValueError):
    """Base class for all package errors."""


class ConfigError(FxTailsError):
    """Invalid configuration or generator parameters."""


class ParseError(FxTailsError):
    def __init__(self, message: str, line: int | None = None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class ValidationError(FxTailsError):
    """Data violates a container invariant (non-positive price, bad dates...)."""


class SpliceError(FxTailsError):
    pass


class LengthError(FxTailsError):
    """Series too short for the requested operation."""


class DomainError(FxTailsError):
    """Input outside the mathematical domain (e.g. log of a non-positive value)."""


class DegenerateError(FxTailsError):
    """Zero variance, zero range, linear profile or similar degeneracy."""


class DivergentExponentError(FxTailsError):
    pass


class SparsityError(FxTailsError):
    """Not enough samples in a tail to fit."""


class UndefinedDivergenceError(FxTailsError):
    pass


class IncompatibleHistogramError(FxTailsError):
    pass


class SingularDesignError(FxTailsError):
    pass


class CoverageError(FxTailsError):
    pass


class LagError(FxTailsError):
    pass


class SplitError(FxTailsError):
    pass
