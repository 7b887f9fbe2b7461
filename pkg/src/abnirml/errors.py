"""Exception hierarchy shared across the package."""


class AbnirmlError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(AbnirmlError):
    """A line of an input file could not be parsed."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        loc = ""
        if path is not None:
            loc = f"{path}:" if line is None else f"{path}:{line}: "
        super().__init__(f"{loc}{message}")
        self.path = path
        self.line = line


class ValidationError(AbnirmlError):
    """Input parsed but violated an invariant (duplicate ids, unknown refs, ...)."""


class ConfigError(AbnirmlError):
    """A parameter or configuration value is out of its legal range or missing."""


class EvaluationError(AbnirmlError):
    """A scorer failed mid-evaluation; the message names the failing sample."""


class ScorerProtocolError(AbnirmlError):
    """The external scorer violated the wire protocol."""


class ScorerTimeoutError(ScorerProtocolError):
    """The external scorer did not answer within the deadline."""


class CacheError(AbnirmlError):
    """The score cache is unreadable; it must be cleared, never silently mis-served."""
