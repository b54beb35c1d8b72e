"""Exception hierarchy shared by every module."""


class KwsError(Exception):
    """Base class for all keyword-spotting errors."""


class UsageError(KwsError, ValueError):
    """Caller passed arguments that violate an operation's preconditions."""


class DataError(KwsError, ValueError):
    """Input data is malformed or inconsistent."""


class MalformedInputError(DataError):
    pass


class ValidationError(DataError):
    pass


class InfeasibleError(DataError):
    """A label sequence cannot be aligned to the given number of frames."""


class FormatError(DataError):
    """A serialized file does not follow its binary or text format."""


class UnsupportedFormatError(FormatError):
    pass


class EmptyHypothesisError(DataError):
    """Max-decoding produced no labels; the query is unusable."""


class InsufficientQueriesError(UsageError):
    pass
