"""Exception types raised by the library.

Every error derives from :class:`ScxError`; the command-line front end maps
any of them to exit status 2 and prints the class name.
"""


class ScxError(Exception):
    """Base class for all library errors."""

    @property
    def name(self) -> str:
        return type(self).__name__


class SingularMatrix(ScxError):
    pass


class NoConvergence(ScxError):
    pass


class NotPositiveDefinite(ScxError):
    pass


class NotHermitian(ScxError):
    pass


class BadWindow(ScxError):
    pass


class OutOfWindow(ScxError):
    pass


class InvalidMatrix(ScxError):
    """Shape, dimension or finiteness violation for a :data:`CMatrix`."""


class InvalidArgument(ScxError):
    pass


class IoError(ScxError):
    pass


class ParseError(ScxError):
    pass


class ValidationError(ScxError):
    """Model configuration rejected; ``path`` names the offending field."""

    def __init__(self, path: str, cause: Exception):
        self.path = path
        self.cause = cause
        cause_name = type(cause).__name__
        super().__init__(f"{path}: {cause_name}: {cause}")
