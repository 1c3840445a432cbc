class NilforgeError(Exception):
    """Base class for every error raised by nilforge."""


class DimensionMismatch(NilforgeError, ValueError):
    pass


class LevelOverflow(NilforgeError):
    pass


class DegreeViolation(NilforgeError):
    """A table or polynomial is not of the requested degree."""

    def __init__(self, message, index_set=None, value=None):
        super().__init__(message)
        self.index_set = index_set
        self.value = value


class PreconditionViolation(NilforgeError):
    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic


class NotCompletable(NilforgeError):
    pass


class BudgetExceeded(NilforgeError):
    """A size guard tripped; `estimate` is the work the request would need."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class ParseError(NilforgeError):
    def __init__(self, message, filename='<input>', line=0):
        super().__init__(f'{filename}:{line}: {message}')
        self.filename = filename
        self.line = line


class VerificationFailure(NilforgeError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness
