"""Exception hierarchy shared by the solver modules and the CLI."""


class D2PtasError(Exception):
    """Base class for all package errors."""


class UsageError(D2PtasError, ValueError):
    """Invalid arguments: bad dimensions, empty inputs, out-of-range values."""


class RefusalError(D2PtasError):
    """A requested computation exceeds a configured resource cap."""


class DatasetParseError(D2PtasError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
