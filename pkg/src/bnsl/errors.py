"""Exception types shared across the package."""


class BnslError(Exception):
    """Base class for all package-specific errors."""


class DataFormatError(BnslError):
    """A dataset or network file violates its format contract."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"{message}, line {line}"
        super().__init__(message)
        self.line = line


class ResourceLimitError(BnslError):
    """An operation would exceed a configured memory or size limit."""


class SupportError(BnslError):
    """A divergence is undefined because q is zero where p is positive."""


class CycleError(BnslError):
    """A graph mutation or construction would introduce a directed cycle."""
