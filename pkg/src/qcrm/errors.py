"""Exception types shared across the package."""


class QCRMError(Exception):
    pass


class DomainError(QCRMError, ValueError):
    """An argument lies outside the domain an operation accepts."""


class ResourceLimitError(QCRMError):
    """Requested size exceeds a configured memory/compute guard."""


class CompileError(QCRMError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(str(e) for e in self.errors))


class ParseFailure(QCRMError):
    """Raised by :func:`qcrm.dsl.parse`; ``errors`` holds every diagnostic found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(str(e) for e in self.errors))
