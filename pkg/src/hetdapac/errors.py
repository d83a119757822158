"""Exception types shared across the package."""


class HetDapacError(Exception):
    """Base class for all package errors."""


class FieldMismatch(HetDapacError):
    pass


class DivisionByZero(HetDapacError, ZeroDivisionError):
    pass


class DimensionError(HetDapacError, ValueError):
    pass


class ConfigError(HetDapacError, ValueError):
    pass


class AccessViolation(HetDapacError):
    """A query asked a server for a message outside its database view."""


class DecodeError(HetDapacError):
    pass


class VerificationFailed(HetDapacError):
    def __init__(self, server: int, reason: str = ""):
        self.server = server
        self.reason = reason
        msg = f"server {server} rejected the attribute claim"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)


class DomainTooLarge(HetDapacError):
    pass


class FrameError(HetDapacError):
    pass


class VersionError(HetDapacError):
    pass


class SessionError(HetDapacError):
    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial
