"""Exception hierarchy shared by all modules."""


class MfaError(Exception):
    """Base class for every error raised by this package."""


class DomainError(MfaError, ValueError):
    """A query point lies outside the domain it is defined on."""


class ConfigError(MfaError, ValueError):
    """Invalid configuration (degree, control counts, camera, ...)."""


class UnsupportedOrderError(MfaError, ValueError):
    """Derivative order other than the ones implemented was requested."""


class FitError(MfaError):
    """Least-squares fit could not be solved (rank deficiency, dead controls)."""


class FormatError(MfaError):
    """Malformed model, volume or image file.

    ``offset`` is the byte (or line) position at which reading failed.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class RenderError(MfaError):
    """A sample source failed during ray marching."""

    def __init__(self, message, pixel=None, t=None):
        if pixel is not None:
            message = f"{message} at pixel {pixel}, t={t!r}"
        super().__init__(message)
        self.pixel = pixel
        self.t = t
