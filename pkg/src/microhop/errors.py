"""Exception types raised across the package."""


class MicroHopError(Exception):
    """Base class for all package errors."""


class ZeroOrNonInvertible(MicroHopError, ValueError):
    pass


class NotPrime(MicroHopError, ValueError):
    pass


class BadRoot(MicroHopError, ValueError):
    pass


class SizeMismatch(MicroHopError, ValueError):
    pass


class DataOutOfRange(MicroHopError, ValueError):
    pass


class InconsistentPeaks(MicroHopError):
    """The two frequency-offset solutions of the pilot pair disagree."""


class NotDetected(MicroHopError):
    """No pilot pair passed the detection threshold."""


class PayloadTooLarge(MicroHopError, ValueError):
    pass


class SyncFieldInvalid(MicroHopError):
    """The sync symbol did not decode to a usable payload length."""


class ConfigError(MicroHopError, ValueError):
    """Invalid experiment configuration.

    ``field`` names the offending key path (``"channel.esn0_db"``), ``line``
    is set for JSON syntax errors.
    """

    def __init__(self, message, field=None, line=None):
        super().__init__(message)
        self.field = field
        self.line = line

    def as_dict(self):
        return {"error": str(self), "field": self.field, "line": self.line}


class IQFormatError(MicroHopError, ValueError):
    pass
