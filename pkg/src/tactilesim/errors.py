"""Exception types shared across the package."""


class TactileError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(TactileError, ValueError):
    """Configuration text is malformed or a field violates its invariant."""


class GeometryError(TactileError, ValueError):
    """Frame, area, or matrix geometry does not match what the operation expects."""


class CodecError(TactileError, ValueError):
    """Base class for wire packet encode/decode failures."""


class EncodeRangeError(CodecError):
    """A frame value does not fit the packet payload or the ADC range."""


class ProtocolMismatchError(CodecError):
    """Packet magic or version byte is not ours: wrong protocol, not corruption."""


class TruncatedPacketError(CodecError):
    """Buffer ends before the packet does."""


class CrcMismatchError(CodecError):
    """Checksum failed: the packet was corrupted in transit or at rest."""


class RecordingError(TactileError):
    """Recording file is unreadable or internally inconsistent."""


class CalibrationError(TactileError):
    """Calibration could not produce a usable gain setting."""


class OptimizationError(TactileError):
    """Parameter search input does not meet its preconditions."""
