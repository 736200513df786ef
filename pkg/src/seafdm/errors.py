"""Exception types shared across the package."""


class SeafdmError(Exception):
    """Base class for all library errors."""


class ConfigurationError(SeafdmError, ValueError):
    """Inconsistent or out-of-range configuration values."""


class SerializationError(SeafdmError):
    """A generator state does not fit the fixed-width state vector."""


class StateFormatError(SeafdmError, ValueError):
    """A state vector has the wrong length or is not binary."""


class InvalidStateError(SeafdmError):
    """A state vector decodes to a state the generator can never reach."""


class InvalidSeedError(SeafdmError, ValueError):
    """An LFSR seed that would lock the register at zero."""


class EmptyChannelError(SeafdmError):
    """No path was found above the detection threshold."""


class NumericalRankError(SeafdmError, ArithmeticError):
    """The noiseless system is singular and cannot be solved."""


class FrameNotFoundError(SeafdmError):
    """No window of the received stream passed the header correlation test."""
