"""Exception taxonomy shared by the engine, transports and CLI."""


class CopaintError(Exception):
    """Base class for every error this package raises on purpose."""


# -- sensor wire protocol ---------------------------------------------------

class MalformedLine(CopaintError):
    """Line does not have the TAG,timestamp_ms,value shape."""


class UnknownTag(CopaintError):
    """Tag is not one of the known sample tags."""


class NonFinite(CopaintError):
    """Sample value parsed to NaN or infinity."""


class SampleRangeError(CopaintError):
    """A value is outside its physiologically plausible range."""


# -- heart-rate estimation --------------------------------------------------

class WindowTooShort(CopaintError):
    """Buffered window spans less time than the estimator needs."""


class BadSampleRate(CopaintError):
    """Sample rate below the supported minimum."""


class InsufficientData(CopaintError):
    """Too few accepted peaks to produce an estimate."""


class BadProfile(CopaintError):
    """Synthetic heart-rate profile is empty or out of range."""


# -- models and geometry ----------------------------------------------------

class EmptyInput(CopaintError):
    """Operation requires at least one element."""


class NotCalibrated(CopaintError):
    """Classification requested before a calibrated baseline exists."""


class OutOfBounds(CopaintError):
    """Point or path lies outside the canvas."""


class UnknownPattern(CopaintError):
    """Prompt does not name any pattern in the library."""


# -- engine and logs --------------------------------------------------------

class SeqGap(CopaintError):
    """Event sequence number is not last_seq + 1."""


class ConfigMismatch(CopaintError):
    """Log header config hash does not match the supplied config."""


class ScenarioError(CopaintError):
    """Scenario file failed to parse or validate."""
