"""Exception types shared across the cache model."""


class SimError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(SimError):
    pass


class NonPowerOfTwoError(ConfigError):
    pass


class WidthOutOfRangeError(ConfigError):
    pass


class FieldOverflowError(SimError):
    pass


class UnalignedCrossBankError(SimError):
    pass


class InvalidWayError(SimError):
    pass


class MisalignedError(SimError):
    pass


class UnknownOpError(SimError):
    pass


class UnknownTxError(SimError):
    pass


class NotInflightError(SimError):
    pass


class InflightError(SimError):
    pass


class IllegalEventError(SimError):
    pass


class LayoutMismatchError(SimError):
    pass


class TraceError(SimError):
    """Trace-file problem, annotated with the 1-based line number."""

    def __init__(self, line, message):
        super().__init__(f"line {line}: {message}")
        self.line = line


class TraceSyntaxError(TraceError):
    pass


class BadAlignmentError(TraceError):
    pass


class BadSizeError(TraceError):
    pass
