"""Exception types shared across the package."""


class WavechaosError(Exception):
    """Base class for all package errors."""


class InvalidInputError(WavechaosError, ValueError):
    """An argument violates an operation's precondition."""


class InvalidStateError(WavechaosError, RuntimeError):
    """An object is in the wrong state for the requested operation."""


class FormatError(WavechaosError, ValueError):
    """A file does not conform to its declared format.

    ``offset`` is the byte position at which parsing failed, when known.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class DivergenceError(WavechaosError, ArithmeticError):
    """A numerical process blew up; ``index`` is the step or iteration."""

    def __init__(self, message: str, index: int):
        super().__init__(f"{message} (at step {index})")
        self.index = index
