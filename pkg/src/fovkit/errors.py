"""Exceptions raised by fovkit.

Every error is a :py:class:`ValueError` so that callers validating user input
can catch a single type. The command line maps the three families
(:py:class:`FormatError`, :py:class:`NumericalError` and the remaining
:py:class:`FovkitError` subclasses) onto distinct exit codes.

"""


class FovkitError(ValueError):
    """Base class of all errors raised by fovkit."""


class InvalidGrid(FovkitError):
    pass


class DimMismatch(FovkitError):
    def __init__(self, expected: tuple[int, ...], got: tuple[int, ...]) -> None:
        super().__init__(f"Grid dimensions differ: expected {expected}, got {got}")
        self.expected = expected
        self.got = got


class LengthMismatch(FovkitError):
    def __init__(self, expected: int, got: int) -> None:
        super().__init__(f"Vector length mismatch: expected {expected}, got {got}")
        self.expected = expected
        self.got = got


class OutOfRangeFrequency(FovkitError):
    pass


class NonDivisorFactor(FovkitError):
    pass


class PatternMismatch(FovkitError):
    pass


class MultiCoilNotAllowed(FovkitError):
    pass


class CoilCountMismatch(FovkitError):
    def __init__(self, expected: int, got: int) -> None:
        super().__init__(f"Coil count mismatch: expected {expected}, got {got}")
        self.expected = expected
        self.got = got


class EmptyInput(FovkitError):
    pass


class ShapeOutOfBounds(FovkitError):
    pass


class ProblemTooLarge(FovkitError):
    pass


class FormatError(FovkitError):
    """A file could not be parsed or does not match its format description."""


class NumericalError(FovkitError):
    pass


class AllZeroImage(NumericalError):
    pass


class NonFiniteValues(NumericalError):
    pass


class InvalidMask(FovkitError):
    pass


class InvalidCoilSet(FovkitError):
    pass
