"""Exception types shared across the package."""


class ChainError(ValueError):
    """Base class for invalid-input conditions on chains and bounds.

    ``row`` is the 0-based matrix row at fault, when there is one.
    """

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class InvalidChain(ChainError):
    pass


class InvalidGenerator(ChainError):
    pass


class NonErgodic(ChainError):
    pass


class ZeroStationaryMass(ChainError):
    pass


class NonStationary(ChainError):
    pass


class NotReversible(ChainError):
    pass


class DegenerateGap(ChainError):
    """Raised when the spectral expansion is 1 and a bound would be vacuous."""


class EpsilonTooLarge(ChainError):
    pass


class InvalidR(ChainError):
    pass


class LengthMismatch(ChainError):
    pass


class TooLarge(ChainError):
    pass


class AbsorbingState(ChainError):
    pass


class NoConvergence(RuntimeError):
    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class IterationCapExceeded(RuntimeError):
    pass


class CheckFailed(AssertionError):
    """An inequality that always holds in exact arithmetic failed numerically."""

    def __init__(self, item, lhs, rhs, witness=None):
        super().__init__(f"{item}: {lhs!r} > {rhs!r}")
        self.item = item
        self.lhs = lhs
        self.rhs = rhs
        self.witness = witness


class ParseError(ValueError):
    """Malformed chain document; ``line`` is 1-based."""

    def __init__(self, line, reason):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class ValidationError(ParseError):
    """Well-formed chain document whose contents break a model invariant."""
