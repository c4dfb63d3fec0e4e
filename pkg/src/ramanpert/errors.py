"""Exception types shared across the package."""


class RamanPertError(Exception):
    """Base class for all package errors."""


class InvalidIndex(RamanPertError, IndexError):
    pass


class NumericError(RamanPertError, ArithmeticError):
    pass


class Mismatch(RamanPertError, ValueError):
    """Operands live on different frequency bases or Hilbert spaces."""


class SpaceMismatch(Mismatch):
    pass


class NearResonance(RamanPertError, ValueError):
    """A nonzero frequency key realizes a (numerically) vanishing frequency.

    The offending keys are kept on ``.keys`` so callers can report them.
    """

    def __init__(self, message, keys=()):
        super().__init__(message)
        self.keys = tuple(keys)


class SecularTerm(RamanPertError, ValueError):
    """Zero-mean primitive requested for a polynomial with a zero-frequency term."""


class InvalidHamiltonian(RamanPertError, ValueError):
    pass


class InvalidScheme(RamanPertError, ValueError):
    pass


class DuplicateDetuning(NearResonance):
    pass


class StepTooLarge(RamanPertError, ValueError):
    pass


class InvalidState(RamanPertError, ValueError):
    pass


class ConfigError(RamanPertError, ValueError):
    pass
