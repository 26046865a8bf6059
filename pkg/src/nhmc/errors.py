"""Exception hierarchy shared by the library and the command line."""


class NHMCError(Exception):
    """Base class for every error raised by nhmc."""


class DimensionError(NHMCError, ValueError):
    """Operands have incompatible state-space sizes."""


class InvalidKernelError(NHMCError, ValueError):
    """A matrix is not row-stochastic (or a vector is not a distribution)."""


class ZeroMassError(NHMCError, ValueError):
    """An operation needs positive mass on a state that has none."""

    def __init__(self, message, state):
        super().__init__(message)
        self.state = state


class DegenerateError(NHMCError, ValueError):
    """V(S_n) = 0, so normalized quantities are undefined."""


class EnumerationLimitError(NHMCError, ValueError):
    """Path enumeration or an exact computation exceeds its size guard."""


class TooFewSamplesError(NHMCError, ValueError):
    """A statistical fit was requested on too small a batch."""
