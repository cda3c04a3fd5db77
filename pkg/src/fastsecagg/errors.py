"""Exception hierarchy shared across the package."""


class FastSecAggError(Exception):
    """Base class for every error raised by this package."""


# --- field arithmetic ------------------------------------------------------


class NotPrime(FastSecAggError, ValueError):
    pass


class OrderMismatch(FastSecAggError, ValueError):
    """The transform length does not divide q - 1."""


class NoRootFound(FastSecAggError, ValueError):
    pass


class SearchExhausted(FastSecAggError, RuntimeError):
    pass


class DivideByZero(FastSecAggError, ZeroDivisionError):
    pass


# --- transforms and layouts -------------------------------------------------


class LengthMismatch(FastSecAggError, ValueError):
    pass


class HasErasures(FastSecAggError, ValueError):
    pass


class NotDivisor(FastSecAggError, ValueError):
    pass


class OutOfRange(FastSecAggError, IndexError):
    pass


class DegenerateParams(FastSecAggError, ValueError):
    pass


# --- sharing ----------------------------------------------------------------


class TooManySecrets(FastSecAggError, ValueError):
    pass


class TooManyErasures(FastSecAggError, ValueError):
    pass


class InconsistentRow(FastSecAggError, ValueError):
    """Known coordinates of a line do not lie on any codeword."""


class SpaceTooLarge(FastSecAggError, ValueError):
    pass


# --- crypto and protocol ----------------------------------------------------


class InvalidKey(FastSecAggError, ValueError):
    pass


class ProtocolAbort(FastSecAggError):
    """Raised by a party that aborts the current aggregation round."""


class AbortTooFewClients(ProtocolAbort):
    pass


class AuthFailure(ProtocolAbort):
    pass


class AbortReconFailed(ProtocolAbort):
    pass


class ConfigError(FastSecAggError, ValueError):
    pass
