"""Exception types shared across the package."""


class RSDualError(Exception):
    """Base class for all errors raised by rsdual."""


class InvalidParams(RSDualError, ValueError):
    pass


class NonConvergent(RSDualError):
    pass


class PoleHit(RSDualError, ZeroDivisionError):
    """An argument landed within ``pole_eps`` of a pole (or zero of a denominator).

    ``pair`` optionally identifies the offending particle pair as
    ``(set_a, i, set_b, j)`` with set labels ``"q"`` / ``"mu"``.
    """

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class ShapeMismatch(RSDualError, ValueError):
    pass


class DegenerateInput(RSDualError, ValueError):
    pass


class UnsupportedKind(RSDualError, TypeError):
    pass


class IllConditioned(RSDualError):
    pass


class ProbeInconsistent(RSDualError):
    pass


class QuadratureDiverged(RSDualError):
    pass
