"""Exception hierarchy shared by every modpolar module."""


class ModpolarError(Exception):
    """Base class for all modpolar errors."""


class ShapeMismatch(ModpolarError, ValueError):
    pass


class NotSelfAdjoint(ModpolarError, ValueError):
    pass


class NotPositive(ModpolarError, ValueError):
    pass


class NoConvergence(ModpolarError, RuntimeError):
    pass


class IllConditioned(ModpolarError, ArithmeticError):
    pass


class NotPartialIsometry(ModpolarError, ValueError):
    pass


class NonPositiveAlpha(ModpolarError, ValueError):
    pass


class NotSquare(ModpolarError, ValueError):
    pass


class UnknownTag(ModpolarError, KeyError):
    pass


class InvalidSequence(ModpolarError, ValueError):
    pass


class InvalidSpec(ModpolarError, ValueError):
    pass


class EquivalenceViolation(ModpolarError, AssertionError):
    """Conditions that must coincide evaluated differently.

    Never a legitimate mathematical outcome; it signals a numerical or
    implementation defect. ``report`` carries whatever was computed.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
