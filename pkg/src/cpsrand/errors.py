"""Exception hierarchy shared by all modules."""


class CpsError(Exception):
    """Base class for library errors."""


class BudgetExhausted(CpsError):
    """A semi-decision procedure ran out of stages or precision.

    Absence of a certificate within a budget proves nothing; these errors
    are diagnostics, not negative answers.
    """


class StageBudgetExceeded(BudgetExhausted):
    pass


class PrecisionStall(BudgetExhausted):
    pass


class PrecisionExhausted(BudgetExhausted):
    pass


class DyadicBoundary(BudgetExhausted):
    pass


class MissingBound(CpsError):
    pass


class SpaceMismatch(CpsError):
    pass


class SupportTooLarge(CpsError):
    pass


class UnsupportedMorphism(CpsError):
    pass


class BadParameter(CpsError, ValueError):
    pass


class AtomicMeasure(CpsError):
    pass


class BadConstant(CpsError, ValueError):
    pass


class UnsupportedObservable(CpsError):
    pass


class BrokenWitnessChain(CpsError):
    pass


class TooLarge(CpsError):
    pass


class BadDelta(CpsError, ValueError):
    pass


class BadAlpha(CpsError, ValueError):
    pass


class BadRatio(CpsError, ValueError):
    pass
