"""Exception types shared across the package."""


class DelayMatchError(Exception):
    """Base class for all errors raised by this package."""


class NonConcaveSpec(DelayMatchError):
    """A delay specification is not concave/increasing as required."""


class ZeroDerivative(DelayMatchError):
    """A delay specification has a vanishing slope where a positive one is required."""


class NegativeTime(DelayMatchError):
    """A delay function was evaluated at a negative argument."""


class BadParams(DelayMatchError):
    """Generator or constructor parameters are out of range."""


class ParseError(DelayMatchError):
    """A file or spec string could not be parsed into a valid object."""


class MalformedHst(DelayMatchError):
    """A tree description violates the hierarchically separated tree contract."""


class Unterminated(DelayMatchError):
    """A simulation stalled with unmatched requests and no possible progress."""


class TooLarge(DelayMatchError):
    """An exact optimum was requested beyond the enumeration size limit."""


class Unbalanced(DelayMatchError):
    """A bichromatic operation was given unequal positive/negative populations."""


class IncompatiblePolarity(DelayMatchError):
    """Two requests cannot be matched because their polarities conflict."""


class NotPerfectMatching(DelayMatchError):
    """A proposed solution does not perfectly match the request set."""


class AuditFailure(DelayMatchError):
    """A guaranteed inequality or runtime assertion was violated."""
