"""Exception hierarchy.

Two families matter to callers: :class:`DataError` (the input data is
malformed or outside the domain) and :class:`ConstraintError` (the inputs are
well formed but violate a parameter constraint). The CLI maps them to exit
codes 3 and 4.
"""


class DPFLError(Exception):
    """Base class for all package errors."""


class DataError(DPFLError, ValueError):
    pass


class ConstraintError(DPFLError, ValueError):
    pass


class EvenN(DataError):
    pass


class OutOfDomain(DataError):
    pass


class NonPositiveDiameter(DataError):
    pass


class SizeMismatch(DataError):
    pass


class LocationOutOfDomain(DataError):
    pass


class DomainMismatch(DataError):
    pass


class DegenerateSupport(DataError):
    pass


class UnknownMetric(DPFLError, ValueError):
    pass


class InvalidParams(ConstraintError):
    pass


class InvalidK(ConstraintError):
    pass


class BetaOutOfRange(ConstraintError):
    pass


class ZeroGap(ConstraintError):
    pass


class NotCTM(ConstraintError):
    pass


class InvalidCertificate(ConstraintError):
    pass
