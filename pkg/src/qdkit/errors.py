"""Exception types raised across the toolkit."""


class QDError(Exception):
    """Base class for toolkit errors."""


class DimensionMismatch(QDError, ValueError):
    pass


class NonConvergedInverse(QDError):
    pass


class EmptyDomain(QDError):
    pass


class DegenerateGap(QDError):
    pass


class PoleAtCenter(QDError, ZeroDivisionError):
    pass


class PoleHit(QDError, ZeroDivisionError):
    pass


class CenterMismatch(QDError, ValueError):
    pass


class CenterChainMismatch(QDError, ValueError):
    pass


class OrderExceeded(QDError, ValueError):
    pass


class NoConvergence(QDError):
    pass


class SingularJacobian(QDError):
    pass


class OutsideDomain(QDError, ValueError):
    pass


class IllConditioned(QDError):
    pass


class URepresentationMismatch(QDError):
    pass


class SingularJacobianAtNode(QDError):
    pass


class OrderOverflow(QDError):
    pass


class SchemeVolumeMismatch(QDError):
    pass


class NotOriginFixing(QDError, ValueError):
    pass


class ScheduleInfeasible(QDError):
    pass


class UnivalenceSampleFailure(QDError):
    pass


class KernelUnavailable(QDError, NotImplementedError):
    pass


class UnknownScenario(QDError, KeyError):
    pass


class SpecParseError(QDError, ValueError):
    pass
