"""Exception hierarchy.

Numerical failures map to CLI exit code 3, configuration problems to 2 and
failed hypothesis checks to 4.
"""


class IndexBundleError(Exception):
    """Base class for all errors raised by this package."""


class NumericalFailure(IndexBundleError):
    pass


class SymmetryViolation(NumericalFailure):
    pass


class RankDeficient(NumericalFailure):
    pass


class AlignmentGapTooLarge(NumericalFailure):
    pass


class NotInvertible(NumericalFailure):
    pass


class EndpointSingular(NumericalFailure):
    pass


class SamplingTooCoarse(NumericalFailure):
    pass


class OddWindowUnsupported(NumericalFailure):
    pass


class NoRegularPoint(NumericalFailure):
    pass


class NotTransversal(NumericalFailure):
    pass


class NotHyperbolic(NumericalFailure):
    def __init__(self, message, parameter=None):
        super().__init__(message)
        self.parameter = parameter


class IntegrationFailure(NumericalFailure):
    pass


class LoopNotResolved(NumericalFailure):
    pass


class NotAligned(NumericalFailure):
    pass


class DomainError(NumericalFailure):
    pass


class InvalidConfig(IndexBundleError, ValueError):
    pass


class ConfigError(IndexBundleError):
    """Malformed configuration document."""


class ValidationError(ConfigError):
    """Well-formed configuration with an invalid or out-of-range value."""


class HypothesisNotMet(IndexBundleError):
    pass
