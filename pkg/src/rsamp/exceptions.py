"""Exception hierarchy shared across the package."""


class RsampError(Exception):
    """Base class for all package errors."""


class DimensionError(RsampError, ValueError):
    """Shapes of inputs do not agree."""


class RankDeficiencyError(RsampError, ValueError):
    """A matrix is (numerically) rank deficient."""


class DegenerateJacobianError(RankDeficiencyError):
    """The Jacobian of the simulated statistics has (near) zero volume."""


class DomainError(RsampError, ValueError):
    """A parameter lies outside the model's support or a map is non-finite."""


class NotSamplableError(RsampError, ValueError):
    """Sampling was requested from an improper prior."""


class EvaluationError(RsampError):
    """An objective returned a non-finite value or raised at a probe point."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class OptimizationError(RsampError):
    """Every start of a multistart optimization failed."""

    def __init__(self, message, failures=()):
        super().__init__(message)
        self.failures = list(failures)


class SamplerDegeneracyError(RsampError):
    """Too many proposals of a sampler were invalid."""


class ScheduleInfeasibleError(RsampError):
    """An SMC round accepted no particle within its retry budget."""


class DegenerateSampleError(RsampError, ValueError):
    """A weighted sample has no positive weight."""


class ConfigError(RsampError, ValueError):
    """A configuration file or CLI flag failed validation."""
