"""Exception hierarchy shared across the package."""


class IdentifiabilityError(Exception):
    """Base class for errors raised by this package."""


class InvalidArgumentError(IdentifiabilityError, ValueError):
    pass


class NumericalDomainError(IdentifiabilityError, ArithmeticError):
    """A matrix that must be positive definite is not, or similar."""


class ModelEvaluationError(IdentifiabilityError, RuntimeError):
    """The forward model failed at a particular parameter vector."""

    def __init__(self, message, theta=None, sample_index=None):
        super().__init__(message)
        self.theta = theta
        self.sample_index = sample_index

    def __str__(self):
        msg = super().__str__()
        if self.theta is not None:
            msg += f" (theta={list(map(float, self.theta))})"
        if self.sample_index is not None:
            msg += f" [outer sample {self.sample_index}]"
        return msg


class StiffnessError(ModelEvaluationError):
    """Adaptive step size collapsed; ``state`` holds the last accepted state."""

    def __init__(self, message, state=None, time=None):
        super().__init__(message)
        self.state = state
        self.time = time


class NoIgnitionError(ModelEvaluationError):
    pass


class DegenerateModelError(IdentifiabilityError, ValueError):
    pass


class UnsupportedModelError(IdentifiabilityError, ValueError):
    pass


class ConfigError(IdentifiabilityError, ValueError):
    pass
