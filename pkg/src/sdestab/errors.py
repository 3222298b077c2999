"""Exception hierarchy shared by all modules."""


class SdeStabError(Exception):
    """Base class for errors raised by this package."""


class InvalidInputError(SdeStabError, ValueError):
    pass


class QuadratureError(SdeStabError):
    """Adaptive quadrature failed to converge (usually a non-integrable difference)."""


class DegenerateFitError(SdeStabError):
    """Rate fit impossible because some distance is exactly zero.

    ``q`` is set to ``inf`` as a sentinel: the family is exact.
    """

    def __init__(self, message, q=float("inf")):
        super().__init__(message)
        self.q = q


class SimulationError(SdeStabError):
    """A coefficient produced a non-finite value during time stepping."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class SetupError(SdeStabError):
    """Preconditions for building a scale function are not met."""


class DomainError(SdeStabError, ValueError):
    """Argument lies outside the image interval of a transform."""


class ConfigError(SdeStabError):
    """Experiment configuration is missing a field or has an out-of-range value."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
