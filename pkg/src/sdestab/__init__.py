"""Monte Carlo and quadrature instruments for stability of one-dimensional SDEs
with irregular diffusion coefficients."""

__version__ = "0.1.0"

from .errors import (ConfigError, DegenerateFitError, DomainError, InvalidInputError,  # noqa: E402
                     QuadratureError, SdeStabError, SetupError, SimulationError)

__all__ = ["__version__", "ConfigError", "DegenerateFitError", "DomainError",
           "InvalidInputError", "QuadratureError", "SdeStabError", "SetupError",
           "SimulationError"]
