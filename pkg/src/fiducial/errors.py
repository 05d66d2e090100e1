"""Exception hierarchy shared by all modules."""


class FiducialError(Exception):
    """Base class for library errors."""


class DomainError(FiducialError, ValueError):
    """An argument lies outside the admissible domain."""


class BoundaryError(DomainError):
    """A fiducial distribution does not exist for the observed statistic."""


class BracketError(FiducialError, ValueError):
    """A root-finding target is not enclosed by the bracket."""


class IntegrationError(FiducialError, RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class ConfigError(FiducialError, ValueError):
    """A scenario or CLI configuration is invalid."""
