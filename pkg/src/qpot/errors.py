"""Exception and warning types shared across the package."""


class QpotError(Exception):
    """Base class for all package errors."""


class DomainError(QpotError):
    """A coordinate or parameter lies outside the physically valid domain."""


class ConfigError(QpotError):
    """Invalid configuration value or malformed config file."""


class GridError(QpotError):
    """Grids are incompatible or under-resolved for the requested operation."""


class NormalizationError(QpotError):
    """Wavefunction norm is zero or otherwise unusable."""


class ConstructionError(QpotError):
    """A packet constructor produced an unusable state (e.g. zero norm)."""


class NodeSingularity(QpotError):
    """Evaluation requested too close to a node of the oscillating profile."""

    def __init__(self, z, message=None):
        self.z = z
        super().__init__(message or f"profile node too close to z = {z!r}")


class EmptyFieldError(QpotError):
    """Every grid point of a derived field was masked invalid."""


class NumericsError(QpotError):
    """A linear solve or time step produced non-finite values."""


class TrajectoryLost(QpotError):
    """A trajectory left the region where the velocity field is valid."""

    def __init__(self, t, z=None):
        self.t = t
        self.z = z
        super().__init__(f"trajectory left the valid region at t = {t!r}")


class TruncationWarning(UserWarning):
    """Non-negligible probability mass falls outside the grid."""
