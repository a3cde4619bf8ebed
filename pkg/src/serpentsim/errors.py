"""Exception hierarchy shared across the package.

Every error carries a short machine-readable ``category`` used by the CLI to
pick an exit code and print a one-line diagnosis.
"""


class SerpentError(Exception):
    """Base class for all package errors."""

    category = "error"
    exit_code = 1


class InvalidDimensionError(SerpentError):
    category = "invalid-dimension"
    exit_code = 2


class NumericDomainError(SerpentError):
    category = "numeric-domain"
    exit_code = 2


class InvalidSpecError(SerpentError):
    category = "invalid-spec"
    exit_code = 2


class OutOfBoundsError(SerpentError):
    category = "out-of-bounds"
    exit_code = 2


class JointLimitError(SerpentError):
    category = "joint-limit"
    exit_code = 2


class SimulationDivergedError(SerpentError):
    category = "diverged"
    exit_code = 5


class NoPathError(SerpentError):
    category = "no-path"
    exit_code = 3


class InvalidEndpointError(SerpentError):
    category = "invalid-endpoint"
    exit_code = 3


class ShapeError(SerpentError):
    category = "shape"
    exit_code = 2


class DivergedTrainingError(SerpentError):
    category = "diverged-training"
    exit_code = 5


class CheckpointError(SerpentError):
    category = "checkpoint"
    exit_code = 7


class ProtocolError(SerpentError):
    category = "protocol"
    exit_code = 6


class CorruptionError(ProtocolError):
    category = "corruption"
    exit_code = 6


class VersionError(ProtocolError):
    category = "version"
    exit_code = 6


class StartupError(SerpentError):
    category = "startup"
    exit_code = 7


class ConfigError(SerpentError):
    category = "config"
    exit_code = 2


class DependencyError(SerpentError):
    category = "dependency"
    exit_code = 4
