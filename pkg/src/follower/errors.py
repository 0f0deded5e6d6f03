"""Exception hierarchy. Each class carries the CLI exit code for its category."""


class FollowerError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class UsageError(FollowerError):
    """Invalid arguments or configuration values."""

    exit_code = 2


class MapError(FollowerError):
    """Malformed map file or infeasible map generation."""

    exit_code = 3

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class CheckpointError(FollowerError):
    """Checkpoint file missing, malformed, or incompatible with the architecture."""

    exit_code = 4


class ScenarioError(FollowerError):
    """Scenario cannot be run (infeasible agent count, finished episode, ...)."""

    exit_code = 5
