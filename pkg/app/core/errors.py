"""
Exception bases shared by the lab services.

Each service declares its own concrete errors next to the code that raises
them; the bases here only decide how the CLI reports a failure.
"""


class LabError(Exception):
    """Root of every error raised on purpose by the lab."""

    exit_code = 1


class ValidationFailure(LabError):
    """Inputs violate a documented precondition (CLI exit code 2)."""

    exit_code = 2


class ResourceLimitError(LabError):
    """A configured size or length cap would be exceeded (CLI exit code 3)."""

    exit_code = 3


class MissingArtifactError(LabError):
    """A command needs an artifact that an earlier command did not produce."""

    exit_code = 2
