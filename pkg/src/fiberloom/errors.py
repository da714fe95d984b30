"""Exception hierarchy, aligned with the CLI exit codes."""


class FiberloomError(Exception):
    """Base class for all fiberloom errors."""

    exit_code = 1


class InputError(FiberloomError):
    """Invalid project file or inconsistent graph data (exit code 2)."""

    exit_code = 2


class InfeasibleError(FiberloomError):
    """No admissible loop configuration for a layer (exit code 3)."""

    exit_code = 3


class GeometryError(FiberloomError):
    """Path construction failed, e.g. a junction too tight for the
    requested turning radius (exit code 4)."""

    exit_code = 4


class IntractableError(FiberloomError):
    """Exhaustive enumeration refused because the search space is too
    large (exit code 5)."""

    exit_code = 5
