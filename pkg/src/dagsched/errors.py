"""Exception hierarchy shared by every dagsched module."""


class DagschedError(Exception):
    """Base class for all library errors."""


class ValidationError(DagschedError, ValueError):
    """Input violates a documented invariant (bad range, malformed file, ...)."""


class CyclicGraphError(ValidationError):
    """A task graph contains a directed cycle."""


class ScheduleError(ValidationError):
    """A schedule is incomplete or inconsistent with its task graph."""


class InfeasibleOrderError(ScheduleError):
    """Per-machine execution orders deadlock against the task dependencies."""


class IncompatibleModelError(DagschedError):
    """A trained model does not match the machine count of the input."""


class CheckpointError(DagschedError):
    """A model checkpoint is truncated, corrupt or of an unknown version."""
