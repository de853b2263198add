"""Exception types raised across the package."""


class WeedNavError(Exception):
    """Base class for all package errors."""


class ValidationError(WeedNavError, ValueError):
    """Input data or configuration failed validation (CLI exit code 2)."""


class InvalidRadius(ValidationError):
    pass


class InvalidStep(ValidationError):
    pass


class OutOfDomain(ValidationError):
    pass


class DiscontinuousTour(ValidationError):
    pass


class TooFewTargets(ValidationError):
    pass


class DuplicateTarget(ValidationError):
    pass


class PackingInfeasible(ValidationError):
    pass


class EmptySegment(ValidationError):
    pass


class SolverConfigError(WeedNavError, ValueError):
    """OCP parameters are inconsistent (CLI exit code 4)."""


class Infeasible(WeedNavError):
    """No admissible solution exists (e.g. a node of an ATSP has no outgoing arc)."""


class MissionFailed(WeedNavError):
    """Closed-loop mission aborted before all waypoints were reached.

    The partial :class:`~weednav.simulation.MissionLog` is attached as ``log``.
    """

    def __init__(self, waypoint_index, reason, log=None):
        super().__init__(f"mission failed at waypoint {waypoint_index}: {reason}")
        self.waypoint_index = waypoint_index
        self.reason = reason
        self.log = log
