"""Exception hierarchy shared by all planner modules."""


class ParkPlanError(Exception):
    pass


class ParseError(ParkPlanError):
    pass


class BoundsError(ParkPlanError):
    pass


class DomainError(ParkPlanError):
    pass


class EmptyError(ParkPlanError):
    pass


class StartBlockedError(ParkPlanError):
    pass


class PathNotFound(ParkPlanError):
    pass


class InternalError(ParkPlanError):
    pass


class DegenerateInput(ParkPlanError):
    pass


class GeometryError(ParkPlanError):
    pass


class IoError(ParkPlanError):
    pass


class Infeasible(ParkPlanError):
    """Solver hit its iteration cap without meeting the constraint tolerance.

    ``best`` holds the best iterate found (an ``OptimizedTrajectory``) and
    ``violation`` its maximum constraint violation.
    """

    def __init__(self, message, best=None, violation=float("nan")):
        super().__init__(message)
        self.best = best
        self.violation = violation


class TrackingFailure(ParkPlanError):
    """Closed-loop tracking diverged; ``log`` is the partial ``DriveLog``."""

    def __init__(self, message, log=None):
        super().__init__(message)
        self.log = log
