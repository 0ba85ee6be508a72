"""Parking path planning: lazy-inflation grid A*, B-spline smoothing and an
optimization-based collision-free trajectory planner, with a benchmark harness."""

from .errors import (BoundsError, DegenerateInput, DomainError, EmptyError, GeometryError,
                     Infeasible, InternalError, IoError, ParkPlanError, ParseError, PathNotFound,
                     StartBlockedError, TrackingFailure)
from .gridmap import OccupancyGrid, TraversabilityMatrix, load_pgm, read_pgm
from .search import PlanResult, SearchConfig, plan
from .smooth import SplineConfig, smooth_path
from .vehicle import Trajectory, VehicleParams, VehicleState
from .optimizer import ParkingProblem, solve_parking, verify_trajectory

__version__ = "0.1.0"

__all__ = [
    "BoundsError", "DegenerateInput", "DomainError", "EmptyError", "GeometryError", "Infeasible",
    "InternalError", "IoError", "ParkPlanError", "ParseError", "PathNotFound", "StartBlockedError",
    "TrackingFailure", "OccupancyGrid", "TraversabilityMatrix", "load_pgm", "read_pgm",
    "PlanResult", "SearchConfig", "plan", "SplineConfig", "smooth_path", "Trajectory",
    "VehicleParams", "VehicleState", "ParkingProblem", "solve_parking", "verify_trajectory",
]
