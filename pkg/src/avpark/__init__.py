"""Grid A* approach planning, reverse parking manoeuvres and MPC tracking."""
from .clearance import ClearanceMatrix
from .exceptions import (AvparkError, DegenerateInput, EmptyGrid, ExitBlocked, GapTooLarge,
                         GoalOutOfBounds, Infeasible, IoError, NotFittedError, OutOfBounds,
                         ParseError, SpotTooSmall, StartBlocked, StartOutOfBounds)
from .map_io import OccupancyGrid, load_grid
from .mpc import MpcConfig, MpcController, ReferenceTrack
from .parking_geom import ParkingKind, ParkingPath, ParkingSpec, plan_parking
from .search import (AStarPlanner, ClearanceMode, Heuristic, Neighborhood, PlannerConfig,
                     SearchResult, Smoothing, plan)
from .sim import RunReport, Scenario, run_ablation, run_scenario
from .smoothing import BSplineSmoother, SplineConfig, smooth_path
from .vehicle import ControlInput, VehicleParams, VehicleState, step

__version__ = "0.1.0"
