"""Control-revision safety shield.

Takes a planner's proposed vehicle control, heterogeneous perception
(vectorized boxes and/or occupancy grids), and road geometry, and returns a
minimally modified control satisfying barrier-function safety constraints for
obstacles and road boundaries. Ships with a closed-loop scenario simulator and
a CLI for batch evaluation.
"""

from .barrier import (BarrierParams, CoincidentCentersError, ConstraintRow,
                      ObstacleState, eval_h, eval_h_dot, eval_h_gradient,
                      feasibility_barrier, feasibility_constraint_row,
                      lon_lat_distance, obstacle_constraint_row,
                      road_constraint_rows, safety_coefficients)
from .geometry import BoundingBox, convex_hull, min_area_rect, rect_overlap
from .perception import (CellCluster, ConversionConfig, GridFormatError,
                         OccupancyGrid, cluster_cells, convert, load_grid,
                         parse_grid, rasterize_boxes, subtract_covered_cells)
from .planner import PlannerParams, PurePursuitPlanner
from .qp import QpProblem, QpSolution, kkt_check, solve
from .road import (FrenetState, RoadModel, SingularFrenetError,
                   frenet_derivative, frenet_step, frenet_to_cartesian,
                   project_to_frenet)
from .safety_filter import (FilterConfig, RevisionResult, SafetyFilter,
                            select_risky_obstacles)
from .scenario import (OgmFixture, ScenarioError, ScenarioSpec, load_scenario,
                       override_spec, parse_scenario)
from .simulator import (CollisionEvent, Metrics, SimulationTrace,
                        classify_fault, compute_metrics, detect_collision,
                        run_scenario)
from .vehicle import (ControlInput, ControlLimits, VehicleGeometry,
                      VehicleState, cartesian_derivative, step)

__version__ = "0.1.0"

__all__ = [
    "BarrierParams", "BoundingBox", "CellCluster", "CoincidentCentersError",
    "CollisionEvent", "ConstraintRow", "ControlInput", "ControlLimits",
    "ConversionConfig", "FilterConfig", "FrenetState", "GridFormatError",
    "Metrics", "ObstacleState", "OccupancyGrid", "OgmFixture", "PlannerParams",
    "PurePursuitPlanner", "QpProblem", "QpSolution", "RevisionResult",
    "RoadModel", "SafetyFilter", "ScenarioError", "ScenarioSpec",
    "SimulationTrace", "SingularFrenetError", "VehicleGeometry", "VehicleState",
    "cartesian_derivative", "classify_fault", "cluster_cells", "compute_metrics",
    "convert", "convex_hull", "detect_collision", "eval_h", "eval_h_dot",
    "eval_h_gradient", "feasibility_barrier", "feasibility_constraint_row",
    "frenet_derivative", "frenet_step", "frenet_to_cartesian", "kkt_check",
    "load_grid", "load_scenario", "lon_lat_distance", "min_area_rect",
    "obstacle_constraint_row", "override_spec", "parse_grid", "parse_scenario",
    "project_to_frenet", "rasterize_boxes", "rect_overlap",
    "road_constraint_rows", "run_scenario", "safety_coefficients",
    "select_risky_obstacles", "solve", "step", "subtract_covered_cells",
]
