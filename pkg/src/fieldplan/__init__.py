"""Precomputed vector-field motion plans for constant-speed vehicles with
bounded curvature, verified by closed-loop kinematic simulation."""

from .errors import (
    AssumptionViolation,
    ConstraintError,
    FieldPlanError,
    MapParseError,
    OutOfBoundsError,
)
from .field import (
    EdgeKind,
    EdgeSet,
    TransitionParams,
    VectorField,
    apply_transition,
    border_edges,
    gaussian_kernel,
    path_edges,
    raw_field,
    smooth_field,
)
from .gridmap import (
    CellClass,
    CompleteMap,
    GoalCells,
    GoalKind,
    OccupancyBitmap,
    buffer_width_cells,
    generate_complete_map,
    load_bitmap,
    rasterize_path,
)
from .metrics import MetricsReport, cross_track, evaluate, heading_metrics
from .plan import LookupMode, PlanParams, field_direction, heading_error, plan_action
from .sim import (
    GoalRadiusInterpretation,
    Integrator,
    Outcome,
    PathGoal,
    SingleGoal,
    Trajectory,
    VehicleState,
    in_goal,
    simulate,
    simulate_batch,
    step,
)
from .wavefront import CellMark, CostMap, expand_wavefront

__version__ = "0.1.0"
