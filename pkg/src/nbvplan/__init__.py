"""Next-best-view camera placement for radiance-field capture."""

from .angular import BinLayout, SphericalHistogram, bin_index, make_layout, tv_distance
from .energy import (
    DeltaScorer,
    EnergyBreakdown,
    NodeGrid,
    ObservationState,
    apply_camera,
    candidate_delta,
    energy,
    observation_frequency,
)
from .geometry import (
    Aabb,
    CameraPose,
    Direction,
    Frustum,
    Intrinsics,
    build_frustum,
    direction_to_camera,
    observes,
)
from .occupancy import (
    BoxPrimitive,
    OccupancyGrid,
    PrimitiveScene,
    SpherePrimitive,
    binarize_density,
    clearance_along,
    is_free,
    load_scene,
    save_scene,
    voxelize,
)
from .planner import (
    PlannerConfig,
    PlanResult,
    baseline_hemisphere,
    baseline_random,
    greedy_step,
    plan,
    sample_candidates,
    select_from_pool,
)
from .evaluation import ComparisonReport, FloorplanMap, compare, coverage_curve, floorplan

__version__ = "0.1.0"
