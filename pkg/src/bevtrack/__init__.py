"""Ground-plane lifting, occlusion-bridging forecasts, and gated re-association.

The toolkit turns monocular 2D detections into metric bird's-eye-view tracks:
a homography estimated from a depth cloud lifts box feet onto the ground
plane (with a piecewise-linear far-field so distant pixels stay bounded),
occluded tracks keep moving under pluggable constant-velocity or multi-branch
motion models, and reappearing detections are re-associated through gated
geometric and appearance scores. A synthetic scene simulator and a metric
suite aimed at long-gap identity survival close the loop.
"""

from .boxes import PixelBox, covered_fraction, iou
from .config import RunConfig, config_from_dict, read_config, write_config
from .egomotion import EgomotionTrack, estimate_egomotion
from .errors import (
    BevTrackError,
    DeadForecast,
    DegenerateInput,
    HorizonInsideFootprint,
    InvalidScenario,
    MissingGroundTruth,
    NonMonotonicFrame,
    NonPositiveBox,
    OutOfDomain,
    ParseError,
)
from .evaluation import (
    DEFAULT_BUCKETS,
    EvalReport,
    OcclusionEvent,
    RecallBucket,
    count_lost,
    count_switches,
    evaluate_tracking,
    fde,
    id_recall,
    match_frames,
    occlusion_components,
)
from .forecast import (
    Forecast,
    ForecastBranch,
    MotionModelSpec,
    ObservedTrajectory,
    forecast,
    predicted_box,
    preprocess,
)
from .homography import (
    Homography,
    HomographyFit,
    estimate_homography,
    load_homography,
    save_homography,
)
from .linearized import LinearizedHomography, linearize
from .plane import GroundPlane, align_to_xy, fit_ground_plane
from .simulator import (
    AgentSpec,
    CameraSpec,
    Occluder,
    Scenario,
    SimOutput,
    build_scene_model,
    generate,
    read_scenario,
    sample_ground_correspondences,
    true_homography,
    write_scenario,
)
from .smoothing import smooth_constant_velocity
from .tracker import (
    Detection,
    MatchThresholds,
    SceneModel,
    Track,
    Tracker,
    TrackerConfig,
    assign,
    build_cost_matrix,
    prune_forecasts,
)

__version__ = "0.1.0"

__all__ = [
    "AgentSpec",
    "BevTrackError",
    "CameraSpec",
    "DEFAULT_BUCKETS",
    "DeadForecast",
    "DegenerateInput",
    "Detection",
    "EgomotionTrack",
    "EvalReport",
    "Forecast",
    "ForecastBranch",
    "GroundPlane",
    "Homography",
    "HomographyFit",
    "HorizonInsideFootprint",
    "InvalidScenario",
    "LinearizedHomography",
    "MatchThresholds",
    "MissingGroundTruth",
    "MotionModelSpec",
    "NonMonotonicFrame",
    "NonPositiveBox",
    "ObservedTrajectory",
    "Occluder",
    "OcclusionEvent",
    "OutOfDomain",
    "ParseError",
    "PixelBox",
    "RecallBucket",
    "RunConfig",
    "Scenario",
    "SceneModel",
    "SimOutput",
    "Track",
    "Tracker",
    "TrackerConfig",
    "align_to_xy",
    "assign",
    "build_cost_matrix",
    "build_scene_model",
    "config_from_dict",
    "count_lost",
    "count_switches",
    "covered_fraction",
    "estimate_egomotion",
    "estimate_homography",
    "evaluate_tracking",
    "fde",
    "fit_ground_plane",
    "forecast",
    "generate",
    "id_recall",
    "iou",
    "linearize",
    "load_homography",
    "match_frames",
    "occlusion_components",
    "predicted_box",
    "preprocess",
    "prune_forecasts",
    "read_config",
    "read_scenario",
    "sample_ground_correspondences",
    "save_homography",
    "smooth_constant_velocity",
    "true_homography",
    "write_config",
    "write_scenario",
]
