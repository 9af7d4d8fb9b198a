"""graspbench: planar grasp synthesis from depth images plus a deterministic benchmark.

Two analytical planners (top-surface hull search and dense mask
convolution) operate on top-down depth images; a synthetic scene
simulator and a quasi-static grasp oracle stand in for a physical robot,
and the benchmark harness scores objects x poses x algorithms on the
0-3 pick/yaw/shake scale.
"""

__version__ = "0.1.0"

from .errors import (
    AdapterError,
    AdapterInvalidGrasp,
    AdapterProtocolError,
    AdapterTimeout,
    ConfigError,
    DegenerateInput,
    DimensionMismatch,
    EmptyScene,
    GraspBenchError,
    InconsistentTrials,
    NoFeasibleGrasp,
    OutOfBounds,
    PlacementOutOfBounds,
    SceneError,
)
from .geometry import Point2, Polygon, HullSample, concave_hull, polygon_centroid, ray_cast, sample_hull_normals
from .gripper import GraspPose, GripperModel
from .perception import (
    CameraIntrinsics,
    CameraPose,
    DepthImage,
    HeightMap,
    PointCloud,
    deproject,
    extract_top_surface,
    remove_table,
    segment_largest_object,
    to_heightmap,
)
from .scene import NoiseModel, ObjectModel, ScenePlacement, SceneSpec, render_depth, render_heightmap
from .oracle import PickOutcome, evaluate_grasp, evaluate_pick, evaluate_stability
from .top_surface import GraspCandidate, compute_grasp_depth, grasp_quality, synthesize_top_surface
from .mask_planner import MaskScoreField, MaskTemplate, generate_masks, mask_score, synthesize_mask
from .pipeline import PlannerSettings, plan_grasp
from .library import builtin_objects
from .bench import (
    AlgorithmSpec,
    BenchmarkConfig,
    BenchmarkReport,
    TrialRecord,
    aggregate,
    run_benchmark,
    score_trial,
)
from .adapter import AdapterRequest, run_external_algorithm
