"""Exception types shared across the library."""


class GraspBenchError(Exception):
    """Base class for all graspbench errors."""


class DegenerateInput(GraspBenchError):
    """Geometry input too degenerate to process (collinear, too few points, zero area)."""


class EmptyScene(GraspBenchError):
    """No object material found where some was required."""


class NoFeasibleGrasp(GraspBenchError):
    """The planner found no grasp compatible with the gripper."""


class OutOfBounds(GraspBenchError):
    """A requested footprint or index leaves the heightmap grid."""


class DimensionMismatch(GraspBenchError):
    """Image dimensions disagree with the camera intrinsics."""


class PlacementOutOfBounds(GraspBenchError):
    """An object placement leaves the table workspace."""


class SceneError(GraspBenchError):
    """Scene construction or rendering failed."""


class ConfigError(GraspBenchError):
    """Invalid configuration; `key` holds the offending key path."""

    def __init__(self, message: str, key: str = ""):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class InconsistentTrials(GraspBenchError):
    """Trial set contains duplicate (object, pose, algorithm) keys."""


class AdapterError(GraspBenchError):
    """Base class for external-algorithm adapter failures."""


class AdapterTimeout(AdapterError):
    """External algorithm did not answer within the timeout."""


class AdapterProtocolError(AdapterError):
    """External algorithm wrote a malformed response."""


class AdapterInvalidGrasp(AdapterError):
    """External algorithm answered with a grasp violating pose invariants."""
