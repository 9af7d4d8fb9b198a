"""Benchmark harness: objects x poses x algorithms with 0-3 scoring.

Each trial renders the scene, runs one algorithm on the rendered depth,
and scores the returned grasp with the deterministic oracle: one point
for the lift, one for the yaw test, one for the shake test. Planner and
adapter failures never abort a run; they score 0 with a recorded reason.
Reports are reproducible: identical config and seed give byte-identical
output files, with timings and timestamps kept in a separate metadata
file.
"""

from __future__ import annotations

import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import __version__
from .adapter import DEFAULT_TIMEOUT, AdapterRequest, run_external_algorithm
from .depth_io import sidecar_path, write_depth_png, write_intrinsics_sidecar
from .errors import (
    AdapterInvalidGrasp,
    AdapterProtocolError,
    AdapterTimeout,
    ConfigError,
    DegenerateInput,
    EmptyScene,
    GraspBenchError,
    InconsistentTrials,
    NoFeasibleGrasp,
    SceneError,
)
from .gripper import GraspPose, GripperModel
from .library import builtin_objects
from .oracle import (
    DEFAULT_GRIP_FORCE,
    DEFAULT_SHAKE_MULTIPLIER,
    DEFAULT_WIDTH_TOLERANCE,
    DEFAULT_YAW_ANGLE,
    PickOutcome,
    evaluate_grasp,
)
from .perception import CameraIntrinsics, CameraPose
from .pipeline import BUILTIN_ALGORITHMS, PlannerSettings, perceive, plan_grasp
from .scene import NoiseModel, ScenePlacement, SceneSpec, render_depth

DEFAULT_CAMERA = CameraIntrinsics(fx=580.0, fy=580.0, cx=319.5, cy=239.5, width=640, height=480)

# 3 translations x 2 yaws inside the 0.6 m workspace
DEFAULT_POSES = (
    (0.0, 0.0, 0.0),
    (0.15, 0.0, 0.0),
    (0.0, 0.15, 0.0),
    (0.0, 0.0, math.pi / 4),
    (0.15, 0.0, math.pi / 4),
    (0.0, 0.15, math.pi / 4),
)


@dataclass(frozen=True)
class AlgorithmSpec:
    """One benchmarked algorithm: a builtin planner or an external command."""

    name: str
    kind: str = "builtin"  # builtin | external | callable
    command: Optional[str] = None
    timeout: float = DEFAULT_TIMEOUT
    reentrant: bool = True
    fn: Optional[Callable] = None  # callable kind: fn(TrialInputs) -> GraspPose

    def __post_init__(self):
        if self.kind not in ("builtin", "external", "callable"):
            raise ConfigError(f"unknown algorithm kind {self.kind!r}", key="algorithm.kind")
        if self.kind == "builtin" and self.name not in BUILTIN_ALGORITHMS:
            raise ConfigError(
                f"unknown builtin {self.name!r}, expected one of {BUILTIN_ALGORITHMS}",
                key="algorithm.builtin",
            )
        if self.kind == "external" and not self.command:
            raise ConfigError("external algorithm needs a command", key="algorithm.external")


@dataclass(frozen=True)
class TrialInputs:
    """Everything one trial hands to a planner; stubs may inspect the scene.

    `percept` is None unless a builtin planner already deprojected the
    depth image for this scene; callable planners that need it can run
    `pipeline.perceive` themselves.
    """

    depth: object
    intrinsics: CameraIntrinsics
    camera_pose: CameraPose
    gripper: GripperModel
    settings: PlannerSettings
    percept: Optional[tuple]
    scene: SceneSpec
    placement: ScenePlacement


@dataclass(frozen=True)
class BenchmarkConfig:
    objects: tuple = ()  # empty: all library objects
    poses: tuple = DEFAULT_POSES
    algorithms: tuple = (AlgorithmSpec("topsurface"), AlgorithmSpec("mask"))
    gripper: GripperModel = field(default_factory=GripperModel)
    noise: NoiseModel = field(default_factory=lambda: NoiseModel(gaussian_sigma=0.002, dropout_probability=0.01))
    grip_force: float = DEFAULT_GRIP_FORCE
    width_tolerance: float = DEFAULT_WIDTH_TOLERANCE
    yaw_angle: float = DEFAULT_YAW_ANGLE
    shake_multiplier: float = DEFAULT_SHAKE_MULTIPLIER
    seed: int = 0
    output_dir: Optional[str] = None
    workers: int = 0  # 0: use available parallelism
    intrinsics: CameraIntrinsics = DEFAULT_CAMERA
    camera_pose: CameraPose = field(default_factory=CameraPose)
    planner: PlannerSettings = field(default_factory=PlannerSettings)
    library: Optional[dict] = None  # id -> ObjectModel; None: builtin library
    workspace: tuple = (0.6, 0.6)

    def resolve_objects(self) -> tuple:
        lib = self.library if self.library is not None else builtin_objects()
        ids = self.objects or tuple(lib.keys())
        for oid in ids:
            if oid not in lib:
                raise ConfigError(f"unknown object id {oid!r}", key="objects")
        if not self.algorithms:
            raise ConfigError("need at least one algorithm", key="algorithms")
        return ids, lib


@dataclass(frozen=True)
class TrialRecord:
    object_id: str
    pose_index: int
    algorithm: str
    grasp: Optional[GraspPose]
    outcome: PickOutcome
    score: int
    planner_time: float
    failure_reason: str

    def __post_init__(self):
        if self.score != self.outcome.score:
            raise InconsistentTrials(
                f"score {self.score} disagrees with outcome {self.outcome}"
            )

    def key(self):
        return (self.algorithm, self.object_id, self.pose_index)

    def to_json_dict(self) -> dict:
        return {
            "object_id": self.object_id,
            "pose_index": self.pose_index,
            "algorithm": self.algorithm,
            "grasp": self.grasp.to_json_dict() if self.grasp is not None else None,
            "outcome": self.outcome.to_json_dict(),
            "score": self.score,
            "failure_reason": self.failure_reason,
        }


@dataclass(frozen=True)
class BenchmarkReport:
    trials: tuple
    object_scores: dict  # (algorithm, object_id) -> int
    totals: dict  # algorithm -> int
    pose_counts: dict  # (algorithm, object_id) -> int
    config_echo: dict
    version: str
    warnings: tuple = ()

    @property
    def algorithms(self) -> tuple:
        return tuple(sorted(self.totals))

    @property
    def object_ids(self) -> tuple:
        seen = []
        for t in self.trials:
            if t.object_id not in seen:
                seen.append(t.object_id)
        return tuple(seen)


def score_trial(outcome: PickOutcome) -> int:
    """Protocol score: lift, yaw and shake are one point each."""
    return int(outcome.lifted) + int(outcome.yaw_pass) + int(outcome.shake_pass)


def aggregate(trials, config_echo: Optional[dict] = None) -> BenchmarkReport:
    """Sum trial scores per (algorithm, object) and per algorithm."""
    seen = set()
    for t in trials:
        if t.key() in seen:
            raise InconsistentTrials(f"duplicate trial key {t.key()}")
        seen.add(t.key())
    object_scores: dict = {}
    pose_counts: dict = {}
    for t in trials:
        k = (t.algorithm, t.object_id)
        object_scores[k] = object_scores.get(k, 0) + t.score
        pose_counts[k] = pose_counts.get(k, 0) + 1
    totals: dict = {}
    for (alg, _), s in object_scores.items():
        totals[alg] = totals.get(alg, 0) + s
    warnings = tuple(
        f"{alg}/{obj}: {n} poses (max score {3 * n}, not the standard 18)"
        for (alg, obj), n in sorted(pose_counts.items())
        if n != 6
    )
    ordered = tuple(sorted(trials, key=lambda t: t.key()))
    return BenchmarkReport(
        trials=ordered,
        object_scores=object_scores,
        totals=totals,
        pose_counts=pose_counts,
        config_echo=config_echo or {},
        version=__version__,
        warnings=warnings,
    )


def _scene_seed(base: int, obj_index: int, pose_index: int) -> int:
    ss = np.random.SeedSequence(entropy=base, spawn_key=(obj_index, pose_index))
    return int(ss.generate_state(1, dtype=np.uint64)[0] % (2**63))


_FAILED = PickOutcome(lifted=False, yaw_pass=False, shake_pass=False, failure_reason="none")

_PLANNER_FAILURES = {
    NoFeasibleGrasp: "no_feasible_grasp",
    EmptyScene: "empty_scene",
    DegenerateInput: "degenerate_input",
    AdapterTimeout: "adapter_timeout",
    AdapterProtocolError: "adapter_protocol_error",
    AdapterInvalidGrasp: "adapter_invalid_grasp",
}


def _failure_name(exc: Exception) -> str:
    for cls, name in _PLANNER_FAILURES.items():
        if isinstance(exc, cls):
            return name
    return "planner_error"


def _build_scene(config: BenchmarkConfig, lib, oid: str, obj_index: int, pose_index: int) -> SceneSpec:
    x, y, yaw = config.poses[pose_index]
    placement = ScenePlacement(object_id=oid, x=x, y=y, yaw=yaw)
    noise = replace(config.noise, seed=_scene_seed(config.seed, obj_index, pose_index))
    return SceneSpec(
        objects={oid: lib[oid]},
        placements=(placement,),
        noise=noise,
        workspace=config.workspace,
    )


def _run_scene_trials(args):
    """Worker task: render one scene once and run a set of algorithms on it."""
    config, lib, oid, obj_index, pose_index, algorithms, scratch_dir = args
    scene = _build_scene(config, lib, oid, obj_index, pose_index)
    try:
        depth = render_depth(scene, config.intrinsics, config.camera_pose)
    except GraspBenchError as exc:
        raise SceneError(f"rendering {oid} pose {pose_index} failed: {exc}") from exc
    percept = None
    depth_path = None
    records = []
    for spec in algorithms:
        t0 = time.perf_counter()
        grasp = None
        reason = "none"
        try:
            if spec.kind == "builtin":
                if percept is None:
                    percept = perceive(depth, config.intrinsics, config.camera_pose, config.planner)
                grasp = plan_grasp(
                    spec.name, depth, config.intrinsics, config.camera_pose,
                    config.gripper, config.planner, percept=percept,
                )
            elif spec.kind == "callable":
                inputs = TrialInputs(
                    depth=depth, intrinsics=config.intrinsics, camera_pose=config.camera_pose,
                    gripper=config.gripper, settings=config.planner, percept=percept,
                    scene=scene, placement=scene.placements[0],
                )
                grasp = spec.fn(inputs)
            else:
                if depth_path is None:
                    depth_path = Path(scratch_dir) / f"{oid}_{pose_index}.png"
                    write_depth_png(depth_path, depth)
                    write_intrinsics_sidecar(
                        sidecar_path(depth_path), config.intrinsics, config.camera_pose
                    )
                request = AdapterRequest(
                    depth_png=str(depth_path),
                    intrinsics=str(sidecar_path(depth_path)),
                    gripper=config.gripper,
                )
                grasp = run_external_algorithm(request, spec.command, timeout=spec.timeout)
        except Exception as exc:  # a failed planner is a scored outcome, not an abort
            reason = _failure_name(exc)
        planner_time = time.perf_counter() - t0

        if grasp is None:
            outcome = _FAILED
        else:
            outcome = evaluate_grasp(
                scene, grasp, config.gripper,
                grip_force=config.grip_force,
                width_tolerance=config.width_tolerance,
                yaw_angle=config.yaw_angle,
                shake_multiplier=config.shake_multiplier,
            )
            reason = outcome.failure_reason
        records.append(
            TrialRecord(
                object_id=oid,
                pose_index=pose_index,
                algorithm=spec.name,
                grasp=grasp,
                outcome=outcome,
                score=score_trial(outcome),
                planner_time=planner_time,
                failure_reason=reason,
            )
        )
    return records


def run_benchmark(config: BenchmarkConfig) -> BenchmarkReport:
    """Execute the full protocol and (when configured) write the report files.

    Deterministic given config + seed. A planner or adapter failure scores
    0 and the run continues; only scene rendering errors abort.
    """
    ids, lib = config.resolve_objects()
    names = [a.name for a in config.algorithms]
    if len(set(names)) != len(names):
        raise ConfigError("duplicate algorithm names", key="algorithms")

    parallel_algs = tuple(a for a in config.algorithms if a.kind != "external" or a.reentrant)
    serial_algs = tuple(a for a in config.algorithms if a.kind == "external" and not a.reentrant)
    workers = config.workers if config.workers > 0 else (os.cpu_count() or 1)

    records: list = []
    wall_start = time.perf_counter()
    with tempfile.TemporaryDirectory(prefix="graspbench_") as scratch:
        tasks = [
            (config, lib, oid, oi, pi, parallel_algs, scratch)
            for oi, oid in enumerate(ids)
            for pi in range(len(config.poses))
        ]
        if parallel_algs:
            if workers > 1 and len(tasks) > 1:
                with ProcessPoolExecutor(max_workers=workers) as pool:
                    for batch in pool.map(_run_scene_trials, tasks, chunksize=1):
                        records.extend(batch)
            else:
                for task in tasks:
                    records.extend(_run_scene_trials(task))
        for spec in serial_algs:
            for oi, oid in enumerate(ids):
                for pi in range(len(config.poses)):
                    records.extend(
                        _run_scene_trials((config, lib, oid, oi, pi, (spec,), scratch))
                    )
    wall = time.perf_counter() - wall_start

    report = aggregate(records, config_echo=_config_echo(config, ids))
    if config.output_dir:
        from .report import write_report

        write_report(report, config.output_dir, wall_seconds=wall)
    return report


def _config_echo(config: BenchmarkConfig, ids) -> dict:
    return {
        "objects": list(ids),
        "poses": [list(p) for p in config.poses],
        "algorithms": [
            {"name": a.name, "kind": a.kind, "command": a.command} for a in config.algorithms
        ],
        "gripper": config.gripper.to_json_dict(),
        "noise": {
            "gaussian_sigma": config.noise.gaussian_sigma,
            "dropout_probability": config.noise.dropout_probability,
        },
        "grip_force": config.grip_force,
        "width_tolerance": config.width_tolerance,
        "yaw_angle": config.yaw_angle,
        "shake_multiplier": config.shake_multiplier,
        "seed": config.seed,
        "resolution": config.planner.resolution,
        "workspace": list(config.workspace),
    }
