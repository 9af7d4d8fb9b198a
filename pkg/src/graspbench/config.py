"""TOML configuration: object libraries, scenes, and benchmark runs.

Configs are strict: unknown keys raise ConfigError with the offending key
path so typos fail loudly instead of silently using defaults.
"""

from __future__ import annotations

import sys
from pathlib import Path
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .bench import DEFAULT_POSES, AlgorithmSpec, BenchmarkConfig
from .errors import ConfigError
from .geometry import Point2, Polygon
from .gripper import GraspPose, GripperModel
from .library import builtin_objects
from .oracle import (
    DEFAULT_GRIP_FORCE,
    DEFAULT_SHAKE_MULTIPLIER,
    DEFAULT_WIDTH_TOLERANCE,
    DEFAULT_YAW_ANGLE,
)
from .perception import CameraIntrinsics, CameraPose
from .pipeline import PlannerSettings
from .scene import DEFAULT_WORKSPACE, NoiseModel, ObjectModel, ScenePlacement, SceneSpec


def _load_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", key=str(path)) from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}", key=str(path)) from exc


def _check_keys(d: dict, allowed, context: str) -> None:
    unknown = set(d) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}", key=context)


def _get(d, key, default, context, cast=float):
    try:
        return cast(d.get(key, default))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {exc}", key=context) from exc


# ---------------------------------------------------------------- library

def load_object_library(path) -> dict:
    """Read a TOML object library: per-object tiers, mass, friction, tags."""
    doc = _load_toml(path)
    _check_keys(doc, {"object"}, str(path))
    objects = {}
    for i, od in enumerate(doc.get("object", [])):
        ctx = f"object[{i}]"
        _check_keys(od, {"id", "mass", "friction_mu", "tags", "tier", "canonical_grasp"}, ctx)
        if "id" not in od:
            raise ConfigError("object needs an id", key=ctx)
        tiers = []
        for j, td in enumerate(od.get("tier", [])):
            _check_keys(td, {"height", "vertices"}, f"{ctx}.tier[{j}]")
            try:
                poly = Polygon.from_array(np.asarray(td["vertices"], dtype=float))
            except Exception as exc:
                raise ConfigError(f"bad tier polygon: {exc}", key=f"{ctx}.tier[{j}]") from exc
            tiers.append((poly, _get(td, "height", None, f"{ctx}.tier[{j}]")))
        grasp = None
        if "canonical_grasp" in od:
            gd = od["canonical_grasp"]
            _check_keys(gd, {"x", "y", "z", "theta", "width"}, f"{ctx}.canonical_grasp")
            grasp = GraspPose(
                x=float(gd["x"]), y=float(gd["y"]), z=float(gd["z"]),
                theta=float(gd["theta"]), width=float(gd["width"]),
            )
        obj = ObjectModel(
            id=str(od["id"]),
            tiers=tuple(tiers),
            mass=_get(od, "mass", None, ctx),
            friction_mu=_get(od, "friction_mu", None, ctx),
            tags=tuple(od.get("tags", [])),
            canonical_grasp=grasp,
        )
        objects[obj.id] = obj
    if not objects:
        raise ConfigError("library defines no objects", key=str(path))
    return objects


def dump_object_library(objects: dict) -> str:
    """Serialize a library to the TOML format load_object_library reads."""
    lines = []
    for obj in objects.values():
        lines.append("[[object]]")
        lines.append(f'id = "{obj.id}"')
        lines.append(f"mass = {obj.mass}")
        lines.append(f"friction_mu = {obj.friction_mu}")
        if obj.tags:
            lines.append("tags = [" + ", ".join(f'"{t}"' for t in obj.tags) + "]")
        if obj.canonical_grasp is not None:
            g = obj.canonical_grasp
            lines.append(
                "canonical_grasp = { "
                f"x = {g.x}, y = {g.y}, z = {g.z}, theta = {g.theta}, width = {g.width}"
                " }"
            )
        for poly, height in obj.tiers:
            lines.append("[[object.tier]]")
            lines.append(f"height = {height}")
            verts = ", ".join(f"[{p.x}, {p.y}]" for p in poly.vertices)
            lines.append(f"vertices = [{verts}]")
        lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------- camera

_CAMERA_KEYS = {"fx", "fy", "cx", "cy", "width", "height", "camera_height", "offset_x", "offset_y", "yaw"}


def _parse_camera(d: dict, context: str):
    _check_keys(d, _CAMERA_KEYS, context)
    intr = CameraIntrinsics(
        fx=_get(d, "fx", 580.0, context),
        fy=_get(d, "fy", 580.0, context),
        cx=_get(d, "cx", 319.5, context),
        cy=_get(d, "cy", 239.5, context),
        width=_get(d, "width", 640, context, cast=int),
        height=_get(d, "height", 480, context, cast=int),
    )
    pose = CameraPose(
        height_above_table=_get(d, "camera_height", 0.8, context),
        planar_offset=Point2(_get(d, "offset_x", 0.0, context), _get(d, "offset_y", 0.0, context)),
        yaw=_get(d, "yaw", 0.0, context),
    )
    return intr, pose


def _parse_noise(d: dict, context: str) -> NoiseModel:
    _check_keys(d, {"sigma", "dropout", "seed"}, context)
    return NoiseModel(
        gaussian_sigma=_get(d, "sigma", 0.0, context),
        dropout_probability=_get(d, "dropout", 0.0, context),
        seed=_get(d, "seed", 0, context, cast=int),
    )


def _parse_gripper(d: dict, context: str) -> GripperModel:
    return GripperModel.from_dict(d)


_PLANNER_KEYS = {
    "resolution", "fill", "table_epsilon", "top_band", "min_height",
    "sample_spacing", "hull_alpha", "normal_smoothing", "axis_alignment_limit",
    "force_weight", "moment_weight",
    "rotation_step", "opening_count", "stride", "centering_weight", "crop_margin",
}


def _parse_planner(d: dict, context: str) -> PlannerSettings:
    _check_keys(d, _PLANNER_KEYS, context)
    defaults = PlannerSettings()
    kwargs = {}
    for key in _PLANNER_KEYS:
        if key not in d:
            continue
        if key == "fill":
            kwargs[key] = str(d[key])
        elif key in ("opening_count", "stride"):
            kwargs[key] = _get(d, key, None, context, cast=int)
        else:
            kwargs[key] = _get(d, key, None, context)
    return PlannerSettings(**{**defaults.__dict__, **kwargs})


# ---------------------------------------------------------------- scene

def load_scene(path, library: Optional[dict] = None):
    """Read a scene TOML: placements, noise, camera. Returns (scene, intrinsics, pose)."""
    doc = _load_toml(path)
    ctx = str(path)
    _check_keys(doc, {"library", "workspace", "placement", "noise", "camera"}, ctx)
    if library is None:
        if "library" in doc:
            library = load_object_library(Path(path).parent / doc["library"])
        else:
            library = builtin_objects()
    placements = []
    for i, pd in enumerate(doc.get("placement", [])):
        pctx = f"placement[{i}]"
        _check_keys(pd, {"object", "x", "y", "yaw"}, pctx)
        if "object" not in pd:
            raise ConfigError("placement needs an object id", key=pctx)
        oid = str(pd["object"])
        if oid not in library:
            raise ConfigError(f"unknown object id {oid!r}", key=pctx)
        placements.append(
            ScenePlacement(
                object_id=oid,
                x=_get(pd, "x", 0.0, pctx),
                y=_get(pd, "y", 0.0, pctx),
                yaw=_get(pd, "yaw", 0.0, pctx),
            )
        )
    if not placements:
        raise ConfigError("scene has no placements", key=ctx)
    workspace = tuple(doc.get("workspace", DEFAULT_WORKSPACE))
    noise = _parse_noise(doc.get("noise", {}), f"{ctx}.noise")
    intr, campose = _parse_camera(doc.get("camera", {}), f"{ctx}.camera")
    objects = {p.object_id: library[p.object_id] for p in placements}
    scene = SceneSpec(objects=objects, placements=tuple(placements), noise=noise, workspace=workspace)
    return scene, intr, campose


# ---------------------------------------------------------------- benchmark

_BENCH_KEYS = {
    "objects", "library", "workspace", "seed", "output_dir", "workers",
    "grip_force", "width_tolerance", "yaw_angle", "shake_multiplier",
    "pose", "algorithm", "gripper", "noise", "camera", "planner",
}


def load_benchmark_config(path, overrides: Optional[dict] = None) -> BenchmarkConfig:
    """Read a benchmark TOML; `overrides` (flag values) win over file values."""
    doc = _load_toml(path)
    ctx = str(path)
    _check_keys(doc, _BENCH_KEYS, ctx)
    overrides = overrides or {}

    library = None
    if "library" in doc:
        library = load_object_library(Path(path).parent / doc["library"])

    poses = DEFAULT_POSES
    if "pose" in doc:
        parsed = []
        for i, pd in enumerate(doc["pose"]):
            pctx = f"pose[{i}]"
            _check_keys(pd, {"x", "y", "yaw"}, pctx)
            parsed.append((_get(pd, "x", 0.0, pctx), _get(pd, "y", 0.0, pctx), _get(pd, "yaw", 0.0, pctx)))
        if not parsed:
            raise ConfigError("pose list is empty", key=ctx)
        poses = tuple(parsed)

    algorithms = []
    for i, ad in enumerate(doc.get("algorithm", [])):
        actx = f"algorithm[{i}]"
        _check_keys(ad, {"builtin", "external", "name", "timeout", "reentrant"}, actx)
        if "builtin" in ad and "external" in ad:
            raise ConfigError("algorithm is either builtin or external", key=actx)
        if "builtin" in ad:
            algorithms.append(AlgorithmSpec(name=str(ad["builtin"]), kind="builtin"))
        elif "external" in ad:
            name = str(ad.get("name", f"external{i}"))
            algorithms.append(
                AlgorithmSpec(
                    name=name,
                    kind="external",
                    command=str(ad["external"]),
                    timeout=_get(ad, "timeout", 30.0, actx),
                    reentrant=bool(ad.get("reentrant", True)),
                )
            )
        else:
            raise ConfigError("algorithm needs builtin= or external=", key=actx)
    if not algorithms:
        algorithms = [AlgorithmSpec("topsurface"), AlgorithmSpec("mask")]

    intr, campose = _parse_camera(doc.get("camera", {}), f"{ctx}.camera")
    seed = overrides.get("seed", doc.get("seed", 0))
    output_dir = overrides.get("output_dir", doc.get("output_dir"))
    workers = overrides.get("workers", doc.get("workers", 0))

    return BenchmarkConfig(
        objects=tuple(doc.get("objects", ())),
        poses=poses,
        algorithms=tuple(algorithms),
        gripper=_parse_gripper(doc.get("gripper", {}), f"{ctx}.gripper"),
        noise=_parse_noise(doc.get("noise", {"sigma": 0.002, "dropout": 0.01}), f"{ctx}.noise"),
        grip_force=_get(doc, "grip_force", DEFAULT_GRIP_FORCE, ctx),
        width_tolerance=_get(doc, "width_tolerance", DEFAULT_WIDTH_TOLERANCE, ctx),
        yaw_angle=_get(doc, "yaw_angle", DEFAULT_YAW_ANGLE, ctx),
        shake_multiplier=_get(doc, "shake_multiplier", DEFAULT_SHAKE_MULTIPLIER, ctx),
        seed=int(seed),
        output_dir=str(output_dir) if output_dir else None,
        workers=int(workers),
        intrinsics=intr,
        camera_pose=campose,
        planner=_parse_planner(doc.get("planner", {}), f"{ctx}.planner"),
        library=library,
        workspace=tuple(doc.get("workspace", DEFAULT_WORKSPACE)),
    )
