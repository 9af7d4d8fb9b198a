import sys
from pathlib import Path

import numpy as np
import pytest

from graspbench.gripper import GripperModel
from graspbench.library import builtin_objects
from graspbench.perception import CameraIntrinsics, CameraPose
from graspbench.scene import NoiseModel, ScenePlacement, SceneSpec

ADAPTER_DIR = Path(__file__).parent / "adapters"


@pytest.fixture
def gripper():
    return GripperModel()


@pytest.fixture
def camera():
    return CameraIntrinsics(fx=580.0, fy=580.0, cx=319.5, cy=239.5, width=640, height=480)


@pytest.fixture
def camera_pose():
    return CameraPose()


@pytest.fixture
def library():
    return builtin_objects()


def single_object_scene(library, object_id, x=0.0, y=0.0, yaw=0.0, sigma=0.0, dropout=0.0, seed=0):
    return SceneSpec(
        objects={object_id: library[object_id]},
        placements=(ScenePlacement(object_id=object_id, x=x, y=y, yaw=yaw),),
        noise=NoiseModel(gaussian_sigma=sigma, dropout_probability=dropout, seed=seed),
    )


def adapter_command(name: str) -> str:
    return f"{sys.executable} {ADAPTER_DIR / name}"


@pytest.fixture
def scene_factory(library):
    def make(object_id, **kwargs):
        return single_object_scene(library, object_id, **kwargs)

    return make
