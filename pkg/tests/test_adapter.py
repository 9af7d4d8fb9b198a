"""External algorithm adapter: line protocol, timeouts, validation."""

import numpy as np
import pytest

from conftest import adapter_command
from graspbench.adapter import AdapterRequest, run_external_algorithm
from graspbench.bench import AlgorithmSpec, BenchmarkConfig, run_benchmark
from graspbench.depth_io import sidecar_path, write_depth_png, write_intrinsics_sidecar
from graspbench.errors import AdapterInvalidGrasp, AdapterProtocolError, AdapterTimeout
from graspbench.perception import DepthImage
from graspbench.scene import NoiseModel


@pytest.fixture
def request_files(tmp_path, gripper, camera, camera_pose):
    depth = tmp_path / "scene.png"
    write_depth_png(depth, DepthImage(np.full((camera.height, camera.width), 0.8)))
    write_intrinsics_sidecar(sidecar_path(depth), camera, camera_pose)
    return AdapterRequest(
        depth_png=str(depth), intrinsics=str(sidecar_path(depth)), gripper=gripper
    )


def test_echo_stub_returns_valid_grasp(request_files, gripper):
    pose = run_external_algorithm(request_files, adapter_command("echo_stub.py"))
    pose.validate(gripper)
    assert pose.width == pytest.approx(0.75 * gripper.max_opening)


def test_malformed_stub_raises_protocol_error(request_files):
    with pytest.raises(AdapterProtocolError):
        run_external_algorithm(request_files, adapter_command("malformed_stub.py"))


def test_sleeping_stub_times_out(request_files):
    with pytest.raises(AdapterTimeout):
        run_external_algorithm(request_files, adapter_command("sleeping_stub.py"), timeout=1.5)


def test_unspawnable_command(request_files):
    with pytest.raises(AdapterProtocolError):
        run_external_algorithm(request_files, "/nonexistent/binary")


def test_invalid_grasp_rejected(request_files, tmp_path):
    stub = tmp_path / "wide.py"
    stub.write_text(
        "import sys, json\n"
        "sys.stdin.readline()\n"
        'print(json.dumps({"x": 0, "y": 0, "z": 0.02, "theta_rad": 0.0, "width": 9.9}))\n',
        encoding="utf-8",
    )
    import sys

    with pytest.raises(AdapterInvalidGrasp):
        run_external_algorithm(request_files, f"{sys.executable} {stub}")


def test_adapters_inside_benchmark_never_abort():
    config = BenchmarkConfig(
        objects=("small_cube",),
        poses=((0.0, 0.0, 0.0), (0.1, 0.0, 0.0)),
        algorithms=(
            AlgorithmSpec("echo", kind="external", command=adapter_command("echo_stub.py")),
            AlgorithmSpec("garbled", kind="external", command=adapter_command("malformed_stub.py")),
            AlgorithmSpec("sleepy", kind="external", command=adapter_command("sleeping_stub.py"), timeout=1.5),
        ),
        noise=NoiseModel(),
        seed=3,
        workers=1,
    )
    report = run_benchmark(config)
    assert len(report.trials) == 6
    by_alg = {a: [t for t in report.trials if t.algorithm == a] for a in ("echo", "garbled", "sleepy")}
    assert all(t.failure_reason == "adapter_protocol_error" and t.score == 0 for t in by_alg["garbled"])
    assert all(t.failure_reason == "adapter_timeout" and t.score == 0 for t in by_alg["sleepy"])
    # the echo grasp is a real attempt: it gets scored by the oracle, whatever the result
    assert all(t.grasp is not None for t in by_alg["echo"])


def test_non_reentrant_adapter_runs_serially():
    config = BenchmarkConfig(
        objects=("small_cube",),
        poses=((0.0, 0.0, 0.0),),
        algorithms=(
            AlgorithmSpec(
                "solo", kind="external", command=adapter_command("echo_stub.py"), reentrant=False
            ),
        ),
        noise=NoiseModel(),
        seed=3,
        workers=4,
    )
    report = run_benchmark(config)
    assert len(report.trials) == 1
    assert report.trials[0].grasp is not None
