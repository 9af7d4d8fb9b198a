"""Subprocess adapter for external grasp algorithms.

External planners are one-shot processes speaking a line protocol: they
read a single JSON request line on stdin (paths to the depth PNG and its
intrinsics sidecar, plus the gripper dimensions), write a single JSON
grasp line on stdout, and exit. Keeping pixels out of the pipe makes the
protocol language-neutral and easy to debug.
"""

from __future__ import annotations

import json
import shlex
import subprocess
from dataclasses import dataclass
from typing import Union

from .errors import AdapterInvalidGrasp, AdapterProtocolError, AdapterTimeout
from .gripper import GraspPose, GripperModel

DEFAULT_TIMEOUT = 30.0


@dataclass(frozen=True)
class AdapterRequest:
    depth_png: str
    intrinsics: str
    gripper: GripperModel

    def to_line(self) -> str:
        payload = {
            "depth_png": self.depth_png,
            "intrinsics": self.intrinsics,
            "gripper": self.gripper.to_json_dict(),
        }
        return json.dumps(payload) + "\n"


def run_external_algorithm(
    request: AdapterRequest,
    command: Union[str, list],
    timeout: float = DEFAULT_TIMEOUT,
) -> GraspPose:
    """Spawn the adapter, exchange one request/response line pair, validate the grasp.

    Raises AdapterTimeout when the process does not finish in time,
    AdapterProtocolError on malformed output, AdapterInvalidGrasp when the
    response violates the grasp invariants.
    """
    argv = shlex.split(command) if isinstance(command, str) else list(command)
    try:
        proc = subprocess.Popen(
            argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
        )
    except OSError as exc:
        raise AdapterProtocolError(f"cannot spawn adapter {argv[0]!r}: {exc}") from exc
    try:
        out, err = proc.communicate(request.to_line(), timeout=timeout)
    except subprocess.TimeoutExpired:
        proc.kill()
        proc.communicate()
        raise AdapterTimeout(f"adapter {argv[0]!r} exceeded {timeout} s")

    line = out.splitlines()[0].strip() if out.splitlines() else ""
    if not line:
        raise AdapterProtocolError(
            f"adapter {argv[0]!r} wrote no response (stderr: {err.strip()[:200]!r})"
        )
    try:
        payload = json.loads(line)
        pose = GraspPose.from_json_dict(payload)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise AdapterProtocolError(f"malformed adapter response {line[:200]!r}: {exc}") from exc
    try:
        pose.validate(request.gripper)
    except ValueError as exc:
        raise AdapterInvalidGrasp(str(exc)) from exc
    return pose
