#!/usr/bin/env python3
"""Adapter stub: answers every request with a fixed valid grasp."""
import json
import sys

request = json.loads(sys.stdin.readline())
gripper = request["gripper"]
width = 0.75 * gripper["max_opening"]
print(json.dumps({"x": 0.0, "y": 0.0, "z": 0.02, "theta_rad": 0.0, "width": width}))
