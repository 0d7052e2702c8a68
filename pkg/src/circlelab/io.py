"""Artifact persistence: CSV path files, sorted JSON, and content hashes.

All writers are deterministic: floats are rendered with ``repr`` (the
shortest round-trip form), JSON keys are sorted, and line endings are
fixed, so identical in-memory results always produce identical bytes.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from typing import Dict

import numpy as np

from .diffusion import Trajectory
from .pdmp import EventLog

__all__ = [
    "write_trajectory_csv",
    "read_trajectory_rows",
    "write_events_csv",
    "read_events_rows",
    "write_json",
    "read_json",
    "sha256_file",
    "hash_inventory",
]


def _fmt(value) -> str:
    return repr(float(value))


def write_trajectory_csv(path, traj: Trajectory) -> None:
    """Write sampled rows as ``t,x,u`` with full-precision floats."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "x", "u"])
        for t, x, u in zip(traj.times, traj.x, traj.u):
            writer.writerow([_fmt(t), _fmt(x), _fmt(u)])


def read_trajectory_rows(path) -> np.ndarray:
    """Read a trajectory CSV back as an (n, 3) float array."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["t", "x", "u"]:
            raise ValueError(f"{path}: unexpected header {header}")
        return np.array([[float(v) for v in row] for row in reader])


def write_events_csv(path, log: EventLog) -> None:
    """Write event rows as ``t,x,u,y,cause`` with full-precision floats."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "x", "u", "y", "cause"])
        for t, x, u, y, cause in zip(log.times, log.x, log.u, log.y,
                                     log.causes):
            writer.writerow([_fmt(t), _fmt(x), _fmt(u), int(y), cause])


def read_events_rows(path):
    """Read an events CSV back as (float array (n, 3), y array, causes)."""
    nums, ys, causes = [], [], []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["t", "x", "u", "y", "cause"]:
            raise ValueError(f"{path}: unexpected header {header}")
        for row in reader:
            nums.append([float(row[0]), float(row[1]), float(row[2])])
            ys.append(int(row[3]))
            causes.append(row[4])
    return np.array(nums), np.array(ys, dtype=np.int8), tuple(causes)


def write_json(path, obj) -> None:
    """Write JSON with sorted keys and a trailing newline."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def hash_inventory(directory, skip=("manifest.json",)) -> Dict[str, str]:
    """Content hashes of every artifact file in a run directory."""
    out: Dict[str, str] = {}
    for name in sorted(os.listdir(directory)):
        full = os.path.join(directory, name)
        if os.path.isfile(full) and name not in skip:
            out[name] = sha256_file(full)
    return out
