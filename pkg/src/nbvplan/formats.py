"""On-disk artifact formats: transforms.json, plan.json, CSV tables, plain PGM.

Camera exports follow the radiance-field convention: a JSON document with
camera_angle_x (radians) and frames holding row-major 4x4 camera-to-world
matrices, -Z forward / +Y up. CSV artifacts start with '#' comment lines
embedding the config echo and the scene digest, then a fixed header row.
All writers are deterministic: same inputs, same bytes.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .energy import EnergyBreakdown
from .evaluation import ComparisonReport, FloorplanMap
from .geometry import CameraPose, rotmat_to_quat
from .occupancy import PrimitiveScene, scene_to_dict
from .planner import PlannerConfig, PlanResult


def scene_digest(scene: PrimitiveScene) -> str:
    """Content hash of a scene, insensitive to file whitespace."""
    canonical = json.dumps(scene_to_dict(scene), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def digest_of_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def config_echo(config: PlannerConfig) -> dict:
    doc = {
        "budget": config.budget,
        "candidates": config.candidates_per_step,
        "bootstrap": config.bootstrap_count,
        "gamma": config.gamma,
        "bins_polar": config.bins_polar,
        "bins_azimuth": config.bins_azimuth,
        "equal_area": config.equal_area,
        "clearance": config.clearance,
        "node_resolution": config.node_resolution,
        "seed": config.rng_seed,
        "box": config.box.min.tolist() + config.box.max.tolist(),
        "free_box": config.free_box.min.tolist() + config.free_box.max.tolist(),
        "fov_x": config.intrinsics.fov_x,
        "fov_y": config.intrinsics.fov_y,
        "near": config.intrinsics.near,
        "far": config.intrinsics.far,
    }
    return doc


def pose_to_matrix(pose: CameraPose) -> np.ndarray:
    m = np.eye(4)
    m[:3, :3] = pose.rotation()
    m[:3, 3] = pose.position
    return m


def matrix_to_pose(m) -> CameraPose:
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (4, 4):
        raise ValueError("transform_matrix must be 4x4")
    return CameraPose(m[:3, 3], rotmat_to_quat(m[:3, :3]))


def write_transforms(path, poses: list[CameraPose], camera_angle_x: float,
                     extra: dict | None = None):
    doc = {
        "camera_angle_x": camera_angle_x,
        "frames": [
            {"file_path": f"frame_{i:04d}", "transform_matrix": pose_to_matrix(p).tolist()}
            for i, p in enumerate(poses)
        ],
    }
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_transforms(path) -> tuple[list[CameraPose], float]:
    doc = json.loads(Path(path).read_text())
    poses = [matrix_to_pose(f["transform_matrix"]) for f in doc["frames"]]
    return poses, float(doc.get("camera_angle_x", 0.0))


def write_plan_json(path, result: PlanResult, config: PlannerConfig, digest: str):
    doc = {
        "config": config_echo(config),
        "scene_digest": digest,
        "poses": [
            {"position": p.position.tolist(), "quaternion_wxyz": p.orientation.tolist()}
            for p in result.poses
        ],
        "energies": [
            {"total": e.total, "angular_term": e.angular_term,
             "frequency_term": e.frequency_term}
            for e in result.energies
        ],
        "candidate_stats": [asdict(s) for s in result.stats],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _artifact_preamble(config: PlannerConfig, digest: str) -> str:
    echo = json.dumps(config_echo(config), sort_keys=True, separators=(",", ":"))
    return f"# config: {echo}\n# scene_digest: {digest}\n"


def write_coverage_csv(path, energies: list[EnergyBreakdown],
                       config: PlannerConfig, digest: str):
    lines = [_artifact_preamble(config, digest)]
    lines.append("cameras,energy_total,angular_term,frequency_term\n")
    for i, e in enumerate(energies):
        lines.append(f"{i + 1},{e.total!r},{e.angular_term!r},{e.frequency_term!r}\n")
    Path(path).write_text("".join(lines))


def write_floorplan_csv(path, fmap: FloorplanMap, config: PlannerConfig, digest: str):
    nx, nz = fmap.values.shape
    lines = [_artifact_preamble(config, digest)]
    lines.append("ix,iz,value\n")
    for iz in range(nz):
        for ix in range(nx):
            lines.append(f"{ix},{iz},{fmap.values[ix, iz]!r}\n")
    Path(path).write_text("".join(lines))


def write_floorplan_pgm(path, fmap: FloorplanMap):
    """Plain (P2) PGM, values linearly mapped so the map maximum hits 65535."""
    nx, nz = fmap.values.shape
    vmax = float(fmap.values.max()) if fmap.values.size else 0.0
    if vmax > 0:
        pixels = np.rint(fmap.values / vmax * 65535).astype(int)
    else:
        pixels = np.zeros((nx, nz), dtype=int)
    lines = [
        "P2\n",
        f"# term: {fmap.term}  scale_max: {vmax!r} (value mapped to 65535)\n",
        f"{nx} {nz}\n",
        "65535\n",
    ]
    for iz in range(nz):
        lines.append(" ".join(str(pixels[ix, iz]) for ix in range(nx)) + "\n")
    Path(path).write_text("".join(lines))


def write_comparison_csv(path, report: ComparisonReport, digest: str):
    lines = [_artifact_preamble(report.config, digest)]
    lines.append("strategy,cameras,energy_total,angular_term,frequency_term,"
                 "seconds_total,seconds_per_camera\n")
    for row in report.rows:
        lines.append(
            f"{row.name},{len(row.curve)},{row.final.total!r},{row.final.angular_term!r},"
            f"{row.final.frequency_term!r},{row.seconds_total:.6f},{row.seconds_per_camera:.6f}\n")
    Path(path).write_text("".join(lines))


def write_selection_csv(path, result: PlanResult, pool_indices: list[int],
                        config: PlannerConfig, digest: str):
    lines = [_artifact_preamble(config, digest)]
    lines.append("step,pool_index,energy_total,angular_term,frequency_term\n")
    for i, (idx, e) in enumerate(zip(pool_indices, result.energies)):
        lines.append(f"{i},{idx},{e.total!r},{e.angular_term!r},{e.frequency_term!r}\n")
    Path(path).write_text("".join(lines))
