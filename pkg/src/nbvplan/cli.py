"""Command line entry point: plan, baseline, select-pool, evaluate.

Planner parameters come from defaults, then an optional JSON config file
(flat keys matching the long flag names), then explicit flags, in increasing
precedence. Exit codes: 0 success, 2 configuration/input errors, 3 planner
failures (no valid candidates, free box not free).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from .energy import NodeGrid, apply_camera
from .evaluation import compare, coverage_curve, floorplan
from .formats import (
    config_echo,
    scene_digest,
    write_comparison_csv,
    write_coverage_csv,
    write_floorplan_csv,
    write_floorplan_pgm,
    write_plan_json,
    write_selection_csv,
    write_transforms,
    read_transforms,
)
from .geometry import Aabb, CameraPose, Intrinsics
from .occupancy import OccupancyGrid, load_density, load_scene, voxelize
from .planner import (
    FreeBoxNotFree,
    NoValidCandidates,
    PlannerConfig,
    PlanResult,
    baseline_hemisphere,
    baseline_random,
    plan,
    select_from_pool,
)
from .evaluation import apply_and_track


class ConfigError(ValueError):
    """Bad flags, config file, or input files; maps to exit code 2."""


_DEFAULTS = {
    "budget": 100,
    "candidates": 1000,
    "bootstrap": 20,
    "gamma": 0.5,
    "bins_polar": 4,
    "bins_azimuth": 8,
    "equal_area": False,
    "node_resolution": 32,
    "seed": 0,
    "fov": 70.0,        # degrees; applied to both axes
    "near": 0.05,
    "far": 100.0,
}


def _add_planner_flags(p: argparse.ArgumentParser):
    p.add_argument("--scene", required=True, help="scene JSON (or density header JSON)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--budget", type=int)
    p.add_argument("--candidates", type=int)
    p.add_argument("--bootstrap", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--bins-polar", type=int, dest="bins_polar")
    p.add_argument("--bins-azimuth", type=int, dest="bins_azimuth")
    p.add_argument("--equal-area", action=argparse.BooleanOptionalAction,
                   dest="equal_area", default=None)
    p.add_argument("--clearance", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--box", type=float, nargs=6, metavar=("XMIN", "YMIN", "ZMIN", "XMAX", "YMAX", "ZMAX"))
    p.add_argument("--free-box", type=float, nargs=6, dest="free_box",
                   metavar=("XMIN", "YMIN", "ZMIN", "XMAX", "YMAX", "ZMAX"))
    p.add_argument("--fov", type=float, help="field of view in degrees (both axes)")
    p.add_argument("--near", type=float)
    p.add_argument("--far", type=float)
    p.add_argument("--node-resolution", type=int, dest="node_resolution")
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nbvplan",
                                 description="next-best-view camera placement planner")
    sub = ap.add_subparsers(dest="command", required=True)

    p_plan = sub.add_parser("plan", help="greedy camera placement")
    _add_planner_flags(p_plan)

    p_base = sub.add_parser("baseline", help="hemisphere or random placement")
    p_base.add_argument("kind", choices=["hemisphere", "random"])
    _add_planner_flags(p_base)
    p_base.add_argument("--center", type=float, nargs=3, metavar=("X", "Y", "Z"),
                        help="hemisphere center (required for hemisphere)")
    p_base.add_argument("--radius", type=float, help="hemisphere radius")

    p_pool = sub.add_parser("select-pool", help="greedy subset of a fixed camera pool")
    _add_planner_flags(p_pool)
    p_pool.add_argument("--pool", required=True, help="transforms.json to select from")
    p_pool.add_argument("--k", type=int, required=True, help="subset size")

    p_eval = sub.add_parser("evaluate", help="compare finished runs on one scene")
    p_eval.add_argument("runs", nargs="+", help="plan output directories (>= 2)")
    p_eval.add_argument("--scene", required=True)
    p_eval.add_argument("--out", required=True)
    return ap


def _merged_settings(args) -> dict:
    settings = dict(_DEFAULTS)
    settings.update({"clearance": None, "box": None, "free_box": None})
    if args.config:
        try:
            file_doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config file {args.config}: {e}")
        unknown = set(file_doc) - set(settings)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        settings.update(file_doc)
    for key in list(settings):
        flag = getattr(args, key, None)
        if flag is not None:
            settings[key] = flag
    return settings


def _load_occupancy(scene_path) -> tuple[OccupancyGrid, str, object]:
    """Returns (grid, digest, scene-or-None) from a scene or density header file."""
    try:
        doc = json.loads(Path(scene_path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read scene {scene_path}: {e}")
    try:
        if "primitives" in doc:
            scene = load_scene(scene_path)
            return voxelize(scene), scene_digest(scene), scene
        if "dims" in doc:
            grid = load_density(scene_path)
            canonical = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
            raw = (Path(scene_path).parent / doc["data"]).read_bytes()
            return grid, hashlib.sha256(canonical + raw).hexdigest(), None
    except (KeyError, ValueError, OSError) as e:
        raise ConfigError(f"invalid scene {scene_path}: {e}")
    raise ConfigError(f"scene {scene_path} is neither a primitive scene nor a density header")


def _box_from(values, what: str) -> Aabb:
    try:
        return Aabb(values[:3], values[3:])
    except ValueError as e:
        raise ConfigError(f"bad {what}: {e}")


def _planner_config(settings: dict, grid: OccupancyGrid) -> PlannerConfig:
    box = _box_from(settings["box"], "--box") if settings["box"] else grid.box
    if settings["free_box"] is None:
        raise ConfigError("--free-box (or config key free_box) is required")
    free_box = _box_from(settings["free_box"], "--free-box")
    clearance = settings["clearance"]
    if clearance is None:
        clearance = 0.05 * grid.box.diagonal()
    fov = math.radians(settings["fov"])
    try:
        intr = Intrinsics(fov, fov, settings["near"], settings["far"])
        return PlannerConfig(
            box=box,
            free_box=free_box,
            intrinsics=intr,
            clearance=clearance,
            budget=settings["budget"],
            candidates_per_step=settings["candidates"],
            bootstrap_count=min(settings["bootstrap"], settings["budget"]),
            gamma=settings["gamma"],
            bins_polar=settings["bins_polar"],
            bins_azimuth=settings["bins_azimuth"],
            equal_area=settings["equal_area"],
            node_resolution=settings["node_resolution"],
            rng_seed=settings["seed"],
        )
    except ValueError as e:
        raise ConfigError(str(e))


def _write_plan_artifacts(out_dir: Path, result: PlanResult, config: PlannerConfig,
                          digest: str):
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = NodeGrid(config.box, config.node_resolution, config.layout().n_bins)
    for pose in result.poses:
        apply_camera(grid, pose, config.intrinsics, config.layout())
    write_plan_json(out_dir / "plan.json", result, config, digest)
    write_coverage_csv(out_dir / "coverage.csv", result.energies, config, digest)
    for term in ("angular", "frequency"):
        fmap = floorplan(grid, term, config.gamma, config.layout())
        write_floorplan_csv(out_dir / f"floorplan_{term}.csv", fmap, config, digest)
        write_floorplan_pgm(out_dir / f"floorplan_{term}.pgm", fmap)
    write_transforms(out_dir / "transforms.json", result.poses, config.intrinsics.fov_x,
                     extra={"scene_digest": digest, "config": config_echo(config)})


def cmd_plan(args) -> int:
    grid, digest, _ = _load_occupancy(args.scene)
    config = _planner_config(_merged_settings(args), grid)
    result = plan(config, grid, workers=args.workers)
    _write_plan_artifacts(Path(args.out), result, config, digest)
    return 0


def cmd_baseline(args) -> int:
    grid, digest, _ = _load_occupancy(args.scene)
    config = _planner_config(_merged_settings(args), grid)
    rng = np.random.default_rng(config.rng_seed)
    if args.kind == "hemisphere":
        if args.center is None or args.radius is None:
            raise ConfigError("hemisphere baseline needs --center and --radius")
        poses = baseline_hemisphere(args.center, args.radius, config.budget, rng)
    else:
        poses = baseline_random(config.budget, config.box, grid, config.clearance,
                                config.intrinsics, rng)
    node_grid = NodeGrid(config.box, config.node_resolution, config.layout().n_bins)
    energies = apply_and_track(node_grid, poses, config)
    result = PlanResult(poses, energies, [])
    _write_plan_artifacts(Path(args.out), result, config, digest)
    return 0


def cmd_select_pool(args) -> int:
    grid, digest, _ = _load_occupancy(args.scene)
    settings = _merged_settings(args)
    if settings["free_box"] is None:   # pool selection never samples, any free box works
        settings["free_box"] = (settings["box"] if settings["box"]
                                else grid.box.min.tolist() + grid.box.max.tolist())
    settings["bootstrap"] = 0
    config = _planner_config(settings, grid)
    try:
        pool, _ = read_transforms(args.pool)
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as e:
        raise ConfigError(f"cannot read pool {args.pool}: {e}")
    if args.k > len(pool):
        raise ConfigError(f"--k {args.k} exceeds pool size {len(pool)}")
    if args.k < 0:
        raise ConfigError("--k must be nonnegative")
    node_grid = NodeGrid(config.box, config.node_resolution, config.layout().n_bins)
    result = select_from_pool(pool, args.k, config, node_grid, workers=args.workers)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_transforms(out_dir / "transforms.json", result.poses, config.intrinsics.fov_x,
                     extra={"scene_digest": digest, "config": config_echo(config)})
    write_selection_csv(out_dir / "selection.csv", result, result.pool_indices, config, digest)
    return 0


def cmd_evaluate(args) -> int:
    if len(args.runs) < 2:
        raise ConfigError("evaluate needs at least two run directories")
    grid, digest, scene = _load_occupancy(args.scene)
    if scene is None:
        raise ConfigError("evaluate requires a primitive scene file")
    runs = []
    reference_echo = None
    for run_dir in args.runs:
        plan_path = Path(run_dir) / "plan.json"
        try:
            doc = json.loads(plan_path.read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read {plan_path}: {e}")
        if doc["scene_digest"] != digest:
            raise ConfigError(f"scene digest mismatch for {run_dir}")
        echo = doc["config"]
        grid_keys = ("box", "bins_polar", "bins_azimuth", "equal_area", "gamma",
                     "node_resolution", "fov_x", "fov_y", "near", "far")
        if reference_echo is None:
            reference_echo = echo
        elif any(echo[k] != reference_echo[k] for k in grid_keys):
            raise ConfigError(f"run {run_dir} was produced with an incompatible config")
        poses = [CameraPose(p["position"], p["quaternion_wxyz"]) for p in doc["poses"]]
        runs.append((Path(run_dir).name, poses))
    config = _config_from_echo(reference_echo)
    strategies = {name: (lambda cfg, occ, ps=poses: ps) for name, poses in runs}
    report = compare(strategies, scene, config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_comparison_csv(out_dir / "comparison.csv", report, digest)
    return 0


def _config_from_echo(echo: dict) -> PlannerConfig:
    intr = Intrinsics(echo["fov_x"], echo["fov_y"], echo["near"], echo["far"])
    return PlannerConfig(
        box=_box_from(echo["box"], "box"),
        free_box=_box_from(echo["free_box"], "free_box"),
        intrinsics=intr,
        clearance=echo["clearance"],
        budget=echo["budget"],
        candidates_per_step=echo["candidates"],
        bootstrap_count=min(echo["bootstrap"], echo["budget"]),
        gamma=echo["gamma"],
        bins_polar=echo["bins_polar"],
        bins_azimuth=echo["bins_azimuth"],
        equal_area=echo["equal_area"],
        node_resolution=echo["node_resolution"],
        rng_seed=echo["seed"],
    )


_COMMANDS = {
    "plan": cmd_plan,
    "baseline": cmd_baseline,
    "select-pool": cmd_select_pool,
    "evaluate": cmd_evaluate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (NoValidCandidates, FreeBoxNotFree) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
