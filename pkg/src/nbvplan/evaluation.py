"""Strategy comparison harness and per-term diagnostic maps.

Floorplan maps reduce one per-node energy term to a top-down (x, z) image by
averaging over the vertical axis; comparison reports run several placement
strategies against identical grids and record their energy trajectories.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .energy import EnergyBreakdown, NodeGrid, apply_camera, energy
from .geometry import CameraPose
from .occupancy import OccupancyGrid, PrimitiveScene, voxelize
from .planner import PlannerConfig

# a strategy turns (config, occupancy grid) into an ordered camera list
Strategy = Callable[[PlannerConfig, OccupancyGrid], list[CameraPose]]


@dataclass(frozen=True, eq=False)
class FloorplanMap:
    values: np.ndarray   # shape (nx, nz), mean over y of the selected term
    term: str            # "angular" or "frequency"
    reduction_axis: str = "y"


@dataclass
class StrategyRow:
    name: str
    final: EnergyBreakdown
    curve: list[tuple[int, float]]
    seconds_total: float
    seconds_per_camera: float


@dataclass
class ComparisonReport:
    rows: list[StrategyRow]
    config: PlannerConfig


def floorplan(grid: NodeGrid, term: str, gamma: float, layout) -> FloorplanMap:
    """Top-down map of one energy term, averaged along the vertical axis."""
    breakdown = energy(grid, grid.n_cameras_applied, gamma, layout)
    if term == "angular":
        per_node = breakdown.per_node_angular
    elif term == "frequency":
        per_node = breakdown.per_node_frequency
    else:
        raise ValueError(f"unknown term {term!r}")
    res = grid.resolution
    cube = per_node.reshape(res, res, res)   # axes (z, y, x) per flat ordering
    values = cube.mean(axis=1).T             # -> (x, z)
    return FloorplanMap(values, term)


def coverage_curve(result) -> list[tuple[int, float]]:
    """(camera count, total energy) pairs along a plan's trajectory."""
    return [(i + 1, e.total) for i, e in enumerate(result.energies)]


def apply_and_track(grid: NodeGrid, poses: Sequence[CameraPose], config: PlannerConfig):
    """Apply poses in order, recording the energy after each one."""
    layout = config.layout()
    energies = []
    for pose in poses:
        apply_camera(grid, pose, config.intrinsics, layout)
        energies.append(energy(grid, grid.n_cameras_applied, config.gamma, layout))
    return energies


def compare(strategies: Mapping[str, Strategy], scene: PrimitiveScene,
            config: PlannerConfig) -> ComparisonReport:
    """Run each strategy on its own fresh grid and tabulate energies.

    Deterministic given config.rng_seed: every strategy receives the same
    seed, scene, node grid, bin layout and gamma.
    """
    occupancy = voxelize(scene)
    rows = []
    for name, strategy in strategies.items():
        t0 = time.perf_counter()
        poses = strategy(config, occupancy)
        seconds = time.perf_counter() - t0
        grid = NodeGrid(config.box, config.node_resolution, config.layout().n_bins)
        energies = apply_and_track(grid, poses, config)
        final = energies[-1] if energies else energy(grid, 0, config.gamma, config.layout())
        rows.append(StrategyRow(
            name=name,
            final=final,
            curve=[(i + 1, e.total) for i, e in enumerate(energies)],
            seconds_total=seconds,
            seconds_per_camera=seconds / max(1, len(poses)),
        ))
    return ComparisonReport(rows, config)
