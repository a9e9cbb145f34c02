"""Greedy camera placement: candidate sampling, filtering, argmax selection.

The budgeted loop samples N random candidate cameras per step (from the
user-declared free box for the first bootstrap_count steps, then from the
full region of interest), drops candidates whose center is occupied or whose
central view ray hits occupied space closer than the clearance distance,
scores the survivors with the incremental energy delta, and keeps the best.
Ties break toward the lowest candidate index, so runs are reproducible for a
fixed seed regardless of how scoring is parallelized.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .angular import BinLayout, make_layout
from .energy import DeltaScorer, EnergyBreakdown, NodeGrid, apply_camera, energy
from .geometry import Aabb, CameraPose, Direction, Intrinsics, look_rotation, look_rotations
from .occupancy import OccupancyGrid, clearance_along, is_free_many

MAX_SAMPLE_BATCHES = 16      # greedy_step retries before giving up
MAX_SINGLE_RETRIES = 4096    # per-camera draw budget of the random baseline


class NoValidCandidates(RuntimeError):
    """Candidate sampling kept failing the occupancy/clearance filter."""


class FreeBoxNotFree(ValueError):
    """The declared bootstrap box overlaps occupied voxels."""


@dataclass(frozen=True, eq=False)
class PlannerConfig:
    box: Aabb                        # region of interest B
    free_box: Aabb                   # user-declared empty bootstrap region
    intrinsics: Intrinsics
    clearance: float                 # min distance to occupied space along the view ray
    budget: int = 100
    candidates_per_step: int = 1000
    bootstrap_count: int = 20
    gamma: float = 0.5
    bins_polar: int = 4
    bins_azimuth: int = 8
    equal_area: bool = False
    node_resolution: int = 32
    rng_seed: int = 0

    def __post_init__(self):
        if not self.box.contains_box(self.free_box):
            raise ValueError("free box must lie inside the region of interest")
        if self.bootstrap_count > self.budget:
            raise ValueError("bootstrap_count cannot exceed the camera budget")
        if self.candidates_per_step < 1:
            raise ValueError("need at least one candidate per step")
        if self.clearance < 0:
            raise ValueError("clearance must be nonnegative")

    def layout(self) -> BinLayout:
        return make_layout(self.bins_polar, self.bins_azimuth, self.equal_area)


@dataclass
class CandidateStats:
    sampled: int = 0
    rejected_occupied: int = 0
    rejected_clearance: int = 0


@dataclass
class PlanResult:
    poses: list[CameraPose]
    energies: list[EnergyBreakdown]
    stats: list[CandidateStats]
    pool_indices: list[int] | None = None  # filled by select_from_pool only


def _random_directions(rng: np.random.Generator, n: int) -> np.ndarray:
    """n directions uniform on the unit sphere (uniform cos-polar, uniform azimuth)."""
    u = rng.uniform(-1.0, 1.0, n)
    phi = rng.uniform(0.0, 2.0 * math.pi, n)
    r = np.sqrt(np.maximum(0.0, 1.0 - u * u))
    return np.column_stack([r * np.cos(phi), u, r * np.sin(phi)])


def _passes_filter(position: np.ndarray, view: np.ndarray, grid: OccupancyGrid,
                   d_min: float, stats: CandidateStats | None) -> bool:
    if d_min == 0.0:
        return True
    if clearance_along(grid, position, Direction.from_vector(view), d_min) < d_min:
        if stats is not None:
            stats.rejected_clearance += 1
        return False
    return True


def sample_candidates(n: int, box: Aabb, grid: OccupancyGrid, d_min: float,
                      intr: Intrinsics, rng: np.random.Generator,
                      stats: CandidateStats | None = None) -> list[CameraPose]:
    """Draw n candidate poses in box; failures of the validity filter are
    dropped rather than redrawn, so the result may be shorter than n."""
    positions = rng.uniform(box.min, box.max, size=(n, 3))
    views = _random_directions(rng, n)
    free = is_free_many(grid, positions)
    if stats is not None:
        stats.sampled += n
        stats.rejected_occupied += int(n - free.sum())
    keep = [i for i in np.flatnonzero(free)
            if _passes_filter(positions[i], views[i], grid, d_min, stats)]
    if not keep:
        return []
    quats = look_rotations(views[keep])
    return [CameraPose(positions[i], q) for i, q in zip(keep, quats)]


@dataclass
class PlannerState:
    """Mutable state threaded through the greedy loop."""

    config: PlannerConfig
    occupancy: OccupancyGrid
    node_grid: NodeGrid
    layout: BinLayout
    cameras: list[CameraPose] = field(default_factory=list)
    energies: list[EnergyBreakdown] = field(default_factory=list)
    stats: list[CandidateStats] = field(default_factory=list)
    workers: int = 1


def _score_all(scorer: DeltaScorer, candidates: Sequence[CameraPose],
               workers: int) -> np.ndarray:
    scores = np.empty(len(candidates))
    if workers <= 1 or len(candidates) < 2 * workers:
        for i, pose in enumerate(candidates):
            scores[i] = scorer.score(pose)
        return scores
    def run(chunk):
        lo, hi = chunk
        for i in range(lo, hi):
            scores[i] = scorer.score(candidates[i])
    bounds = np.linspace(0, len(candidates), workers + 1).astype(int)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(run, zip(bounds[:-1], bounds[1:])))
    return scores


def greedy_step(state: PlannerState, rng: np.random.Generator) -> CameraPose:
    """Sample, filter, score, and commit the best candidate camera."""
    cfg = state.config
    if len(state.cameras) >= cfg.budget:
        raise ValueError("camera budget already exhausted")
    box = cfg.free_box if len(state.cameras) < cfg.bootstrap_count else cfg.box
    stats = CandidateStats()
    candidates: list[CameraPose] = []
    for _ in range(MAX_SAMPLE_BATCHES):
        candidates = sample_candidates(cfg.candidates_per_step, box, state.occupancy,
                                       cfg.clearance, cfg.intrinsics, rng, stats)
        if candidates:
            break
    else:
        raise NoValidCandidates(
            f"no candidate survived filtering in {MAX_SAMPLE_BATCHES} batches of "
            f"{cfg.candidates_per_step} (box={box.min}..{box.max}, clearance={cfg.clearance})")
    scorer = DeltaScorer(state.node_grid, cfg.intrinsics, state.layout, cfg.gamma,
                         n_cameras_after=len(state.cameras) + 1)
    scores = _score_all(scorer, candidates, state.workers)
    chosen = candidates[int(np.argmax(scores))]  # first max wins -> lowest index
    apply_camera(state.node_grid, chosen, cfg.intrinsics, state.layout)
    state.cameras.append(chosen)
    state.stats.append(stats)
    state.energies.append(energy(state.node_grid, len(state.cameras), cfg.gamma, state.layout))
    return chosen


def validate_free_box(grid: OccupancyGrid, free_box: Aabb):
    """Every voxel overlapping the free box must be free."""
    lo = np.floor((free_box.min - grid.box.min) / grid.voxel_size).astype(int)
    hi = np.ceil((free_box.max - grid.box.min) / grid.voxel_size).astype(int)
    lo = np.maximum(lo, 0)
    hi = np.minimum(hi, grid.resolution)
    nx, ny, _ = grid.resolution
    for iz in range(lo[2], hi[2]):
        for iy in range(lo[1], hi[1]):
            row = grid.bits[lo[0] + nx * (iy + ny * iz): hi[0] + nx * (iy + ny * iz)]
            if row.any():
                raise FreeBoxNotFree("free box overlaps occupied voxels")


def plan(config: PlannerConfig, grid: OccupancyGrid, workers: int = 1,
         acquire: Callable[[int, CameraPose], None] | None = None) -> PlanResult:
    """Run the full greedy loop; deterministic given config.rng_seed.

    acquire, when given, is invoked after each selection once the camera
    count exceeds bootstrap_count (the point where a live system would
    retrain its radiance field on the new image).
    """
    validate_free_box(grid, config.free_box)
    rng = np.random.default_rng(config.rng_seed)
    state = PlannerState(
        config=config,
        occupancy=grid,
        node_grid=NodeGrid(config.box, config.node_resolution, config.layout().n_bins),
        layout=config.layout(),
        workers=workers,
    )
    for step in range(config.budget):
        chosen = greedy_step(state, rng)
        if acquire is not None and len(state.cameras) > config.bootstrap_count:
            acquire(step, chosen)
    return PlanResult(state.cameras, state.energies, state.stats)


def select_from_pool(pool: Sequence[CameraPose], k: int, config: PlannerConfig,
                     grid: NodeGrid, workers: int = 1) -> PlanResult:
    """Greedily pick k poses from a fixed pool, maximizing the same energy.

    No occupancy filtering: pool poses are assumed to be real, valid captures.
    The grid is mutated; selection continues from whatever it already holds.
    """
    if k > len(pool):
        raise ValueError(f"cannot select {k} poses from a pool of {len(pool)}")
    layout = config.layout()
    remaining = list(range(len(pool)))
    result = PlanResult([], [], [], pool_indices=[])
    for _ in range(k):
        scorer = DeltaScorer(grid, config.intrinsics, layout, config.gamma,
                             n_cameras_after=grid.n_cameras_applied + 1)
        scores = _score_all(scorer, [pool[i] for i in remaining], workers)
        best = int(np.argmax(scores))
        chosen_idx = remaining.pop(best)
        chosen = pool[chosen_idx]
        apply_camera(grid, chosen, config.intrinsics, layout)
        result.poses.append(chosen)
        result.pool_indices.append(chosen_idx)
        result.stats.append(CandidateStats(sampled=len(scores)))
        result.energies.append(energy(grid, grid.n_cameras_applied, config.gamma, layout))
    return result


def baseline_hemisphere(center, radius: float, n: int,
                        rng: np.random.Generator) -> list[CameraPose]:
    """n poses uniform (by area) on the upper hemisphere, all looking at center."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    center = np.asarray(center, dtype=np.float64)
    u = rng.uniform(0.0, 1.0, n)          # cos of the polar angle from +Y
    phi = rng.uniform(0.0, 2.0 * math.pi, n)
    r = np.sqrt(np.maximum(0.0, 1.0 - u * u))
    offsets = np.column_stack([r * np.cos(phi), u, r * np.sin(phi)])
    poses = []
    for off in offsets:
        pos = center + radius * off
        poses.append(CameraPose(pos, look_rotation(center - pos)))
    return poses


def baseline_random(n: int, box: Aabb, grid: OccupancyGrid, d_min: float,
                    intr: Intrinsics, rng: np.random.Generator) -> list[CameraPose]:
    """n poses with uniform position/direction, rejection-sampled to validity."""
    poses = []
    for _ in range(n):
        for _ in range(MAX_SINGLE_RETRIES):
            position = rng.uniform(box.min, box.max, size=3)
            view = _random_directions(rng, 1)[0]
            if not is_free_many(grid, position[None, :])[0]:
                continue
            if _passes_filter(position, view, grid, d_min, None):
                poses.append(CameraPose(position, look_rotation(view)))
                break
        else:
            raise NoValidCandidates(
                f"random baseline found no valid pose in {MAX_SINGLE_RETRIES} draws")
    return poses
