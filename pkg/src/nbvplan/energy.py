"""Reconstructability energy over a regular node grid.

Each node of a resolution^3 lattice inside the region of interest keeps a
spherical histogram of the directions from which cameras have seen it. The
energy of a camera set is, summed over nodes,

    (1 - TV(histogram, uniform)) + (observed / n_cameras) ** gamma

i.e. an angular-uniformity term plus a concave observation-frequency term.
DeltaScorer evaluates the energy change of adding one candidate camera by
touching only the nodes inside the candidate's frustum; every other term is
candidate-independent, so the argmax over candidates is unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .angular import BinLayout, SphericalHistogram, bin_index_many, tv_rows
from .geometry import (
    Aabb,
    CameraPose,
    Frustum,
    Intrinsics,
    angles_to_point,
    build_frustum,
    frustum_corners,
)

# index-space padding when clipping a frustum's bounding box to the lattice,
# guards against rounding in the corner transform excluding boundary nodes
_CLIP_PAD = 1e-9


class NoCameras(ValueError):
    """Observation frequency queried with an empty camera set."""


@dataclass
class ObservationState:
    """Per-node sufficient statistic: direction histogram + observer count."""

    histogram: SphericalHistogram

    @property
    def observer_count(self) -> int:
        return self.histogram.total


@dataclass(frozen=True, eq=False)
class EnergyBreakdown:
    total: float
    angular_term: float        # sum over nodes of (1 - TV)
    frequency_term: float      # sum over nodes of O_f ** gamma
    per_node_angular: np.ndarray
    per_node_frequency: np.ndarray


class NodeGrid:
    """resolution^3 lattice of evaluation points (cell centers) inside box.

    Observation state is mutated through apply_camera (or load_counts) only;
    the grid keeps the per-node TV distance cached and consistent. The first
    layout used with a grid gets pinned to it, so the cached values can never
    silently refer to a different uniform distribution.
    """

    def __init__(self, box: Aabb, resolution: int = 32, n_bins: int = 32):
        if resolution < 1:
            raise ValueError("resolution must be >= 1")
        self.box = box
        self.resolution = resolution
        self.n_bins = n_bins
        self.node_step = box.size() / resolution
        step = self.node_step
        self.axis_centers = [box.min[a] + (np.arange(resolution) + 0.5) * step[a] for a in range(3)]
        # flat node index = ix + res * (iy + res * iz): x fastest, then y, then z
        zz, yy, xx = np.meshgrid(self.axis_centers[2], self.axis_centers[1],
                                 self.axis_centers[0], indexing="ij")
        self.node_positions = np.column_stack([xx.ravel(), yy.ravel(), zz.ravel()])
        self.node_positions.setflags(write=False)
        self._counts = np.zeros((resolution ** 3, n_bins), dtype=np.int64)
        self._observers = np.zeros(resolution ** 3, dtype=np.int64)
        self._tv = np.ones(resolution ** 3)
        self._uniform_mass: np.ndarray | None = None
        self.n_cameras_applied = 0

    @property
    def n_nodes(self) -> int:
        return self.resolution ** 3

    @property
    def counts(self) -> np.ndarray:
        view = self._counts.view()
        view.setflags(write=False)
        return view

    @property
    def observer_count(self) -> np.ndarray:
        view = self._observers.view()
        view.setflags(write=False)
        return view

    def state(self, node_id: int) -> ObservationState:
        return ObservationState(SphericalHistogram.from_counts(self._counts[node_id]))

    def load_counts(self, counts, layout: BinLayout, n_cameras: int):
        """Overwrite the observation state wholesale (synthetic grids in tests)."""
        counts = np.asarray(counts, dtype=np.int64)
        if counts.shape != self._counts.shape:
            raise ValueError(f"counts shape {counts.shape} != {self._counts.shape}")
        _check_layout(self, layout)
        self._counts = counts.copy()
        self._observers = self._counts.sum(axis=1)
        self._tv = tv_rows(self._counts, layout)
        self.n_cameras_applied = n_cameras

    def copy(self) -> "NodeGrid":
        g = NodeGrid.__new__(NodeGrid)
        g.box = self.box
        g.resolution = self.resolution
        g.n_bins = self.n_bins
        g.axis_centers = self.axis_centers
        g.node_step = self.node_step
        g.node_positions = self.node_positions
        g._counts = self._counts.copy()
        g._observers = self._observers.copy()
        g._tv = self._tv.copy()
        g._uniform_mass = self._uniform_mass
        g.n_cameras_applied = self.n_cameras_applied
        return g


def observation_frequency(state: ObservationState, n_cameras: int) -> float:
    """Fraction of the camera set whose frustum contains the node."""
    if n_cameras == 0:
        raise NoCameras("observation frequency undefined with zero cameras")
    if n_cameras < state.observer_count:
        raise ValueError("more observers than cameras")
    return state.observer_count / n_cameras


def nodes_in_frustum(grid: NodeGrid, frustum: Frustum, pose: CameraPose,
                     intr: Intrinsics) -> np.ndarray:
    """Ascending flat indices of grid nodes inside the frustum.

    Clips the frustum's corner bounding box to the lattice first, then runs
    the exact plane tests on the surviving subgrid only.
    """
    corners = frustum_corners(pose, intr)
    lo = np.maximum(corners.min(axis=0), grid.box.min)
    hi = np.minimum(corners.max(axis=0), grid.box.max)
    if np.any(lo > hi):
        return np.empty(0, dtype=np.int64)
    res = grid.resolution
    i_lo = np.ceil((lo - grid.box.min) / grid.node_step - 0.5 - _CLIP_PAD).astype(np.int64)
    i_hi = np.floor((hi - grid.box.min) / grid.node_step - 0.5 + _CLIP_PAD).astype(np.int64)
    i_lo = np.maximum(i_lo, 0)
    i_hi = np.minimum(i_hi, res - 1)
    if np.any(i_lo > i_hi):
        return np.empty(0, dtype=np.int64)
    if np.all(i_lo == 0) and np.all(i_hi == res - 1):
        return np.flatnonzero(_inside_planes(grid.node_positions, frustum))
    ix = np.arange(i_lo[0], i_hi[0] + 1)
    iy = np.arange(i_lo[1], i_hi[1] + 1)
    iz = np.arange(i_lo[2], i_hi[2] + 1)
    flat = (ix[None, None, :] + res * (iy[None, :, None] + res * iz[:, None, None])).ravel()
    return flat[_inside_planes(grid.node_positions[flat], frustum)]


def _inside_planes(pts: np.ndarray, frustum: Frustum) -> np.ndarray:
    # one matvec per plane beats forming the (n, 6) distance matrix
    inside = pts @ frustum.normals[0] + frustum.offsets[0] >= 0.0
    for j in range(1, 6):
        inside &= pts @ frustum.normals[j] + frustum.offsets[j] >= 0.0
    return inside


def apply_camera(grid: NodeGrid, pose: CameraPose, intr: Intrinsics,
                 layout: BinLayout) -> int:
    """Record one camera's observations on the grid; returns nodes touched."""
    _check_layout(grid, layout)
    frustum = build_frustum(pose, intr)
    idx = nodes_in_frustum(grid, frustum, pose, intr)
    if idx.size:
        theta, phi = angles_to_point(grid.node_positions[idx], pose.position)
        bins = bin_index_many(layout, theta, phi)
        grid._counts[idx, bins] += 1
        grid._observers[idx] += 1
        grid._tv[idx] = tv_rows(grid._counts[idx], layout)
    grid.n_cameras_applied += 1
    return int(idx.size)


def energy(grid: NodeGrid, n_cameras: int, gamma: float, layout: BinLayout) -> EnergyBreakdown:
    """Total reconstructability of the grid under n_cameras cameras."""
    _check_layout(grid, layout)
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    per_angular = 1.0 - grid._tv
    if n_cameras == 0:
        per_freq = np.zeros(grid.n_nodes)
    else:
        per_freq = (grid._observers / n_cameras) ** gamma
    angular_term = float(per_angular.sum())
    frequency_term = float(per_freq.sum())
    return EnergyBreakdown(
        total=angular_term + frequency_term,
        angular_term=angular_term,
        frequency_term=frequency_term,
        per_node_angular=per_angular,
        per_node_frequency=per_freq,
    )


class DeltaScorer:
    """Incremental scorer for the energy gain of one more camera.

    Precomputes, per node, the TV after an extra observation lands in each
    possible bin, so scoring a candidate reduces to a gather over the nodes
    inside its frustum. Read-only with respect to the grid; safe to call
    concurrently, and sums in ascending node order so results do not depend
    on how candidates are scheduled.
    """

    def __init__(self, grid: NodeGrid, intr: Intrinsics, layout: BinLayout,
                 gamma: float, n_cameras_after: int):
        _check_layout(grid, layout)
        if n_cameras_after < grid.n_cameras_applied + 1:
            raise ValueError("n_cameras_after must count the candidate itself")
        self.grid = grid
        self.intr = intr
        self.layout = layout
        t = grid._observers.astype(np.float64)
        freq_before = (t / n_cameras_after) ** gamma
        freq_after = ((t + 1.0) / n_cameras_after) ** gamma
        # residuals against the uniform mass at the incremented total:
        # TV_after(bin b) = (S - |r_b| + |r_b + 1|) / (2 (t + 1))
        r = grid._counts - layout.uniform_mass[None, :] * (t + 1.0)[:, None]
        abs_r = np.abs(r)
        s = abs_r.sum(axis=1)
        self._tv_after = (s[:, None] - abs_r + np.abs(r + 1.0)) / (2.0 * (t + 1.0))[:, None]
        # per-node gain excluding the (bin-dependent) new TV term
        self._base_gain = grid._tv + freq_after - freq_before

    def score(self, pose: CameraPose) -> float:
        """Energy delta of adding this camera, up to candidate-independent terms."""
        frustum = build_frustum(pose, self.intr)
        idx = nodes_in_frustum(self.grid, frustum, pose, self.intr)
        if idx.size == 0:
            return 0.0
        theta, phi = angles_to_point(self.grid.node_positions[idx], pose.position)
        bins = bin_index_many(self.layout, theta, phi)
        return float(np.sum(self._base_gain[idx] - self._tv_after[idx, bins]))


def candidate_delta(grid: NodeGrid, candidate: CameraPose, intr: Intrinsics,
                    layout: BinLayout, gamma: float, n_cameras_after: int) -> float:
    """Score one candidate; argmax over candidates matches full recomputation."""
    return DeltaScorer(grid, intr, layout, gamma, n_cameras_after).score(candidate)


def _check_layout(grid: NodeGrid, layout: BinLayout):
    if layout.n_bins != grid.n_bins:
        raise ValueError(f"grid carries {grid.n_bins} bins, layout has {layout.n_bins}")
    if grid._uniform_mass is None:
        grid._uniform_mass = layout.uniform_mass
    elif grid._uniform_mass is not layout.uniform_mass and not np.array_equal(
            grid._uniform_mass, layout.uniform_mass):
        raise ValueError("grid was already used with a different bin layout")
