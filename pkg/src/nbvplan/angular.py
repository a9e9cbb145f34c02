"""Spherical direction histograms and total-variation distance to uniform.

Bins form a regular polar grid: n_polar rows of theta (from +Y) times
n_azimuth columns of phi, bin id = row * n_azimuth + col. Row intervals are
half-open [lo, hi); theta = pi lands in the last row, phi wraps mod 2*pi.
The reference uniform distribution weights each bin by its exact solid angle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Direction


class InvalidLayout(ValueError):
    """Bin layout with a zero-sized axis."""


class LayoutMismatch(ValueError):
    """Histogram and layout disagree on the number of bins."""


@dataclass(frozen=True, eq=False)
class BinLayout:
    n_polar: int
    n_azimuth: int
    row_boundaries: np.ndarray  # n_polar + 1 ascending theta values
    uniform_mass: np.ndarray    # per-bin mass of the uniform distribution

    @property
    def n_bins(self) -> int:
        return self.n_polar * self.n_azimuth


def make_layout(n_polar: int, n_azimuth: int, equal_area: bool = False,
                hemisphere: bool = False) -> BinLayout:
    """Build a bin layout over the sphere (or upper hemisphere).

    With equal_area=False rows are uniform in theta (regular polar grid);
    with equal_area=True rows are uniform in cos(theta) so every bin carries
    the same mass. hemisphere=True restricts the domain to theta in [0, pi/2]
    and renormalizes the uniform mass over that half; directions below the
    horizon then clamp into the last row.
    """
    if n_polar < 1 or n_azimuth < 1:
        raise InvalidLayout(f"need at least one bin per axis, got {n_polar}x{n_azimuth}")
    theta_max = math.pi / 2.0 if hemisphere else math.pi
    cos_max = 0.0 if hemisphere else -1.0
    if equal_area:
        # keep the exact cosine boundaries; arccos/cos round trips lose ulps
        cos_bounds = np.linspace(1.0, cos_max, n_polar + 1)
        bounds = np.arccos(np.clip(cos_bounds, -1.0, 1.0))
    else:
        bounds = np.linspace(0.0, theta_max, n_polar + 1)
        cos_bounds = np.cos(bounds)
        cos_bounds[0], cos_bounds[-1] = 1.0, cos_max
    total_solid = 2.0 * math.pi * (1.0 - cos_max)
    dphi = 2.0 * math.pi / n_azimuth
    row_mass = dphi * (cos_bounds[:-1] - cos_bounds[1:]) / total_solid
    mass = np.repeat(row_mass, n_azimuth)
    bounds.setflags(write=False)
    mass.setflags(write=False)
    return BinLayout(n_polar, n_azimuth, bounds, mass)


def bin_index_many(layout: BinLayout, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Vectorized bin ids for arrays of (theta, phi)."""
    rows = np.searchsorted(layout.row_boundaries, theta, side="right") - 1
    rows = np.clip(rows, 0, layout.n_polar - 1)
    dphi = 2.0 * math.pi / layout.n_azimuth
    cols = np.floor_divide(np.mod(phi, 2.0 * math.pi), dphi).astype(np.int64)
    cols = np.minimum(cols, layout.n_azimuth - 1)
    return rows * layout.n_azimuth + cols


def bin_index(layout: BinLayout, d: Direction) -> int:
    """Bin id containing direction d."""
    return int(bin_index_many(layout, np.array([d.theta]), np.array([d.phi]))[0])


@dataclass
class SphericalHistogram:
    """Per-bin observation counts; grows monotonically via increment()."""

    counts: np.ndarray
    total: int = field(init=False)

    def __init__(self, n_bins: int):
        self.counts = np.zeros(n_bins, dtype=np.int64)
        self.total = 0

    @classmethod
    def from_counts(cls, counts) -> "SphericalHistogram":
        h = cls(len(counts))
        h.counts = np.asarray(counts, dtype=np.int64).copy()
        if np.any(h.counts < 0):
            raise ValueError("negative bin count")
        h.total = int(h.counts.sum())
        return h

    def increment(self, bin_id: int, by: int = 1):
        if by < 0:
            raise ValueError("histogram counts only grow")
        self.counts[bin_id] += by
        self.total += by


def tv_rows(counts: np.ndarray, layout: BinLayout) -> np.ndarray:
    """TV distance to uniform for each row of a (n, n_bins) count matrix.

    Rows with zero total get TV = 1 (the convention for never-observed points).
    """
    counts = np.asarray(counts, dtype=np.float64)
    totals = counts.sum(axis=1)
    safe = np.where(totals > 0, totals, 1.0)
    tv = 0.5 * np.abs(counts / safe[:, None] - layout.uniform_mass[None, :]).sum(axis=1)
    return np.where(totals > 0, tv, 1.0)


def tv_distance(hist: SphericalHistogram, layout: BinLayout) -> float:
    """Total-variation distance between the empirical and uniform bin masses."""
    if len(hist.counts) != layout.n_bins:
        raise LayoutMismatch(f"{len(hist.counts)} counts vs {layout.n_bins} bins")
    return float(tv_rows(hist.counts[None, :], layout)[0])
