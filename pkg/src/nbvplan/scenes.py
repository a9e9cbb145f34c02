"""Bundled primitive room scenes used by the experiments and the demo CLI runs.

Each room is a 6 x 3 x 6 box with a floor slab and a handful of furniture
primitives, plus the metadata the planner and the hemisphere baseline need:
the region of interest, a guaranteed-empty bootstrap box, and a manually
chosen object-of-interest center/radius.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Aabb
from .occupancy import BoxPrimitive, PrimitiveScene, SpherePrimitive

OCCUPANCY_RESOLUTION = 128


@dataclass(frozen=True, eq=False)
class BundledScene:
    name: str
    scene: PrimitiveScene
    box: Aabb              # region of interest B
    free_box: Aabb         # empty bootstrap region
    hemisphere_center: np.ndarray
    hemisphere_radius: float


def default_clearance(scene: PrimitiveScene) -> float:
    """Minimum view-ray clearance: 5% of the scene diagonal."""
    return 0.05 * scene.box.diagonal()


def _room(primitives) -> PrimitiveScene:
    box = Aabb([0.0, 0.0, 0.0], [6.0, 3.0, 6.0])
    floor = BoxPrimitive([0.0, 0.0, 0.0], [6.0, 0.2, 6.0])
    return PrimitiveScene(box, OCCUPANCY_RESOLUTION, (floor, *primitives))


def studio() -> BundledScene:
    scene = _room([
        BoxPrimitive([1.0, 0.2, 1.0], [2.6, 0.85, 2.6]),        # table
        SpherePrimitive([1.4, 1.05, 1.4], 0.18),                # vases on the table
        SpherePrimitive([2.1, 1.0, 2.2], 0.15),
        BoxPrimitive([4.4, 0.0, 1.2], [4.9, 3.0, 1.7]),         # pillar
        BoxPrimitive([0.3, 0.2, 4.3], [2.0, 1.0, 5.6]),         # sofa block
    ])
    return BundledScene(
        name="studio",
        scene=scene,
        box=Aabb([0.3, 0.3, 0.3], [5.7, 2.7, 5.7]),
        free_box=Aabb([3.4, 1.4, 3.4], [5.4, 2.5, 5.4]),
        hemisphere_center=np.array([1.8, 0.9, 1.8]),
        hemisphere_radius=1.1,
    )


def gallery() -> BundledScene:
    scene = _room([
        BoxPrimitive([2.8, 0.0, 0.0], [3.2, 2.2, 3.8]),         # partition wall
        BoxPrimitive([1.2, 0.2, 4.6], [1.8, 1.2, 5.2]),         # pedestal + bust
        SpherePrimitive([1.5, 1.45, 4.9], 0.25),
        BoxPrimitive([4.6, 0.2, 1.0], [5.2, 1.0, 1.6]),         # second pedestal
        SpherePrimitive([4.9, 1.25, 1.3], 0.22),
        SpherePrimitive([1.5, 2.5, 1.5], 0.3),                  # hanging lamp
    ])
    return BundledScene(
        name="gallery",
        scene=scene,
        box=Aabb([0.3, 0.3, 0.3], [5.7, 2.7, 5.7]),
        free_box=Aabb([3.8, 0.6, 4.0], [5.6, 2.4, 5.6]),
        hemisphere_center=np.array([1.5, 1.5, 4.9]),
        hemisphere_radius=1.0,
    )


def workshop() -> BundledScene:
    scene = _room([
        BoxPrimitive([0.2, 0.2, 0.2], [5.0, 1.0, 1.0]),         # work bench
        BoxPrimitive([0.4, 0.2, 4.8], [1.6, 1.8, 5.8]),         # crate stack
        SpherePrimitive([5.0, 1.0, 5.0], 0.8),                  # tank
        BoxPrimitive([0.2, 0.2, 2.4], [0.8, 1.9, 3.4]),         # tool cabinet
    ])
    return BundledScene(
        name="workshop",
        scene=scene,
        box=Aabb([0.3, 0.3, 0.3], [5.7, 2.7, 5.7]),
        free_box=Aabb([2.4, 1.2, 2.6], [4.4, 2.6, 4.2]),
        hemisphere_center=np.array([2.6, 1.0, 1.4]),
        hemisphere_radius=1.2,
    )


def bundled_scenes() -> list[BundledScene]:
    return [studio(), gallery(), workshop()]
