"""Deterministic drop-settling of objects onto the tabletop.

Replaces a rigid-body simulation with AABB stacking: objects fall straight
down, landing on the table surface or on a previously settled object whose
footprint sufficiently overlaps theirs. Orientation never changes.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .sampling import Pose, TableSpec

# Minimum horizontal AABB overlap, as a fraction of the smaller footprint,
# for one object to rest on another instead of falling past it.
STACK_OVERLAP_FRACTION = 0.25


@dataclass(frozen=True)
class ObjectInstance:
    instance_id: int
    mesh_id: str
    pose: Pose
    aabb: np.ndarray  # (2, 3): [min_corner, max_corner], world frame


@dataclass(frozen=True)
class SceneState:
    table: TableSpec
    objects: list[ObjectInstance]


def _footprint_overlap_fraction(a: np.ndarray, b: np.ndarray) -> float:
    """Horizontal AABB intersection area over the smaller footprint area."""
    dx = min(a[1, 0], b[1, 0]) - max(a[0, 0], b[0, 0])
    dy = min(a[1, 1], b[1, 1]) - max(a[0, 1], b[0, 1])
    if dx <= 0 or dy <= 0:
        return 0.0
    area_a = (a[1, 0] - a[0, 0]) * (a[1, 1] - a[0, 1])
    area_b = (b[1, 0] - b[0, 0]) * (b[1, 1] - b[0, 1])
    smaller = min(area_a, area_b)
    if smaller <= 0:
        return 0.0
    return dx * dy / smaller


def _dropped(obj: ObjectInstance, rest_bottom: float) -> ObjectInstance:
    dz = rest_bottom - obj.aabb[0, 2]
    pose = Pose(obj.pose.position + np.array([0.0, 0.0, dz]),
                obj.pose.orientation)
    aabb = obj.aabb + np.array([0.0, 0.0, dz])
    return replace(obj, pose=pose, aabb=aabb)


def settle_scene(initial: SceneState) -> SceneState:
    """Drop objects in ascending initial height onto table or stack.

    Lowest objects land first; later (higher) ones may rest on them.
    Processing low-to-high makes settling idempotent.
    """
    order = sorted(initial.objects,
                   key=lambda o: (o.pose.position[2], o.instance_id))
    settled: list[ObjectInstance] = []
    for obj in order:
        rest_bottom = initial.table.height
        for other in settled:
            if _footprint_overlap_fraction(obj.aabb, other.aabb) > STACK_OVERLAP_FRACTION:
                rest_bottom = max(rest_bottom, other.aabb[1, 2])
        settled.append(_dropped(obj, rest_bottom))
    settled.sort(key=lambda o: o.instance_id)
    return SceneState(initial.table, settled)


def remove_out_of_bounds(scene: SceneState) -> SceneState:
    """Drop objects off the table footprint; re-index survivors densely."""
    w2 = scene.table.width / 2
    l2 = scene.table.length / 2
    h = scene.table.height
    survivors = []
    for obj in scene.objects:
        center = (obj.aabb[0] + obj.aabb[1]) / 2
        if abs(center[0]) > w2 or abs(center[1]) > l2:
            continue
        if obj.aabb[1, 2] < h:
            continue
        survivors.append(obj)
    reindexed = [replace(o, instance_id=i) for i, o in enumerate(survivors)]
    return SceneState(scene.table, reindexed)
