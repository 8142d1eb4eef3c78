"""Per-view annotations: visible/amodal/occlusion masks, OOAM and OODAG.

Masks are plain (H, W) boolean numpy arrays. Occlusion order conventions:
OOAM[i][j] = 1 means object i occludes object j, and the derived graph has
a directed edge i -> j for every such entry.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .rendering import rasterize

LAYER_TOP = "Top"
LAYER_INTERMEDIATE = "Intermediate"
LAYER_BOTTOM = "Bottom"


@dataclass
class InstanceAnnotation:
    instance_id: int
    object_name: str
    visible: np.ndarray
    amodal: np.ndarray
    occlusion: np.ndarray
    occlusion_rate: float
    bbox: tuple[int, int, int, int]  # (x, y, w, h) over the visible mask


@dataclass
class OODAG:
    nodes: list[int]
    edges: list[tuple[int, int]]
    is_cyclic: bool
    layers: dict[int, str] = field(default_factory=dict)


def mask_bbox(mask: np.ndarray) -> tuple[int, int, int, int]:
    """Tight (x, y, w, h) box of a boolean mask; (0, 0, 0, 0) if empty."""
    ys, xs = np.nonzero(mask)
    if len(xs) == 0:
        return (0, 0, 0, 0)
    x0, x1 = int(xs.min()), int(xs.max())
    y0, y1 = int(ys.min()), int(ys.max())
    return (x0, y0, x1 - x0 + 1, y1 - y0 + 1)


def annotate_view(scene, view, meshes, full=None):
    """Compute per-object masks and the view's OOAM.

    Visible masks come from the full-scene render; each amodal mask from an
    isolated render of that object alone (table still present). Objects
    with an empty amodal mask (outside the frustum) or occlusion rate 1
    (fully hidden) are dropped. Returns (annotations, ooam) where the OOAM
    rows/columns follow the order of the returned annotation list.
    """
    all_ids = [o.instance_id for o in scene.objects]
    if full is None:
        full = rasterize(scene, view, all_ids, meshes)
    annotations = []
    for obj in scene.objects:
        isolated = rasterize(scene, view, [obj.instance_id], meshes)
        amodal = isolated.instance_map == obj.instance_id
        amodal_px = int(amodal.sum())
        if amodal_px == 0:
            continue
        visible = full.instance_map == obj.instance_id
        occlusion = amodal & ~visible
        rate = float(occlusion.sum()) / amodal_px
        if rate >= 1.0:
            continue
        annotations.append(InstanceAnnotation(
            instance_id=obj.instance_id,
            object_name=obj.mesh_id,
            visible=visible,
            amodal=amodal,
            occlusion=occlusion,
            occlusion_rate=rate,
            bbox=mask_bbox(visible),
        ))
    ooam = generate_ooam([a.visible for a in annotations],
                         [a.occlusion for a in annotations])
    return annotations, ooam


def generate_ooam(visible_masks, occlusion_masks) -> np.ndarray:
    """M x M occlusion-order matrix: entry (i, j) = 1 iff the visible part
    of object i intersects the occluded part of object j."""
    if len(visible_masks) != len(occlusion_masks):
        raise ValueError("visible and occlusion mask lists differ in length")
    m = len(visible_masks)
    ooam = np.zeros((m, m), dtype=np.uint8)
    for i in range(m):
        vis = visible_masks[i]
        for j in range(m):
            if i == j:
                continue
            occ = occlusion_masks[j]
            if vis.shape != occ.shape:
                raise ValueError("mask dimensions differ")
            if np.logical_and(vis, occ).any():
                ooam[i, j] = 1
    return ooam


def _has_cycle(nodes: list[int], adjacency: dict[int, list[int]]) -> bool:
    WHITE, GRAY, BLACK = 0, 1, 2
    state = {n: WHITE for n in nodes}

    def dfs(start):
        stack = [(start, iter(adjacency[start]))]
        state[start] = GRAY
        while stack:
            node, it = stack[-1]
            for nxt in it:
                if state[nxt] == GRAY:
                    return True
                if state[nxt] == WHITE:
                    state[nxt] = GRAY
                    stack.append((nxt, iter(adjacency[nxt])))
                    break
            else:
                state[node] = BLACK
                stack.pop()
        return False

    return any(state[n] == WHITE and dfs(n) for n in nodes)


def build_oodag(ooam: np.ndarray, node_ids=None) -> OODAG:
    """Directed occlusion graph from the OOAM, with cycle flag and layers."""
    m = len(ooam)
    nodes = list(node_ids) if node_ids is not None else list(range(m))
    edges = [(nodes[i], nodes[j])
             for i in range(m) for j in range(m) if ooam[i][j]]
    adjacency = {n: [] for n in nodes}
    for a, b in edges:
        adjacency[a].append(b)
    dag = OODAG(nodes, edges, _has_cycle(nodes, adjacency))
    dag.layers = classify_layers(dag)
    return dag


def classify_layers(dag: OODAG) -> dict[int, str]:
    """Top: not occluded (in-degree 0). Bottom: occluded, occludes nothing.
    Intermediate: occluded and occluding."""
    in_deg = {n: 0 for n in dag.nodes}
    out_deg = {n: 0 for n in dag.nodes}
    for a, b in dag.edges:
        out_deg[a] += 1
        in_deg[b] += 1
    layers = {}
    for n in dag.nodes:
        if in_deg[n] == 0:
            layers[n] = LAYER_TOP
        elif out_deg[n] == 0:
            layers[n] = LAYER_BOTTOM
        else:
            layers[n] = LAYER_INTERMEDIATE
    return layers


def grasp_order(dag: OODAG) -> list[int] | None:
    """Topological picking order (ties by ascending id); None if cyclic."""
    in_deg = {n: 0 for n in dag.nodes}
    adjacency = {n: [] for n in dag.nodes}
    for a, b in dag.edges:
        adjacency[a].append(b)
        in_deg[b] += 1
    ready = [n for n in dag.nodes if in_deg[n] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        n = heapq.heappop(ready)
        order.append(n)
        for nxt in adjacency[n]:
            in_deg[nxt] -= 1
            if in_deg[nxt] == 0:
                heapq.heappush(ready, nxt)
    if len(order) != len(dag.nodes):
        return None
    return order
