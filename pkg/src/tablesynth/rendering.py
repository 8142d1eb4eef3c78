"""Depth-buffered software rasterizer with flat-color Lambertian shading."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .meshes import Mesh, transform_vertices
from .sampling import Viewpoint

BACKGROUND_ID = -1
TABLE_ID = -2

NEAR_PLANE = 1e-4

# Scales lux / distance^2 into displayable [0, 1] range.
LIGHT_EXPOSURE = 6e-5
AMBIENT = 0.30

TABLE_COLOR = np.array([0.55, 0.45, 0.35])


class RenderError(RuntimeError):
    pass


@dataclass
class RenderOutput:
    instance_map: np.ndarray  # (H, W) int, BACKGROUND_ID / TABLE_ID / instance id
    depth_map: np.ndarray     # (H, W) float meters, 0 at background
    color: np.ndarray         # (H, W, 3) float in [0, 1]


def camera_basis(view: Viewpoint) -> np.ndarray:
    """Rows are the camera's x (right), y (down), z (forward) axes in world.

    Looking straight down (apex) the world +z up-reference degenerates;
    world +x is used instead.
    """
    forward = view.look_target - view.position
    norm = np.linalg.norm(forward)
    if norm == 0:
        raise RenderError("camera position coincides with look target")
    forward = forward / norm
    up_ref = np.array([0.0, 0.0, 1.0])
    right = np.cross(forward, up_ref)
    if np.linalg.norm(right) < 1e-9:
        up_ref = np.array([1.0, 0.0, 0.0])
        right = np.cross(forward, up_ref)
    right = right / np.linalg.norm(right)
    down = np.cross(forward, right)
    return np.stack([right, down, forward])


def world_to_camera(points: np.ndarray, view: Viewpoint) -> np.ndarray:
    basis = camera_basis(view)
    return (np.atleast_2d(points) - view.position) @ basis.T


def project_point(p_world, view: Viewpoint):
    """Pinhole-project a world point.

    Returns (pixel_x, pixel_y, depth, valid); points at or behind the near
    plane are flagged invalid rather than raising.
    """
    cam = world_to_camera(np.asarray(p_world, dtype=float), view)[0]
    z = cam[2]
    if z <= NEAR_PLANE:
        return 0.0, 0.0, z, False
    intr = view.intrinsics
    px = intr.image_width / 2 + intr.fx * cam[0] / z
    py = intr.image_height / 2 + intr.fy * cam[1] / z
    return px, py, z, True


def kelvin_to_rgb(temperature: float) -> np.ndarray:
    """Blackbody color approximation (Tanner Helland fit), clamped to [1000, 12000] K."""
    t = min(max(float(temperature), 1000.0), 12000.0) / 100.0
    if t <= 66:
        red = 255.0
        green = 99.4708025861 * np.log(t) - 161.1195681661
    else:
        red = 329.698727446 * (t - 60) ** -0.1332047592
        green = 288.1221695283 * (t - 60) ** -0.0755148492
    if t >= 66:
        blue = 255.0
    elif t <= 19:
        blue = 0.0
    else:
        blue = 138.5177312231 * np.log(t - 10) - 305.0447927307
    rgb = np.array([red, green, blue]) / 255.0
    return np.clip(rgb, 0.0, 1.0)


def _shade(albedo: np.ndarray, normal: np.ndarray, world_pts: np.ndarray,
           lights) -> np.ndarray:
    """Lambertian shading of pixels sharing one face normal."""
    total = np.full((len(world_pts), 3), AMBIENT)
    for light in lights:
        to_light = light.position - world_pts
        dist_sq = np.maximum(np.sum(to_light * to_light, axis=1), 1e-6)
        direction = to_light / np.sqrt(dist_sq)[:, None]
        # Double-sided surfaces: use |n . l|.
        lambert = np.abs(direction @ normal)
        scale = light.intensity * LIGHT_EXPOSURE * lambert / dist_sq
        total += scale[:, None] * kelvin_to_rgb(light.temperature)
    return np.clip(total * albedo, 0.0, 1.0)


def _table_mesh(table) -> Mesh:
    w2, l2, h = table.width / 2, table.length / 2, table.height
    verts = np.array([[-w2, -l2, h], [w2, -l2, h], [w2, l2, h], [-w2, l2, h]])
    return Mesh(verts, np.array([[0, 1, 2], [0, 2, 3]]), color=TABLE_COLOR)


def _raster_triangles(vertices_world: np.ndarray, triangles: np.ndarray,
                      albedo: np.ndarray, surface_id: int, view: Viewpoint,
                      id_buf, depth_buf, color_buf) -> None:
    intr = view.intrinsics
    width, height = intr.image_width, intr.image_height
    basis = camera_basis(view)
    cam = (vertices_world - view.position) @ basis.T
    z = cam[:, 2]
    px = width / 2 + intr.fx * cam[:, 0] / np.where(z > NEAR_PLANE, z, 1.0)
    py = height / 2 + intr.fy * cam[:, 1] / np.where(z > NEAR_PLANE, z, 1.0)

    for tri in triangles:
        tz = z[tri]
        if np.any(tz <= NEAR_PLANE):
            continue
        tx, ty = px[tri], py[tri]
        area = (tx[1] - tx[0]) * (ty[2] - ty[0]) - (tx[2] - tx[0]) * (ty[1] - ty[0])
        if abs(area) < 1e-12:
            continue
        x0 = max(int(np.floor(tx.min() - 0.5)), 0)
        x1 = min(int(np.ceil(tx.max() - 0.5)), width - 1)
        y0 = max(int(np.floor(ty.min() - 0.5)), 0)
        y1 = min(int(np.ceil(ty.max() - 0.5)), height - 1)
        if x1 < x0 or y1 < y0:
            continue
        xs = np.arange(x0, x1 + 1) + 0.5
        ys = np.arange(y0, y1 + 1) + 0.5
        gx, gy = np.meshgrid(xs, ys)
        w0 = ((tx[1] - tx[0]) * (gy - ty[0]) - (ty[1] - ty[0]) * (gx - tx[0])) / area
        w1 = ((tx[2] - tx[1]) * (gy - ty[1]) - (ty[2] - ty[1]) * (gx - tx[1])) / area
        w2 = 1.0 - w0 - w1
        # Barycentric weights relative to (v0, v1, v2): coverage requires all >= 0.
        b2, b0, b1 = w0, w1, w2
        inside = (b0 >= 0) & (b1 >= 0) & (b2 >= 0)
        if not inside.any():
            continue
        inv_z = b0 / tz[0] + b1 / tz[1] + b2 / tz[2]
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            pix_z = 1.0 / inv_z
        sub_depth = depth_buf[y0:y1 + 1, x0:x1 + 1]
        wins = inside & (pix_z < sub_depth)
        if not wins.any():
            continue
        v0w, v1w, v2w = vertices_world[tri]
        normal = np.cross(v1w - v0w, v2w - v0w)
        nn = np.linalg.norm(normal)
        if nn == 0:
            continue
        normal = normal / nn
        zw = pix_z[wins]
        world_pts = (b0[wins, None] * v0w / tz[0] + b1[wins, None] * v1w / tz[1]
                     + b2[wins, None] * v2w / tz[2]) * zw[:, None]
        shaded = _shade(albedo, normal, world_pts, view.lights)
        sub_depth[wins] = zw
        id_buf[y0:y1 + 1, x0:x1 + 1][wins] = surface_id
        color_buf[y0:y1 + 1, x0:x1 + 1][wins] = shaded


def rasterize(scene, view: Viewpoint, visible_ids, meshes: dict[str, Mesh],
              include_table: bool = True) -> RenderOutput:
    """Z-buffer render of the requested objects plus the tabletop plane.

    Equal-depth ties go to the earlier-drawn surface; objects are drawn in
    ascending instance id (table first), so the lower id wins.
    """
    intr = view.intrinsics
    height, width = intr.image_height, intr.image_width
    id_buf = np.full((height, width), BACKGROUND_ID, dtype=np.int32)
    depth_buf = np.full((height, width), np.inf)
    color_buf = np.zeros((height, width, 3))

    if include_table:
        table = _table_mesh(scene.table)
        _raster_triangles(table.vertices, table.triangles, table.color,
                          TABLE_ID, view, id_buf, depth_buf, color_buf)

    visible_ids = set(visible_ids)
    for obj in sorted(scene.objects, key=lambda o: o.instance_id):
        if obj.instance_id not in visible_ids:
            continue
        if obj.mesh_id not in meshes:
            raise RenderError(f"mesh {obj.mesh_id!r} not loaded")
        mesh = meshes[obj.mesh_id]
        verts = transform_vertices(mesh, obj.pose)
        _raster_triangles(verts, mesh.triangles, mesh.color, obj.instance_id,
                          view, id_buf, depth_buf, color_buf)

    depth_map = np.where(np.isfinite(depth_buf), depth_buf, 0.0)
    return RenderOutput(id_buf, depth_map, color_buf)
