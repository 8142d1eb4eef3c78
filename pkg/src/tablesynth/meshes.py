"""Triangle meshes: OBJ-subset parsing, built-in primitives, transforms."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .sampling import Pose


class ObjParseError(ValueError):
    """Malformed OBJ input; carries the offending line number."""


@dataclass
class Mesh:
    vertices: np.ndarray   # (N, 3) float
    triangles: np.ndarray  # (M, 3) int, indices into vertices
    color: np.ndarray = field(default_factory=lambda: np.array([0.7, 0.7, 0.7]))

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.triangles = np.asarray(self.triangles, dtype=int)
        if np.isnan(self.vertices).any():
            raise ObjParseError("mesh contains NaN vertices")
        if self.triangles.size and (self.triangles.min() < 0 or
                                    self.triangles.max() >= len(self.vertices)):
            raise ObjParseError("triangle index out of range")


def parse_obj(data: bytes | str) -> Mesh:
    """Parse a Wavefront OBJ subset: v and f lines, fan-triangulated faces.

    Supports 1-based and negative indices and `v/vt/vn` slash syntax.
    Unknown directives are ignored.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    vertices: list[list[float]] = []
    triangles: list[list[int]] = []
    for lineno, raw in enumerate(data.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            if len(parts) < 4:
                raise ObjParseError(f"line {lineno}: vertex needs 3 coordinates")
            try:
                vertices.append([float(x) for x in parts[1:4]])
            except ValueError:
                raise ObjParseError(f"line {lineno}: bad vertex coordinate") from None
        elif tag == "f":
            if len(parts) < 4:
                raise ObjParseError(f"line {lineno}: face needs >= 3 vertices")
            idx = []
            for token in parts[1:]:
                head = token.split("/")[0]
                try:
                    i = int(head)
                except ValueError:
                    raise ObjParseError(f"line {lineno}: bad face index {token!r}") from None
                if i == 0:
                    raise ObjParseError(f"line {lineno}: OBJ indices are 1-based")
                idx.append(i - 1 if i > 0 else len(vertices) + i)
            for k in range(1, len(idx) - 1):
                triangles.append([idx[0], idx[k], idx[k + 1]])
    if not triangles:
        raise ObjParseError("no faces found (empty mesh)")
    mesh = Mesh(np.array(vertices), np.array(triangles))
    return mesh


def load_obj(path: str | Path) -> Mesh:
    return parse_obj(Path(path).read_bytes())


def transform_vertices(mesh: Mesh, pose: Pose) -> np.ndarray:
    """Mesh vertices in world frame under the given pose."""
    return mesh.vertices @ pose.rotation_matrix().T + pose.position


def mesh_aabb(mesh: Mesh, pose: Pose) -> np.ndarray:
    """(2, 3) array [min_corner, max_corner] of the posed mesh."""
    v = transform_vertices(mesh, pose)
    return np.stack([v.min(axis=0), v.max(axis=0)])


def box_mesh(sx: float, sy: float, sz: float, color=None) -> Mesh:
    """Axis-aligned box centered at the origin."""
    hx, hy, hz = sx / 2, sy / 2, sz / 2
    corners = np.array([[x, y, z]
                        for x in (-hx, hx) for y in (-hy, hy) for z in (-hz, hz)])
    faces = np.array([
        [0, 1, 3], [0, 3, 2],   # x = -hx
        [4, 6, 7], [4, 7, 5],   # x = +hx
        [0, 4, 5], [0, 5, 1],   # y = -hy
        [2, 3, 7], [2, 7, 6],   # y = +hy
        [0, 2, 6], [0, 6, 4],   # z = -hz
        [1, 5, 7], [1, 7, 3],   # z = +hz
    ])
    mesh = Mesh(corners, faces)
    if color is not None:
        mesh.color = np.asarray(color, dtype=float)
    return mesh


def tetrahedron_mesh(size: float, color=None) -> Mesh:
    s = size / 2
    verts = np.array([[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]])
    faces = np.array([[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]])
    mesh = Mesh(verts, faces)
    if color is not None:
        mesh.color = np.asarray(color, dtype=float)
    return mesh


def octahedron_mesh(size: float, color=None) -> Mesh:
    s = size / 2
    verts = np.array([[s, 0, 0], [-s, 0, 0], [0, s, 0],
                      [0, -s, 0], [0, 0, s], [0, 0, -s]])
    faces = np.array([[0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4],
                      [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]])
    mesh = Mesh(verts, faces)
    if color is not None:
        mesh.color = np.asarray(color, dtype=float)
    return mesh


_PALETTE = np.array([
    [0.85, 0.30, 0.25], [0.25, 0.60, 0.85], [0.35, 0.75, 0.35],
    [0.90, 0.70, 0.20], [0.65, 0.40, 0.80], [0.30, 0.75, 0.70],
    [0.85, 0.50, 0.65], [0.55, 0.55, 0.30],
])


def builtin_catalog(n: int = 12) -> dict[str, Mesh]:
    """Deterministic catalog of small household-scale primitives.

    Used when no mesh directory is configured, and by tests.
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(7)))
    catalog: dict[str, Mesh] = {}
    makers = ("box", "tetra", "octa")
    for i in range(n):
        kind = makers[i % len(makers)]
        color = _PALETTE[i % len(_PALETTE)]
        if kind == "box":
            dims = rng.uniform(0.04, 0.14, size=3)
            mesh = box_mesh(*dims, color=color)
        elif kind == "tetra":
            mesh = tetrahedron_mesh(rng.uniform(0.05, 0.15), color=color)
        else:
            mesh = octahedron_mesh(rng.uniform(0.05, 0.15), color=color)
        catalog[f"{kind}_{i:02d}"] = mesh
    return catalog


def load_catalog(mesh_dir: str | Path) -> dict[str, Mesh]:
    """Load every .obj in a directory, keyed by file stem."""
    mesh_dir = Path(mesh_dir)
    paths = sorted(mesh_dir.glob("*.obj"))
    if not paths:
        raise FileNotFoundError(f"no .obj files in {mesh_dir}")
    catalog = {}
    for i, path in enumerate(paths):
        mesh = load_obj(path)
        mesh.color = _PALETTE[i % len(_PALETTE)]
        catalog[path.stem] = mesh
    return catalog
