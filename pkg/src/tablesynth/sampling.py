"""Random sampling of object sets, poses, camera viewpoints and lights.

All functions are pure in the passed-in numpy Generator: the same generator
state always yields the same sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Initial poses are drawn inside a box floating above the table (bottom at
# h + POSE_BOX_OFFSET, POSE_BOX_HEIGHT tall).
POSE_BOX_OFFSET = 0.2
POSE_BOX_HEIGHT = 0.5

# Camera/light hemispheres share an origin this far above the tabletop.
HEMISPHERE_Z_OFFSET = 0.2

VIEW_RADIUS_FACTOR = 1.7
LIGHT_RADIUS_GAP = 0.1
LIGHT_SHELL_THICKNESS = 1.0

APEX_EPS = 1e-6


class ConfigError(ValueError):
    """Invalid scene configuration or catalog."""


@dataclass(frozen=True)
class TableSpec:
    """Tabletop dimensions in meters; the top surface is centered at (0, 0, h)."""

    width: float
    length: float
    height: float

    def __post_init__(self):
        if self.width <= 0 or self.length <= 0 or self.height <= 0:
            raise ConfigError("table dimensions must be positive")

    @property
    def top_center(self) -> np.ndarray:
        return np.array([0.0, 0.0, self.height])


@dataclass(frozen=True)
class SceneConfig:
    """Knobs controlling one generated scene."""

    n_lower: int = 1
    n_upper: int = 40
    v_views: int = 5
    l_lower: int = 0
    l_upper: int = 2
    # Settle duration kept for config compatibility; the deterministic
    # settler ignores it.
    settle_time: float = 5.0
    master_seed: int = 0
    image_width: int = 640
    image_height: int = 480
    focal_length: float = 1.88
    horizontal_aperture: float = 2.63
    vertical_aperture: float = 1.96
    temperature_bounds: tuple[float, float] = (2000.0, 6500.0)
    intensity_bounds: tuple[float, float] = (100.0, 20000.0)
    # Optional fixed hemisphere radii; None means derive from the table.
    r_view_lower: float | None = None
    r_view_upper: float | None = None
    r_light_lower: float | None = None
    r_light_upper: float | None = None

    def __post_init__(self):
        if not (1 <= self.n_lower <= self.n_upper):
            raise ConfigError("need 1 <= n_lower <= n_upper")
        if self.v_views < 1:
            raise ConfigError("v_views must be >= 1")
        if not (0 <= self.l_lower <= self.l_upper):
            raise ConfigError("need 0 <= l_lower <= l_upper")
        if self.image_width < 1 or self.image_height < 1:
            raise ConfigError("image size must be positive")


@dataclass(frozen=True)
class Pose:
    """Position plus roll/pitch/yaw (radians, each in [0, 2pi))."""

    position: np.ndarray
    orientation: np.ndarray

    def rotation_matrix(self) -> np.ndarray:
        roll, pitch, yaw = self.orientation
        cr, sr = np.cos(roll), np.sin(roll)
        cp, sp = np.cos(pitch), np.sin(pitch)
        cy, sy = np.cos(yaw), np.sin(yaw)
        rx = np.array([[1, 0, 0], [0, cr, -sr], [0, sr, cr]])
        ry = np.array([[cp, 0, sp], [0, 1, 0], [-sp, 0, cp]])
        rz = np.array([[cy, -sy, 0], [sy, cy, 0], [0, 0, 1]])
        return rz @ ry @ rx


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics in the aperture/focal parameterization."""

    focal_length: float
    horizontal_aperture: float
    vertical_aperture: float
    image_width: int
    image_height: int

    def __post_init__(self):
        for v in (self.focal_length, self.horizontal_aperture,
                  self.vertical_aperture, self.image_width, self.image_height):
            if v <= 0:
                raise ConfigError("intrinsics must be positive")

    @property
    def fx(self) -> float:
        return self.image_width * self.focal_length / self.horizontal_aperture

    @property
    def fy(self) -> float:
        return self.image_height * self.focal_length / self.vertical_aperture


@dataclass(frozen=True)
class LightSource:
    position: np.ndarray
    intensity: float    # lux
    temperature: float  # Kelvin


@dataclass(frozen=True)
class Viewpoint:
    """One camera pose looking at the tabletop center, with its light set."""

    position: np.ndarray
    look_target: np.ndarray
    intrinsics: CameraIntrinsics
    lights: list[LightSource] = field(default_factory=list)

    def with_lights(self, lights: list[LightSource]) -> "Viewpoint":
        return Viewpoint(self.position, self.look_target, self.intrinsics, lights)


def sample_object_set(catalog: list[str], cfg: SceneConfig,
                      rng: np.random.Generator) -> list[str]:
    """Draw a with-replacement object set of uniform size in [n_lower, n_upper]."""
    if not catalog:
        raise ConfigError("mesh catalog is empty")
    k = int(rng.integers(cfg.n_lower, cfg.n_upper + 1))
    idx = rng.integers(0, len(catalog), size=k)
    return [catalog[i] for i in idx]


def sample_initial_pose(table: TableSpec, rng: np.random.Generator) -> Pose:
    """Uniform pose inside the initialization box floating above the table."""
    x = rng.uniform(-table.width / 2, table.width / 2)
    y = rng.uniform(-table.length / 2, table.length / 2)
    z = rng.uniform(table.height + POSE_BOX_OFFSET,
                    table.height + POSE_BOX_OFFSET + POSE_BOX_HEIGHT)
    rpy = rng.uniform(0.0, 2 * np.pi, size=3)
    return Pose(np.array([x, y, z]), rpy)


def view_radius_bounds(table: TableSpec) -> tuple[float, float]:
    """Camera hemisphere radii derived from the table footprint."""
    lower = max(table.width / 2, table.length / 2)
    return lower, VIEW_RADIUS_FACTOR * lower


def light_radius_bounds(r_view_upper: float) -> tuple[float, float]:
    lower = r_view_upper + LIGHT_RADIUS_GAP
    return lower, lower + LIGHT_SHELL_THICKNESS


def hemisphere_offset(r, u, v) -> np.ndarray:
    """Offset vector(s) on the upper hemisphere of radius r.

    r * (sin(acos(1-v)) cos(2pi u), sin(acos(1-v)) sin(2pi u), cos(acos(1-v)))
    for u, v in [0, 1]; the z component is r*(1-v) >= 0.
    """
    r = np.asarray(r, dtype=float)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    polar = np.arccos(1.0 - v)
    sin_p = np.sin(polar)
    return np.stack([
        r * sin_p * np.cos(2 * np.pi * u),
        r * sin_p * np.sin(2 * np.pi * u),
        r * np.cos(polar),
    ], axis=-1)


def sample_hemisphere_points(r_lower: float, r_upper: float, origin,
                             rng: np.random.Generator, n: int) -> np.ndarray:
    """Sample n points in the upper annular hemisphere shell around origin,
    with r ~ U[r_lower, r_upper] and u, v ~ U[0, 1]."""
    if not (0 < r_lower <= r_upper):
        raise ConfigError("need 0 < r_lower <= r_upper")
    r = rng.uniform(r_lower, r_upper, size=n)
    u = rng.uniform(0.0, 1.0, size=n)
    v = rng.uniform(0.0, 1.0, size=n)
    return np.asarray(origin, dtype=float) + hemisphere_offset(r, u, v)


def sample_hemisphere_point(r_lower: float, r_upper: float, origin,
                            rng: np.random.Generator) -> np.ndarray:
    return sample_hemisphere_points(r_lower, r_upper, origin, rng, 1)[0]


def _resolved_view_radii(table: TableSpec, cfg: SceneConfig) -> tuple[float, float]:
    lower, upper = view_radius_bounds(table)
    if cfg.r_view_lower is not None:
        lower = cfg.r_view_lower
    if cfg.r_view_upper is not None:
        upper = cfg.r_view_upper
    return lower, upper


def _resolved_light_radii(table: TableSpec, cfg: SceneConfig) -> tuple[float, float]:
    _, view_upper = _resolved_view_radii(table, cfg)
    lower, upper = light_radius_bounds(view_upper)
    if cfg.r_light_lower is not None:
        lower = cfg.r_light_lower
    if cfg.r_light_upper is not None:
        upper = cfg.r_light_upper
    return lower, upper


def hemisphere_origin(table: TableSpec) -> np.ndarray:
    return np.array([0.0, 0.0, table.height + HEMISPHERE_Z_OFFSET])


def sample_viewpoint(table: TableSpec, cfg: SceneConfig,
                     rng: np.random.Generator) -> Viewpoint:
    """One camera position in the view hemisphere, aimed at (0, 0, h)."""
    r_lower, r_upper = _resolved_view_radii(table, cfg)
    pos = sample_hemisphere_point(r_lower, r_upper, hemisphere_origin(table), rng)
    intr = CameraIntrinsics(cfg.focal_length, cfg.horizontal_aperture,
                            cfg.vertical_aperture, cfg.image_width,
                            cfg.image_height)
    return Viewpoint(pos, table.top_center, intr)


def sample_viewpoints(table: TableSpec, cfg: SceneConfig,
                      rng: np.random.Generator) -> list[Viewpoint]:
    """V viewpoints, each with its own freshly sampled light set."""
    views = []
    for _ in range(cfg.v_views):
        view = sample_viewpoint(table, cfg, rng)
        views.append(view.with_lights(sample_lights(table, cfg, rng)))
    return views


def sample_lights(table: TableSpec, cfg: SceneConfig,
                  rng: np.random.Generator) -> list[LightSource]:
    """Spherical light sources in the (larger) light hemisphere shell."""
    count = int(rng.integers(cfg.l_lower, cfg.l_upper + 1))
    if count == 0:
        return []
    r_lower, r_upper = _resolved_light_radii(table, cfg)
    origin = hemisphere_origin(table)
    lights = []
    for _ in range(count):
        pos = sample_hemisphere_point(r_lower, r_upper, origin, rng)
        temperature = rng.uniform(*cfg.temperature_bounds)
        intensity = rng.uniform(*cfg.intensity_bounds)
        lights.append(LightSource(pos, intensity, temperature))
    return lights
