"""YAML run configuration."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, asdict
from pathlib import Path

import yaml

from .sampling import ConfigError, SceneConfig, TableSpec

DEFAULT_TABLES = [
    (1.2, 0.8, 0.75),
    (1.0, 1.0, 0.72),
    (1.6, 0.9, 0.76),
    (0.9, 0.6, 0.70),
]


@dataclass
class GenerationConfig:
    scene: SceneConfig = field(default_factory=SceneConfig)
    num_scenes: int = 1
    tables: list[tuple[float, float, float]] = field(
        default_factory=lambda: list(DEFAULT_TABLES))
    mesh_dir: str | None = None       # None: use the built-in primitive catalog
    n_builtin_meshes: int = 12

    def __post_init__(self):
        if self.num_scenes < 1:
            raise ConfigError("num_scenes must be >= 1")
        if not self.tables:
            raise ConfigError("table catalog is empty")
        for t in self.tables:
            TableSpec(*t)  # validates

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scene"] = asdict(self.scene)
        d["tables"] = [list(t) for t in self.tables]
        return d


_SCENE_FIELDS = {f.name for f in fields(SceneConfig)}
_TOP_FIELDS = {"num_scenes", "tables", "mesh_dir", "n_builtin_meshes"}


def config_from_dict(data: dict) -> GenerationConfig:
    unknown = set(data) - _SCENE_FIELDS - _TOP_FIELDS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    scene_kwargs = {}
    for key in _SCENE_FIELDS & set(data):
        value = data[key]
        if key in ("temperature_bounds", "intensity_bounds") and value is not None:
            value = tuple(value)
        scene_kwargs[key] = value
    top_kwargs = {k: data[k] for k in _TOP_FIELDS & set(data)}
    if "tables" in top_kwargs:
        top_kwargs["tables"] = [tuple(t) for t in top_kwargs["tables"]]
    return GenerationConfig(scene=SceneConfig(**scene_kwargs), **top_kwargs)


def load_config(path: str | Path) -> GenerationConfig:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot load config {path}: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    return config_from_dict(data)
