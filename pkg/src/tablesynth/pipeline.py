"""End-to-end dataset generation: sample, settle, render, annotate, write.

Scenes are independent given their RNG substreams, so they can be
generated on any number of workers without changing the output.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .annotations import annotate_view
from .config import GenerationConfig
from .dataset_io import DatasetRecord, DatasetWriter, write_view_files
from .meshes import Mesh, builtin_catalog, load_catalog, mesh_aabb
from .rendering import rasterize
from .rng import RNG_SCHEME, substream
from .sampling import (TableSpec, sample_initial_pose, sample_lights,
                       sample_object_set, sample_viewpoint)
from .settling import ObjectInstance, SceneState, remove_out_of_bounds, settle_scene

# Substream tags keep scene-level and view-level streams disjoint.
_SCENE_STREAM = 0
_VIEW_STREAM = 1


def resolve_catalog(cfg: GenerationConfig) -> dict[str, Mesh]:
    if cfg.mesh_dir is None:
        return builtin_catalog(cfg.n_builtin_meshes)
    return load_catalog(cfg.mesh_dir)


def build_scene(cfg: GenerationConfig, catalog: dict[str, Mesh],
                scene_index: int) -> SceneState:
    """Sample, settle and prune one scene from its own substream."""
    rng = substream(cfg.scene.master_seed, _SCENE_STREAM, scene_index)
    table = TableSpec(*cfg.tables[int(rng.integers(len(cfg.tables)))])
    names = sorted(catalog)
    mesh_ids = sample_object_set(names, cfg.scene, rng)
    objects = []
    for i, mesh_id in enumerate(mesh_ids):
        pose = sample_initial_pose(table, rng)
        objects.append(ObjectInstance(
            instance_id=i, mesh_id=mesh_id, pose=pose,
            aabb=mesh_aabb(catalog[mesh_id], pose)))
    scene = SceneState(table, objects)
    return remove_out_of_bounds(settle_scene(scene))


def _camera_json(view) -> dict:
    intr = view.intrinsics
    return {
        "position": [float(x) for x in view.position],
        "look_target": [float(x) for x in view.look_target],
        "focal_length": intr.focal_length,
        "horizontal_aperture": intr.horizontal_aperture,
        "vertical_aperture": intr.vertical_aperture,
        "image_width": intr.image_width,
        "image_height": intr.image_height,
        "lights": [
            {"position": [float(x) for x in l.position],
             "intensity": l.intensity,
             "temperature": l.temperature} for l in view.lights
        ],
    }


def generate_scene(cfg: GenerationConfig, catalog: dict[str, Mesh],
                   scene_index: int, root: Path) -> tuple[list[DatasetRecord], int]:
    """Generate and write every view of one scene.

    Returns (records, settled object count).
    """
    scene = build_scene(cfg, catalog, scene_index)
    records = []
    for view_index in range(cfg.scene.v_views):
        rng = substream(cfg.scene.master_seed, _VIEW_STREAM,
                        scene_index, view_index)
        view = sample_viewpoint(scene.table, cfg.scene, rng)
        view = view.with_lights(sample_lights(scene.table, cfg.scene, rng))
        full = rasterize(scene, view, [o.instance_id for o in scene.objects],
                         catalog)
        annotations, ooam = annotate_view(scene, view, catalog, full=full)
        image_id = scene_index * cfg.scene.v_views + view_index
        records.append(write_view_files(
            root, scene_index, view_index, image_id,
            full.color, full.depth_map, ooam, annotations,
            _camera_json(view)))
    return records, len(scene.objects)


def _scene_task(args):
    cfg, catalog, scene_index, root = args
    start = time.perf_counter()
    records, n_objects = generate_scene(cfg, catalog, scene_index, Path(root))
    return scene_index, records, n_objects, time.perf_counter() - start


def generate_dataset(cfg: GenerationConfig, root: str | Path,
                     jobs: int = 1) -> Path:
    """Generate the full dataset; returns the annotations.json path."""
    root = Path(root)
    catalog = resolve_catalog(cfg)
    writer = DatasetWriter(root)
    start = time.perf_counter()
    tasks = [(cfg, catalog, i, str(root)) for i in range(cfg.num_scenes)]
    results = []
    if jobs > 1 and cfg.num_scenes > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_scene_task, tasks))
    else:
        results = [_scene_task(t) for t in tasks]
    results.sort(key=lambda r: r[0])
    object_counts = {}
    timings = {}
    for scene_index, records, n_objects, elapsed in results:
        for record in records:
            writer.add_record(record)
        object_counts[str(scene_index)] = n_objects
        timings[str(scene_index)] = elapsed
    annotations_path = writer.finalize()
    manifest = {
        "tool_version": __version__,
        "rng_scheme": RNG_SCHEME,
        "master_seed": cfg.scene.master_seed,
        "config": cfg.to_dict(),
        "scene_object_counts": object_counts,
        "scene_seconds": timings,
        "total_seconds": time.perf_counter() - start,
    }
    tmp = root / "run_manifest.json.tmp"
    tmp.write_text(json.dumps(manifest, indent=1, sort_keys=True))
    tmp.replace(root / "run_manifest.json")
    return annotations_path
