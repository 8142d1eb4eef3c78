import numpy as np
import pytest

from tablesynth.config import GenerationConfig
from tablesynth.meshes import box_mesh
from tablesynth.pipeline import generate_dataset
from tablesynth.sampling import (CameraIntrinsics, Pose, SceneConfig,
                                 TableSpec, Viewpoint)
from tablesynth.settling import ObjectInstance, SceneState


@pytest.fixture
def table():
    return TableSpec(1.2, 0.8, 0.75)


@pytest.fixture
def rng():
    return np.random.default_rng(123)


def make_cube_scene(table, specs):
    """Scene of axis-aligned cubes: specs are (mesh_id, side, center_xyz)."""
    meshes = {}
    objects = []
    for i, (mesh_id, side, center) in enumerate(specs):
        if mesh_id not in meshes:
            meshes[mesh_id] = box_mesh(side, side, side)
        pose = Pose(np.asarray(center, dtype=float), np.zeros(3))
        half = side / 2
        aabb = np.array([np.asarray(center) - half, np.asarray(center) + half])
        objects.append(ObjectInstance(i, mesh_id, pose, aabb))
    return SceneState(table, objects), meshes


def overhead_view(table, width=160, height=120, distance=1.0):
    """Camera on the table axis looking straight down at the top center."""
    intr = CameraIntrinsics(1.88, 2.63, 1.96, width, height)
    pos = np.array([0.0, 0.0, table.height + distance])
    return Viewpoint(pos, table.top_center, intr)


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """A small generated dataset shared by io/metrics/cli tests."""
    root = tmp_path_factory.mktemp("ds")
    cfg = GenerationConfig(
        scene=SceneConfig(master_seed=77, v_views=2, n_lower=3, n_upper=8,
                          image_width=160, image_height=120),
        num_scenes=2)
    generate_dataset(cfg, root, jobs=1)
    return root
