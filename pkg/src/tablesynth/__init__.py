"""Seedable cluttered-tabletop amodal segmentation dataset generator and evaluator."""

__version__ = "0.1.0"

from .sampling import (CameraIntrinsics, LightSource, Pose, SceneConfig,
                       TableSpec, Viewpoint)
from .settling import ObjectInstance, SceneState
from .meshes import Mesh, parse_obj
from .rendering import RenderOutput, rasterize
from .annotations import InstanceAnnotation, OODAG, annotate_view, generate_ooam
from .dataset_io import RleMask, rle_decode, rle_encode, read_dataset
from .metrics import MetricsReport, evaluate_dataset, hungarian_match

__all__ = [
    "CameraIntrinsics", "LightSource", "Pose", "SceneConfig", "TableSpec",
    "Viewpoint", "ObjectInstance", "SceneState", "Mesh", "parse_obj",
    "RenderOutput", "rasterize", "InstanceAnnotation", "OODAG",
    "annotate_view", "generate_ooam", "RleMask", "rle_decode", "rle_encode",
    "read_dataset", "MetricsReport", "evaluate_dataset", "hungarian_match",
    "__version__",
]
