"""Dataset serialization: COCO-style JSON with RLE masks, PNGs, OOAM files.

Layout:
    <root>/<scene_id>/<view_id>.rgb.png     8-bit RGB
    <root>/<scene_id>/<view_id>.depth.png   16-bit grayscale, millimeters
    <root>/<scene_id>/<view_id>.ooam.json   {"m": M, "rows": [[...], ...]}
    <root>/annotations.json                 all image + instance records

RLE is the uncompressed integer-array COCO variant: column-major pixel
order, alternating runs starting with a (possibly zero-length) 0-run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .annotations import InstanceAnnotation, mask_bbox

SCHEMA_VERSION = "tablesynth-dataset-1"

DEPTH_CLAMP_MM = 65535


class DatasetFormatError(ValueError):
    pass


@dataclass(frozen=True)
class RleMask:
    size: tuple[int, int]  # (height, width)
    counts: tuple[int, ...]

    def __post_init__(self):
        if any(c < 0 for c in self.counts):
            raise DatasetFormatError("negative run length")
        if sum(self.counts) != self.size[0] * self.size[1]:
            raise DatasetFormatError(
                f"run lengths sum to {sum(self.counts)}, "
                f"expected {self.size[0] * self.size[1]}")


@dataclass
class InstanceRecord:
    instance_id: int
    object_name: str
    visible: RleMask
    amodal: RleMask
    occlusion: RleMask
    occlusion_rate: float
    bbox: tuple[int, int, int, int]
    confidence: float | None = None
    occlusion_missing: bool = False


@dataclass
class DatasetRecord:
    image_id: int
    scene_id: int
    view_id: int
    width: int
    height: int
    rgb_path: str | None
    depth_path: str | None
    ooam_path: str | None
    camera: dict
    instances: list[InstanceRecord] = field(default_factory=list)


def rle_encode(mask: np.ndarray) -> RleMask:
    """Column-major alternating-run encoding of a boolean mask."""
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    flat = mask.reshape(-1, order="F").astype(np.int8)
    if flat.size == 0:
        return RleMask((h, w), (0,))
    change = np.nonzero(np.diff(flat))[0] + 1
    boundaries = np.concatenate([[0], change, [flat.size]])
    counts = np.diff(boundaries).tolist()
    if flat[0] == 1:
        counts = [0] + counts
    return RleMask((h, w), tuple(int(c) for c in counts))


def rle_decode(rle: RleMask) -> np.ndarray:
    """Inverse of rle_encode."""
    h, w = rle.size
    flat = np.zeros(h * w, dtype=bool)
    pos = 0
    value = False
    for count in rle.counts:
        if value:
            flat[pos:pos + count] = True
        pos += count
        value = not value
    return flat.reshape((h, w), order="F")


def _rle_to_json(rle: RleMask) -> dict:
    return {"size": list(rle.size), "counts": list(rle.counts)}


def _rle_from_json(obj, context: str) -> RleMask:
    try:
        size = tuple(int(x) for x in obj["size"])
        counts = tuple(int(c) for c in obj["counts"])
        return RleMask(size, counts)
    except (KeyError, TypeError, ValueError, DatasetFormatError) as exc:
        raise DatasetFormatError(f"{context}: bad RLE mask: {exc}") from exc


def empty_rle(height: int, width: int) -> RleMask:
    return RleMask((height, width), (height * width,))


def write_color_png(path: Path, color: np.ndarray) -> None:
    arr = np.clip(np.asarray(color) * 255.0 + 0.5, 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="RGB").save(path)


def write_depth_png(path: Path, depth_m: np.ndarray) -> None:
    """Depth in meters -> 16-bit millimeter PNG, clamped at 65535."""
    # Half-up rounding: np.round would round ties to even.
    mm = np.clip(np.floor(np.asarray(depth_m) * 1000.0 + 0.5), 0, DEPTH_CLAMP_MM)
    Image.fromarray(mm.astype(np.uint16)).save(path)


def read_depth_png(path: Path) -> np.ndarray:
    """16-bit millimeter PNG -> meters."""
    return np.asarray(Image.open(path), dtype=np.float64) / 1000.0


def write_ooam_json(path: Path, ooam: np.ndarray) -> None:
    payload = {"m": len(ooam),
               "rows": [[int(v) for v in row] for row in ooam]}
    path.write_text(json.dumps(payload, separators=(",", ":")))


def read_ooam_json(path: Path) -> np.ndarray:
    obj = json.loads(Path(path).read_text())
    rows = np.array(obj["rows"], dtype=np.uint8).reshape(obj["m"], obj["m"])
    return rows


def write_view_files(root: Path, scene_id: int, view_id: int, image_id: int,
                     color: np.ndarray, depth: np.ndarray, ooam: np.ndarray,
                     annotations: list[InstanceAnnotation],
                     camera: dict) -> DatasetRecord:
    """Write one view's PNGs and OOAM file; return its annotation record."""
    root = Path(root)
    scene_dir = root / f"{scene_id:05d}"
    scene_dir.mkdir(parents=True, exist_ok=True)
    rgb_path = scene_dir / f"{view_id:04d}.rgb.png"
    depth_path = scene_dir / f"{view_id:04d}.depth.png"
    ooam_path = scene_dir / f"{view_id:04d}.ooam.json"
    write_color_png(rgb_path, color)
    write_depth_png(depth_path, depth)
    write_ooam_json(ooam_path, ooam)
    height, width = depth.shape
    return DatasetRecord(
        image_id=image_id, scene_id=scene_id, view_id=view_id,
        width=width, height=height,
        rgb_path=str(rgb_path.relative_to(root)),
        depth_path=str(depth_path.relative_to(root)),
        ooam_path=str(ooam_path.relative_to(root)),
        camera=camera,
        instances=[
            InstanceRecord(
                instance_id=a.instance_id,
                object_name=a.object_name,
                visible=rle_encode(a.visible),
                amodal=rle_encode(a.amodal),
                occlusion=rle_encode(a.occlusion),
                occlusion_rate=a.occlusion_rate,
                bbox=tuple(a.bbox),
            ) for a in annotations
        ])


class DatasetWriter:
    """Writes view files as they arrive; annotations.json on finalize."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._records: list[DatasetRecord] = []
        self._seen: set[tuple[int, int]] = set()

    def write_view(self, scene_id: int, view_id: int, image_id: int,
                   color: np.ndarray, depth: np.ndarray, ooam: np.ndarray,
                   annotations: list[InstanceAnnotation],
                   camera: dict) -> DatasetRecord:
        if (scene_id, view_id) in self._seen:
            raise DatasetFormatError(f"duplicate view ({scene_id}, {view_id})")
        self._seen.add((scene_id, view_id))
        record = write_view_files(self.root, scene_id, view_id, image_id,
                                  color, depth, ooam, annotations, camera)
        self.add_record(record)
        return record

    def add_record(self, record: DatasetRecord) -> None:
        self._records.append(record)

    def finalize(self) -> Path:
        self._records.sort(key=lambda r: r.image_id)
        payload = {"version": SCHEMA_VERSION,
                   "images": [_record_to_json(r) for r in self._records]}
        path = self.root / "annotations.json"
        path.write_text(json.dumps(payload, indent=1, sort_keys=True))
        return path


def _record_to_json(record: DatasetRecord) -> dict:
    return {
        "image_id": record.image_id,
        "scene_id": record.scene_id,
        "view_id": record.view_id,
        "width": record.width,
        "height": record.height,
        "rgb_path": record.rgb_path,
        "depth_path": record.depth_path,
        "ooam_path": record.ooam_path,
        "camera": record.camera,
        "annotations": [
            {
                "instance_id": inst.instance_id,
                "object_name": inst.object_name,
                "visible_rle": _rle_to_json(inst.visible),
                "amodal_rle": _rle_to_json(inst.amodal),
                "occlusion_rle": _rle_to_json(inst.occlusion),
                "occlusion_rate": inst.occlusion_rate,
                "bbox": list(inst.bbox),
                **({"confidence": inst.confidence}
                   if inst.confidence is not None else {}),
            } for inst in record.instances
        ],
    }


def _instance_from_json(obj: dict, width: int, height: int,
                        context: str) -> InstanceRecord:
    try:
        instance_id = int(obj["instance_id"])
    except (KeyError, TypeError, ValueError):
        raise DatasetFormatError(f"{context}: missing instance_id") from None
    context = f"{context} instance {instance_id}"
    if "visible_rle" not in obj:
        raise DatasetFormatError(f"{context}: missing visible_rle")
    visible = _rle_from_json(obj["visible_rle"], context)
    if "amodal_rle" in obj:
        amodal = _rle_from_json(obj["amodal_rle"], context)
    else:
        amodal = visible
    occlusion_missing = "occlusion_rle" not in obj
    if occlusion_missing:
        occlusion = empty_rle(height, width)
    else:
        occlusion = _rle_from_json(obj["occlusion_rle"], context)
    for name, rle in (("visible", visible), ("amodal", amodal),
                      ("occlusion", occlusion)):
        if rle.size != (height, width):
            raise DatasetFormatError(
                f"{context}: {name} mask size {rle.size} != image "
                f"size {(height, width)}")
    return InstanceRecord(
        instance_id=instance_id,
        object_name=str(obj.get("object_name", "")),
        visible=visible,
        amodal=amodal,
        occlusion=occlusion,
        occlusion_rate=float(obj.get("occlusion_rate", 0.0)),
        bbox=tuple(obj.get("bbox", (0, 0, 0, 0))),
        confidence=obj.get("confidence"),
        occlusion_missing=occlusion_missing,
    )


def _record_from_json(obj: dict, check_files_root: Path | None) -> DatasetRecord:
    try:
        image_id = int(obj["image_id"])
        width = int(obj["width"])
        height = int(obj["height"])
    except (KeyError, TypeError, ValueError):
        raise DatasetFormatError(
            f"record {obj.get('image_id', '?')}: missing image_id/size") from None
    context = f"image {image_id}"
    record = DatasetRecord(
        image_id=image_id,
        scene_id=int(obj.get("scene_id", -1)),
        view_id=int(obj.get("view_id", -1)),
        width=width, height=height,
        rgb_path=obj.get("rgb_path"),
        depth_path=obj.get("depth_path"),
        ooam_path=obj.get("ooam_path"),
        camera=obj.get("camera", {}),
        instances=[_instance_from_json(inst, width, height, context)
                   for inst in obj.get("annotations", [])],
    )
    if check_files_root is not None:
        for rel in (record.rgb_path, record.depth_path, record.ooam_path):
            if rel is not None and not (check_files_root / rel).exists():
                raise DatasetFormatError(f"{context}: missing file {rel}")
    return record


def load_annotation_file(path: str | Path,
                         check_files_root: Path | None = None) -> list[DatasetRecord]:
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetFormatError(f"cannot read {path}: {exc}") from exc
    if not isinstance(obj, dict) or "images" not in obj:
        raise DatasetFormatError(f"{path}: not an annotation file (no 'images')")
    records = [_record_from_json(img, check_files_root) for img in obj["images"]]
    records.sort(key=lambda r: r.image_id)
    ids = [r.image_id for r in records]
    if len(set(ids)) != len(ids):
        raise DatasetFormatError(f"{path}: duplicate image ids")
    return records


def read_dataset(root: str | Path) -> list[DatasetRecord]:
    """Load a generated dataset rooted at `root`, validating referenced files."""
    root = Path(root)
    return load_annotation_file(root / "annotations.json", check_files_root=root)


def read_predictions(path: str | Path) -> list[DatasetRecord]:
    """Load a prediction file using the dataset schema (files not required)."""
    path = Path(path)
    if path.is_dir():
        path = path / "annotations.json"
    return load_annotation_file(path, check_files_root=None)
