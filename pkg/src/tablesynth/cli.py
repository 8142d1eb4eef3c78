"""Command-line interface: generate, eval, inspect."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from . import __version__
from .annotations import build_oodag, grasp_order
from .config import load_config
from .dataset_io import (DatasetFormatError, read_dataset, read_ooam_json,
                         read_predictions, rle_decode)
from .metrics import EvaluationError, evaluate_dataset
from .pipeline import generate_dataset
from .sampling import ConfigError

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

_LAYER_COLORS = {"Top": "palegreen", "Intermediate": "orange",
                 "Bottom": "lightcoral"}

_OVERLAY_PALETTE = np.array([
    [230, 60, 60], [60, 130, 230], [70, 200, 90], [235, 190, 40],
    [170, 90, 220], [60, 200, 200], [230, 120, 180], [150, 150, 60],
], dtype=float)


def _cmd_generate(args) -> int:
    cfg = load_config(args.config)
    jobs = args.jobs if args.jobs is not None else (os.cpu_count() or 1)
    path = generate_dataset(cfg, args.output, jobs=jobs)
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    gt = read_dataset(args.gt_root)
    preds = read_predictions(args.predictions)
    report = evaluate_dataset(gt, preds, dilation_radius=args.dilation_radius)
    out = Path(args.report)
    out.write_text(json.dumps(report.to_json(), indent=1))
    print(report.format_table())
    print(f"report written to {out}")
    return EXIT_OK


def _overlay(rgb: np.ndarray, masks) -> np.ndarray:
    out = rgb.astype(float) * 0.45
    for k, mask in enumerate(masks):
        color = _OVERLAY_PALETTE[k % len(_OVERLAY_PALETTE)]
        out[mask] = 0.35 * out[mask] + 0.65 * color
    return np.clip(out, 0, 255).astype(np.uint8)


def _cmd_inspect(args) -> int:
    root = Path(args.root)
    records = read_dataset(root)
    matches = [r for r in records
               if r.scene_id == args.scene and r.view_id == args.view]
    if not matches:
        raise DatasetFormatError(
            f"no record for scene {args.scene}, view {args.view}")
    record = matches[0]
    out_dir = Path(args.output) if args.output else root / "inspect"
    out_dir.mkdir(parents=True, exist_ok=True)
    prefix = f"s{args.scene:05d}_v{args.view:04d}"

    rgb = np.asarray(Image.open(root / record.rgb_path).convert("RGB"))
    for kind in ("visible", "amodal", "occlusion"):
        masks = [rle_decode(getattr(i, kind)) for i in record.instances]
        img = _overlay(rgb, masks)
        Image.fromarray(img).save(out_dir / f"{prefix}.{kind}.png")

    ooam = read_ooam_json(root / record.ooam_path)
    ids = [i.instance_id for i in record.instances]
    dag = build_oodag(ooam, node_ids=ids)
    order = grasp_order(dag)
    lines = ["digraph occlusion_order {"]
    if order is None:
        lines.append("  // cyclic: no topological grasp order")
    else:
        lines.append(f"  // grasp order: {order}")
    names = {i.instance_id: i.object_name for i in record.instances}
    for n in dag.nodes:
        color = _LAYER_COLORS[dag.layers[n]]
        lines.append(f'  n{n} [label="{n}:{names[n]}" style=filled '
                     f'fillcolor={color}];')
    for a, b in dag.edges:
        lines.append(f"  n{a} -> n{b};")
    lines.append("}")
    (out_dir / f"{prefix}.oodag.dot").write_text("\n".join(lines) + "\n")
    print(f"wrote overlays and graph to {out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tablesynth",
        description="Generate and evaluate cluttered-tabletop amodal "
                    "instance segmentation datasets.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a dataset from a YAML config")
    gen.add_argument("config", help="YAML configuration file")
    gen.add_argument("output", help="output dataset root directory")
    gen.add_argument("--jobs", type=int, default=None,
                     help="parallel scene workers (default: all cores)")
    gen.set_defaults(func=_cmd_generate)

    ev = sub.add_parser("eval", help="evaluate predictions against a dataset")
    ev.add_argument("gt_root", help="ground-truth dataset root")
    ev.add_argument("predictions", help="prediction JSON (dataset schema)")
    ev.add_argument("--dilation-radius", type=int, default=None,
                    help="boundary tolerance in pixels (default: from image size)")
    ev.add_argument("--report", default="report.json",
                    help="output report path (default: report.json)")
    ev.set_defaults(func=_cmd_eval)

    ins = sub.add_parser("inspect", help="emit mask overlays and the OODAG")
    ins.add_argument("root", help="dataset root")
    ins.add_argument("scene", type=int)
    ins.add_argument("view", type=int)
    ins.add_argument("--output", default=None,
                     help="output directory (default: <root>/inspect)")
    ins.set_defaults(func=_cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DatasetFormatError, EvaluationError,
            FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
