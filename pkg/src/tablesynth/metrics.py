"""Evaluation: Hungarian matching, Overlap/Boundary P/R/F, F@.75,
occlusion classification, and occlusion-order accuracy.

Instances are matched once per image, on visible masks, by maximizing the
total pairwise overlap F-measure; all metrics reuse that matching.
Metrics with an empty domain for an image (no ground truth of that kind)
are reported as None and excluded from dataset means.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.optimize import linear_sum_assignment

from .annotations import generate_ooam
from .dataset_io import DatasetRecord, rle_decode

MASK_KINDS = ("amodal", "visible", "invisible")

F75_THRESHOLD = 0.75

# Fraction of the image diagonal used for the default boundary-dilation
# radius (at least 1 px).
BOUNDARY_TOLERANCE_FRACTION = 0.0075


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f_measure: float


@dataclass
class Matching:
    pairs: list[tuple[int, int]]       # (gt index, pred index)
    unmatched_gt: list[int]
    unmatched_pred: list[int]

    def pred_for_gt(self, gt_index: int) -> int | None:
        for g, p in self.pairs:
            if g == gt_index:
                return p
        return None


def _prf(precision: float, recall: float) -> PRF:
    denom = precision + recall
    f = 2 * precision * recall / denom if denom > 0 else 0.0
    return PRF(precision, recall, f)


def pair_f(pred: np.ndarray, gt: np.ndarray) -> PRF:
    """Pixelwise P/R/F of one predicted mask against one ground truth mask."""
    if pred.shape != gt.shape:
        raise EvaluationError("mask dimensions differ")
    inter = int(np.logical_and(pred, gt).sum())
    n_pred = int(pred.sum())
    n_gt = int(gt.sum())
    precision = inter / n_pred if n_pred > 0 else 0.0
    recall = inter / n_gt if n_gt > 0 else 0.0
    return _prf(precision, recall)


def pairwise_f_matrix(preds, gts) -> np.ndarray:
    """(n_gt, n_pred) matrix of pairwise overlap F-measures."""
    mat = np.zeros((len(gts), len(preds)))
    for j, gt in enumerate(gts):
        for i, pred in enumerate(preds):
            mat[j, i] = pair_f(pred, gt).f_measure
    return mat


def hungarian_match(preds, gts) -> Matching:
    """Optimal assignment maximizing total pairwise overlap F."""
    if not preds or not gts:
        return Matching([], list(range(len(gts))), list(range(len(preds))))
    score = pairwise_f_matrix(preds, gts)
    rows, cols = linear_sum_assignment(-score)
    pairs = sorted(zip(rows.tolist(), cols.tolist()))
    matched_gt = {g for g, _ in pairs}
    matched_pred = {p for _, p in pairs}
    return Matching(
        pairs=pairs,
        unmatched_gt=[j for j in range(len(gts)) if j not in matched_gt],
        unmatched_pred=[i for i in range(len(preds)) if i not in matched_pred],
    )


def brute_force_match_total(preds, gts) -> float:
    """Exhaustive-enumeration optimum of the matching objective (small inputs)."""
    score = pairwise_f_matrix(preds, gts)
    n_gt, n_pred = score.shape
    k = min(n_gt, n_pred)
    best = 0.0
    for gt_subset in itertools.combinations(range(n_gt), k):
        for perm in itertools.permutations(range(n_pred), k):
            best = max(best, sum(score[g, p] for g, p in zip(gt_subset, perm)))
    return best


def overlap_prf(matching: Matching, preds, gts) -> PRF | None:
    """Micro-averaged Overlap P/R/F; unmatched predictions count against
    precision and unmatched ground truths against recall."""
    inter = 0
    for g, p in matching.pairs:
        inter += int(np.logical_and(preds[p], gts[g]).sum())
    pred_total = sum(int(m.sum()) for m in preds)
    gt_total = sum(int(m.sum()) for m in gts)
    if pred_total == 0 and gt_total == 0:
        return None
    precision = inter / pred_total if pred_total > 0 else 0.0
    recall = inter / gt_total if gt_total > 0 else 0.0
    return _prf(precision, recall)


def mask_contour(mask: np.ndarray) -> np.ndarray:
    """8-connected one-pixel boundary (image border counts as outside)."""
    if not mask.any():
        return np.zeros_like(mask, dtype=bool)
    eroded = ndimage.binary_erosion(mask, structure=np.ones((3, 3), dtype=bool))
    return mask & ~eroded


def disk_structure(radius: int) -> np.ndarray:
    r = int(radius)
    if r <= 0:
        return np.ones((1, 1), dtype=bool)
    y, x = np.mgrid[-r:r + 1, -r:r + 1]
    return x * x + y * y <= r * r


def dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    if radius <= 0 or not mask.any():
        return mask
    return ndimage.binary_dilation(mask, structure=disk_structure(radius))


def default_dilation_radius(width: int, height: int) -> int:
    diag = float(np.hypot(width, height))
    return max(1, round(BOUNDARY_TOLERANCE_FRACTION * diag))


def boundary_prf(matching: Matching, preds, gts, dilation_radius: int) -> PRF | None:
    """Overlap-style P/R/F on dilated mask contours."""
    num_p = 0
    num_r = 0
    for g, p in matching.pairs:
        pred_b = mask_contour(preds[p])
        gt_b = mask_contour(gts[g])
        num_p += int((pred_b & dilate(gt_b, dilation_radius)).sum())
        num_r += int((dilate(pred_b, dilation_radius) & gt_b).sum())
    pred_total = sum(int(mask_contour(m).sum()) for m in preds)
    gt_total = sum(int(mask_contour(m).sum()) for m in gts)
    if pred_total == 0 and gt_total == 0:
        return None
    precision = num_p / pred_total if pred_total > 0 else 0.0
    recall = num_r / gt_total if gt_total > 0 else 0.0
    return _prf(precision, recall)


def f_at_75(matching: Matching, preds, gts) -> float | None:
    """Fraction of (non-empty) ground truths whose matched overlap F > 0.75."""
    eligible = 0
    hits = 0
    for j, gt in enumerate(gts):
        if not gt.any():
            continue
        eligible += 1
        p = matching.pred_for_gt(j)
        if p is None:
            continue
        if pair_f(preds[p], gt).f_measure > F75_THRESHOLD:
            hits += 1
    if eligible == 0:
        return None
    return hits / eligible


@dataclass
class OcclusionClsStats:
    alpha: int   # matched instances
    beta: int    # predicted-occluded among matched
    gamma: int   # ground-truth-occluded among matched
    delta: int   # true positives (predicted and truly occluded)
    correct: int  # matched instances whose occluded flag is predicted right


def occlusion_cls(matching: Matching, pred_occ, gt_occ):
    """(ACC_O, F_O, stats). An instance counts as occluded iff its occlusion
    mask has at least one pixel. Images with no occlusion on either side
    report (None, None): there is nothing to classify."""
    alpha = len(matching.pairs)
    if alpha == 0:
        return None, None, OcclusionClsStats(0, 0, 0, 0, 0)
    beta = gamma = delta = correct = 0
    for g, p in matching.pairs:
        pred_flag = bool(pred_occ[p].any())
        gt_flag = bool(gt_occ[g].any())
        beta += pred_flag
        gamma += gt_flag
        delta += pred_flag and gt_flag
        correct += pred_flag == gt_flag
    stats = OcclusionClsStats(alpha, beta, gamma, delta, correct)
    if beta == 0 and gamma == 0:
        return None, None, stats
    acc = correct / alpha
    if beta == 0 or gamma == 0:
        return acc, 0.0, stats
    return acc, _prf(delta / beta, delta / gamma).f_measure, stats


def aligned_pred_ooam(matching: Matching, pred_vis, pred_occ,
                      gt_count: int, shape) -> np.ndarray:
    """Prediction OOAM in ground-truth instance order; unmatched ground
    truth slots get empty masks (all-zero rows/columns)."""
    empty = np.zeros(shape, dtype=bool)
    vis = []
    occ = []
    for j in range(gt_count):
        p = matching.pred_for_gt(j)
        if p is None:
            vis.append(empty)
            occ.append(empty)
        else:
            vis.append(pred_vis[p])
            occ.append(pred_occ[p])
    return generate_ooam(vis, occ)


def ooam_accuracy(gt_ooam: np.ndarray, pred_ooam: np.ndarray) -> float | None:
    """Fraction of matching off-diagonal entries between two OOAMs."""
    m = len(gt_ooam)
    if m < 2:
        return None
    similarity = int((np.asarray(gt_ooam) == np.asarray(pred_ooam)).sum())
    return (similarity - m) / (m * m - m)


def occlusion_order_accuracy(gt_vis, gt_occ, pred_vis, pred_occ,
                             matching: Matching | None = None) -> float | None:
    """Occlusion-order accuracy of predictions against ground truth.

    Builds both OOAMs over the ground-truth instance ordering after
    Hungarian matching on visible masks. Single-object images score 1.0
    when the object is matched, 0.0 otherwise; empty images score None.
    """
    m = len(gt_vis)
    if m == 0:
        return None
    if matching is None:
        matching = hungarian_match(pred_vis, gt_vis)
    if m == 1:
        return 1.0 if len(matching.pairs) == 1 else 0.0
    gt_ooam = generate_ooam(gt_vis, gt_occ)
    pred_ooam = aligned_pred_ooam(matching, pred_vis, pred_occ, m,
                                  gt_vis[0].shape)
    return ooam_accuracy(gt_ooam, pred_ooam)


@dataclass
class KindMetrics:
    overlap: PRF | None
    boundary: PRF | None
    f_at_75: float | None


@dataclass
class ImageMetrics:
    image_id: int
    kinds: dict[str, KindMetrics]
    acc_occlusion: float | None
    f_occlusion: float | None
    acc_occlusion_order: float | None


@dataclass
class MetricsReport:
    images: list[ImageMetrics]
    means: dict[str, float | None] = field(default_factory=dict)
    dilation_radius: int = 0

    def to_json(self) -> dict:
        def prf_json(prf):
            if prf is None:
                return None
            return {"precision": prf.precision, "recall": prf.recall,
                    "f_measure": prf.f_measure}

        return {
            "matching": "hungarian on visible masks, reused for all metrics",
            "dilation_radius": self.dilation_radius,
            "means": self.means,
            "images": [
                {
                    "image_id": im.image_id,
                    "acc_occlusion": im.acc_occlusion,
                    "f_occlusion": im.f_occlusion,
                    "acc_occlusion_order": im.acc_occlusion_order,
                    **{
                        kind: {
                            "overlap": prf_json(km.overlap),
                            "boundary": prf_json(km.boundary),
                            "f_at_75": km.f_at_75,
                        } for kind, km in im.kinds.items()
                    },
                } for im in self.images
            ],
        }

    def format_table(self) -> str:
        def fmt(x):
            return "  -  " if x is None else f"{x:5.3f}"

        m = self.means
        header1 = ("               |   Amodal Mask   |  Invisible Mask |"
                   " Occlusion |   Visible Mask  |")
        header2 = ("               |  OV    BO  F@.75|  OV    BO  F@.75|"
                   "  F_O  ACC_O|  OV    BO  F@.75| ACC_OO")
        row = ("dataset mean   |"
               f"{fmt(m['amodal/overlap_f'])} {fmt(m['amodal/boundary_f'])} "
               f"{fmt(m['amodal/f_at_75'])}|"
               f"{fmt(m['invisible/overlap_f'])} {fmt(m['invisible/boundary_f'])} "
               f"{fmt(m['invisible/f_at_75'])}|"
               f"{fmt(m['f_occlusion'])} {fmt(m['acc_occlusion'])}|"
               f"{fmt(m['visible/overlap_f'])} {fmt(m['visible/boundary_f'])} "
               f"{fmt(m['visible/f_at_75'])}|"
               f" {fmt(m['acc_occlusion_order'])}")
        return "\n".join([header1, header2, row])


def _decode_masks(record: DatasetRecord):
    visible = [rle_decode(i.visible) for i in record.instances]
    amodal = [rle_decode(i.amodal) for i in record.instances]
    occlusion = [rle_decode(i.occlusion) for i in record.instances]
    return {"visible": visible, "amodal": amodal, "invisible": occlusion}


def evaluate_image(gt: DatasetRecord, pred: DatasetRecord,
                   dilation_radius: int) -> ImageMetrics:
    gt_masks = _decode_masks(gt)
    pred_masks = _decode_masks(pred)
    matching = hungarian_match(pred_masks["visible"], gt_masks["visible"])
    kinds = {}
    for kind in MASK_KINDS:
        preds, gts = pred_masks[kind], gt_masks[kind]
        kinds[kind] = KindMetrics(
            overlap=overlap_prf(matching, preds, gts),
            boundary=boundary_prf(matching, preds, gts, dilation_radius),
            f_at_75=f_at_75(matching, preds, gts),
        )
    acc_o, f_o, _ = occlusion_cls(matching, pred_masks["invisible"],
                                  gt_masks["invisible"])
    acc_oo = occlusion_order_accuracy(
        gt_masks["visible"], gt_masks["invisible"],
        pred_masks["visible"], pred_masks["invisible"], matching=matching)
    return ImageMetrics(gt.image_id, kinds, acc_o, f_o, acc_oo)


def _mean(values) -> float | None:
    present = [v for v in values if v is not None]
    if not present:
        return None
    return float(sum(present) / len(present))


def evaluate_dataset(gt_records: list[DatasetRecord],
                     pred_records: list[DatasetRecord],
                     dilation_radius: int | None = None) -> MetricsReport:
    """Per-image metrics plus unweighted dataset means."""
    gt_by_id = {r.image_id: r for r in gt_records}
    pred_by_id = {r.image_id: r for r in pred_records}
    missing = sorted(set(gt_by_id) - set(pred_by_id))
    extra = sorted(set(pred_by_id) - set(gt_by_id))
    if missing or extra:
        raise EvaluationError(
            f"image id mismatch: missing from predictions {missing}, "
            f"unknown prediction ids {extra}")
    if dilation_radius is None:
        if gt_records:
            dilation_radius = default_dilation_radius(gt_records[0].width,
                                                      gt_records[0].height)
        else:
            dilation_radius = 0
    images = [evaluate_image(gt_by_id[i], pred_by_id[i], dilation_radius)
              for i in sorted(gt_by_id)]
    means: dict[str, float | None] = {}
    for kind in MASK_KINDS:
        for attr in ("precision", "recall", "f_measure"):
            short = {"precision": "p", "recall": "r", "f_measure": "f"}[attr]
            means[f"{kind}/overlap_{short}"] = _mean(
                getattr(im.kinds[kind].overlap, attr)
                if im.kinds[kind].overlap else None for im in images)
            means[f"{kind}/boundary_{short}"] = _mean(
                getattr(im.kinds[kind].boundary, attr)
                if im.kinds[kind].boundary else None for im in images)
        means[f"{kind}/f_at_75"] = _mean(im.kinds[kind].f_at_75 for im in images)
    means["acc_occlusion"] = _mean(im.acc_occlusion for im in images)
    means["f_occlusion"] = _mean(im.f_occlusion for im in images)
    means["acc_occlusion_order"] = _mean(im.acc_occlusion_order for im in images)
    return MetricsReport(images, means, dilation_radius)
