"""Tracking metrics from predicted and ground-truth records.

Per-frame correspondence solves a Hungarian assignment on (1 - IoU), gated at
the IoU threshold, which yields FP/FN and identity switches (a ground-truth
track whose matched predicted id changes between consecutive matched frames
counts one switch).  IDF1 comes from a single global bipartite matching
between predicted and ground-truth identities that maximizes the number of
frame-level hits, solved with the same assignment module.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import assignment
from .errors import DuplicateKeyError

_GATED = 4.0  # cost well above any reachable 1 - IoU value


@dataclass
class EvalReport:
    idf1: float
    mota: float
    idsw: int
    fp: int
    fn: int
    idtp: int
    idfp: int
    idfn: int
    num_gt: int


def iou(a, b) -> float:
    """Intersection-over-union of two (left, top, width, height) boxes."""
    ax1, ay1, aw, ah = a
    bx1, by1, bw, bh = b
    ix1 = max(ax1, bx1)
    iy1 = max(ay1, by1)
    ix2 = min(ax1 + aw, bx1 + bw)
    iy2 = min(ay1 + ah, by1 + bh)
    iw = max(0.0, ix2 - ix1)
    ih = max(0.0, iy2 - iy1)
    inter = iw * ih
    if inter == 0.0:
        return 0.0
    return inter / (aw * ah + bw * bh - inter)


def _by_frame(records, label: str):
    frames: dict[int, list] = {}
    seen = set()
    for r in records:
        key = (r.frame, r.id)
        if key in seen:
            raise DuplicateKeyError(f"duplicate (frame, id) {key} in {label}")
        seen.add(key)
        frames.setdefault(r.frame, []).append(r)
    return frames


def evaluate(pred, gt, iou_thr: float = 0.5) -> EvalReport:
    """Score predicted records against ground truth.

    Raises DuplicateKeyError when either input repeats a (frame, id) pair.
    idf1 and mota are NaN when their denominators are zero.
    """
    if not (0.0 < iou_thr < 1.0):
        raise ValueError(f"iou_thr must lie in (0, 1), got {iou_thr}")
    pred_frames = _by_frame(pred, "predictions")
    gt_frames = _by_frame(gt, "ground truth")
    num_gt = len(gt)
    num_pred = len(pred)

    fp = fn = idsw = 0
    last_matched_pred: dict[int, int] = {}
    overlap: dict[tuple[int, int], int] = {}

    for frame in sorted(set(gt_frames) | set(pred_frames)):
        g_rows = gt_frames.get(frame, [])
        p_rows = pred_frames.get(frame, [])
        if g_rows and p_rows:
            ious = np.array(
                [[iou(g.box, p.box) for p in p_rows] for g in g_rows]
            )
            # binary per-frame hits for the global identity matching
            for gi, g in enumerate(g_rows):
                for pi, p in enumerate(p_rows):
                    if ious[gi, pi] >= iou_thr:
                        key = (g.id, p.id)
                        overlap[key] = overlap.get(key, 0) + 1
            costs = np.where(ious >= iou_thr, 1.0 - ious, _GATED)
            result = assignment.solve(costs)
            matched_g = set()
            matched_p = set()
            for gi, pi in result.pairs:
                if ious[gi, pi] < iou_thr:
                    continue
                matched_g.add(gi)
                matched_p.add(pi)
                gid = g_rows[gi].id
                pid = p_rows[pi].id
                if gid in last_matched_pred and last_matched_pred[gid] != pid:
                    idsw += 1
                last_matched_pred[gid] = pid
            fn += len(g_rows) - len(matched_g)
            fp += len(p_rows) - len(matched_p)
        else:
            fn += len(g_rows)
            fp += len(p_rows)

    idtp = _best_identity_overlap(overlap)
    idfn = num_gt - idtp
    idfp = num_pred - idtp
    denom = 2 * idtp + idfp + idfn
    idf1 = (2.0 * idtp / denom) if denom > 0 else math.nan
    mota = (1.0 - (fn + fp + idsw) / num_gt) if num_gt > 0 else math.nan
    return EvalReport(idf1, mota, idsw, fp, fn, idtp, idfp, idfn, num_gt)


def _best_identity_overlap(overlap: dict[tuple[int, int], int]) -> int:
    """Maximum total frame hits over injective gt-id to pred-id matchings."""
    if not overlap:
        return 0
    gt_ids = sorted({g for g, _ in overlap})
    pred_ids = sorted({p for _, p in overlap})
    g_index = {g: i for i, g in enumerate(gt_ids)}
    p_index = {p: i for i, p in enumerate(pred_ids)}
    costs = np.zeros((len(gt_ids), len(pred_ids)))
    for (g, p), hits in overlap.items():
        costs[g_index[g], p_index[p]] = -float(hits)
    result = assignment.solve(costs)
    return int(-sum(costs[r, c] for r, c in result.pairs))


def format_report(report: EvalReport) -> str:
    """Aligned human-readable block followed by machine-readable key=value."""
    lines = [
        f"{'IDF1':>6}  {report.idf1:.4f}" if not math.isnan(report.idf1) else f"{'IDF1':>6}  nan",
        f"{'MOTA':>6}  {report.mota:.4f}" if not math.isnan(report.mota) else f"{'MOTA':>6}  nan",
        f"{'IDSW':>6}  {report.idsw}",
        f"{'FP':>6}  {report.fp}",
        f"{'FN':>6}  {report.fn}",
        "",
        f"idf1={report.idf1!r}",
        f"mota={report.mota!r}",
        f"idsw={report.idsw}",
        f"fp={report.fp}",
        f"fn={report.fn}",
        f"idtp={report.idtp}",
        f"idfp={report.idfp}",
        f"idfn={report.idfn}",
        f"num_gt={report.num_gt}",
    ]
    return "\n".join(lines)
