"""Annotation-quality metrics and the interpolation comparison harness.

Box errors follow the detection-benchmark convention: translation error is
the center distance, scale error is 1 minus the aligned-box volume IoU,
and orientation error is the geodesic angle between rotation matrices
(all three axes, not just yaw). Mask quality uses IoU and mean absolute
error over the rectangle containing the masks.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .boxes import Box3D, BoxTrack, interpolate_track, quat_to_matrix
from .calib import validate_rotation
from .errors import (
    DimensionMismatch,
    EmptyTruth,
    NonPositiveSize,
    TooFewKeyframes,
)

INTERPOLATION_MODES = ("linear", "cubic", "hybrid")


def iou(mask_a: np.ndarray, mask_b: np.ndarray) -> float:
    """Intersection over union; two empty masks agree perfectly (1.0)."""
    a = np.asarray(mask_a, dtype=bool)
    b = np.asarray(mask_b, dtype=bool)
    if a.shape != b.shape:
        raise DimensionMismatch(f"mask shapes differ: {a.shape} vs {b.shape}")
    union = int(np.logical_or(a, b).sum())
    if union == 0:
        return 1.0
    return float(np.logical_and(a, b).sum()) / union


def mae(mask_a: np.ndarray, mask_b: np.ndarray) -> float:
    """Mean absolute per-pixel difference over the mask window."""
    a = np.asarray(mask_a, dtype=bool)
    b = np.asarray(mask_b, dtype=bool)
    if a.shape != b.shape:
        raise DimensionMismatch(f"mask shapes differ: {a.shape} vs {b.shape}")
    return float(np.mean(np.logical_xor(a, b)))


@dataclass(frozen=True)
class MaskPairEval:
    iou: float
    mae: float
    window: tuple[int, int]  # (height, width)


def union_window(mask_a: np.ndarray, mask_b: np.ndarray) -> tuple[int, int, int, int] | None:
    """Bounding rectangle (x0, y0, x1, y1) of the union of two masks."""
    both = np.logical_or(mask_a, mask_b)
    rows = np.flatnonzero(both.any(axis=1))
    cols = np.flatnonzero(both.any(axis=0))
    if len(rows) == 0:
        return None
    return int(cols[0]), int(rows[0]), int(cols[-1]) + 1, int(rows[-1]) + 1


def evaluate_mask_pair(mask_a: np.ndarray, mask_b: np.ndarray) -> MaskPairEval:
    """IoU plus MAE computed over the rectangle containing both masks."""
    a = np.asarray(mask_a, dtype=bool)
    b = np.asarray(mask_b, dtype=bool)
    if a.shape != b.shape:
        raise DimensionMismatch(f"mask shapes differ: {a.shape} vs {b.shape}")
    window = union_window(a, b)
    if window is None:
        return MaskPairEval(iou=1.0, mae=0.0, window=(0, 0))
    x0, y0, x1, y1 = window
    aw, bw = a[y0:y1, x0:x1], b[y0:y1, x0:x1]
    return MaskPairEval(iou=iou(aw, bw), mae=mae(aw, bw), window=(y1 - y0, x1 - x0))


def ate(box_a: Box3D, box_b: Box3D) -> float:
    """Translation error: Euclidean distance of box centers (meters)."""
    return float(np.linalg.norm(box_a.center - box_b.center))


def ase(box_a: Box3D, box_b: Box3D) -> float:
    """Scale error: 1 - IoU after aligning centers and orientations.

    With both boxes axis-aligned at a shared pose, the volume IoU reduces
    to the product over axes of min(size) / max(size).
    """
    sa = np.asarray(box_a.size, dtype=np.float64)
    sb = np.asarray(box_b.size, dtype=np.float64)
    if np.any(sa <= 0) or np.any(sb <= 0):
        raise NonPositiveSize(f"box sizes must be positive: {sa}, {sb}")
    return 1.0 - float(np.prod(np.minimum(sa, sb)) / np.prod(np.maximum(sa, sb)))


def aoe(rot_a: np.ndarray, rot_b: np.ndarray) -> float:
    """Orientation error: geodesic angle between two rotations (radians)."""
    ra = validate_rotation(rot_a, tol=1e-6)
    rb = validate_rotation(rot_b, tol=1e-6)
    trace = float(np.trace(ra @ rb.T))
    return float(np.arccos(np.clip((trace - 1.0) / 2.0, -1.0, 1.0)))


def aoe_boxes(box_a: Box3D, box_b: Box3D) -> float:
    return aoe(quat_to_matrix(box_a.orientation), quat_to_matrix(box_b.orientation))


# --- whole-document evaluation ------------------------------------------------

@dataclass
class BoxSetEval:
    ase: float
    ate: float
    aoe: float
    coverage: float
    matched: int
    truth_total: int


@dataclass
class MaskSetEval:
    iou: float
    mae: float
    coverage: float
    matched: int
    truth_total: int


@dataclass
class DatasetEval:
    boxes: BoxSetEval | None
    masks: dict[str, MaskSetEval] = field(default_factory=dict)
    track_matches: list[tuple[str, str]] = field(default_factory=list)

    def as_dict(self) -> dict:
        out: dict = {"track_matches": [list(m) for m in self.track_matches]}
        if self.boxes is not None:
            out["boxes"] = vars(self.boxes).copy()
        out["masks"] = {mod: vars(ev).copy() for mod, ev in self.masks.items()}
        return out


def _dense_boxes(tracks: dict[str, BoxTrack], epsilon: float) -> dict[str, dict[int, Box3D]]:
    dense: dict[str, dict[int, Box3D]] = {}
    for tid, track in tracks.items():
        if len(track.keyframes) >= 2:
            dense[tid] = {b.frame_index: b for b in interpolate_track(track, epsilon)}
        elif len(track.keyframes) == 1:
            dense[tid] = dict(track.keyframes)
    return dense


def match_tracks(
    user: dict[str, dict[int, Box3D]], truth: dict[str, dict[int, Box3D]]
) -> list[tuple[str, str]]:
    """Pair user tracks with truth tracks.

    Shared track ids match directly; the rest pair by majority vote of the
    per-frame nearest truth center, resolved greedily by mean distance so
    each truth track is claimed at most once.
    """
    matches = [(tid, tid) for tid in user if tid in truth]
    used_truth = {tid for _, tid in matches}
    candidates = []
    for uid, uboxes in user.items():
        if uid in truth:
            continue
        votes: dict[str, list[float]] = {}
        for frame, ub in uboxes.items():
            best, best_d = None, np.inf
            for tid, tboxes in truth.items():
                if tid in used_truth or frame not in tboxes:
                    continue
                d = float(np.linalg.norm(ub.center - tboxes[frame].center))
                if d < best_d:
                    best, best_d = tid, d
            if best is not None:
                votes.setdefault(best, []).append(best_d)
        if votes:
            tid = max(votes, key=lambda k: len(votes[k]))
            candidates.append((float(np.mean(votes[tid])), uid, tid))
    for _, uid, tid in sorted(candidates):
        if tid not in used_truth and uid not in {u for u, _ in matches}:
            matches.append((uid, tid))
            used_truth.add(tid)
    return matches


def evaluate_boxes(
    user_tracks: dict[str, BoxTrack],
    truth_tracks: dict[str, BoxTrack],
    epsilon: float,
) -> tuple[BoxSetEval, list[tuple[str, str]]]:
    if not truth_tracks:
        raise EmptyTruth("truth document has no tracks")
    user_dense = _dense_boxes(user_tracks, epsilon)
    truth_dense = _dense_boxes(truth_tracks, epsilon)
    truth_total = sum(len(v) for v in truth_dense.values())
    if truth_total == 0:
        raise EmptyTruth("truth document has no boxes")
    matches = match_tracks(user_dense, truth_dense)
    ases: list[float] = []
    ates: list[float] = []
    aoes: list[float] = []
    matched = 0
    for uid, tid in matches:
        uboxes, tboxes = user_dense[uid], truth_dense[tid]
        for frame in sorted(set(uboxes) & set(tboxes)):
            ub, tb = uboxes[frame], tboxes[frame]
            ases.append(ase(ub, tb))
            ates.append(ate(ub, tb))
            aoes.append(aoe_boxes(ub, tb))
            matched += 1
    ev = BoxSetEval(
        ase=float(np.mean(ases)) if ases else 0.0,
        ate=float(np.mean(ates)) if ates else 0.0,
        aoe=float(np.mean(aoes)) if aoes else 0.0,
        coverage=matched / truth_total,
        matched=matched,
        truth_total=truth_total,
    )
    return ev, matches


MaskKey = tuple[int, str, str]  # (frame, modality, track_id)


def evaluate_masks(
    user_masks: dict[MaskKey, np.ndarray],
    truth_masks: dict[MaskKey, np.ndarray],
    track_matches: list[tuple[str, str]] | None = None,
) -> dict[str, MaskSetEval]:
    """Per-modality mask quality for instances present in both documents."""
    to_user = {t: u for u, t in (track_matches or [])}
    results: dict[str, MaskSetEval] = {}
    modalities = {k[1] for k in truth_masks}
    for mod in sorted(modalities):
        ious: list[float] = []
        maes: list[float] = []
        total = 0
        for (frame, m, tid), tmask in truth_masks.items():
            if m != mod:
                continue
            total += 1
            uid = to_user.get(tid, tid)
            umask = user_masks.get((frame, mod, uid))
            if umask is None:
                continue
            pair = evaluate_mask_pair(umask, tmask)
            ious.append(pair.iou)
            maes.append(pair.mae)
        results[mod] = MaskSetEval(
            iou=float(np.mean(ious)) if ious else 0.0,
            mae=float(np.mean(maes)) if maes else 0.0,
            coverage=len(ious) / total if total else 0.0,
            matched=len(ious),
            truth_total=total,
        )
    return results


def evaluate_dataset(
    user_tracks: dict[str, BoxTrack],
    truth_tracks: dict[str, BoxTrack],
    user_masks: dict[MaskKey, np.ndarray] | None = None,
    truth_masks: dict[MaskKey, np.ndarray] | None = None,
    epsilon: float = 0.05,
) -> DatasetEval:
    """Compare one annotation document against a reference document."""
    boxes, matches = evaluate_boxes(user_tracks, truth_tracks, epsilon)
    masks = {}
    if truth_masks:
        masks = evaluate_masks(user_masks or {}, truth_masks, matches)
    return DatasetEval(boxes=boxes, masks=masks, track_matches=matches)


def compare_interpolation(
    track: BoxTrack,
    truth: dict[int, Box3D],
    modes: tuple[str, ...] = INTERPOLATION_MODES,
    epsilon: float = 0.05,
    frames: list[int] | None = None,
) -> dict[str, dict[str, float]]:
    """Interpolate the keyframes each way and score against dense truth.

    ``frames`` optionally restricts scoring to a subset (e.g. only the
    static part of a trajectory). Truth must cover every scored frame.
    """
    if len(track.keyframes) < 2:
        raise TooFewKeyframes("interpolation comparison needs >= 2 keyframes")
    if not truth:
        raise EmptyTruth("dense truth is empty")
    out: dict[str, dict[str, float]] = {}
    for mode in modes:
        boxes = interpolate_track(track, epsilon, mode=mode)
        scored = [b for b in boxes if frames is None or b.frame_index in frames]
        missing = [b.frame_index for b in scored if b.frame_index not in truth]
        if missing:
            raise EmptyTruth(f"truth does not cover frames {missing[:5]}")
        out[mode] = {
            "ate": float(np.mean([ate(b, truth[b.frame_index]) for b in scored])),
            "ase": float(np.mean([ase(b, truth[b.frame_index]) for b in scored])),
        }
    return out


# --- report rendering ---------------------------------------------------------

def render_report(ev: DatasetEval) -> str:
    """Human-readable table of the evaluation results."""
    lines = []
    header = f"{'set':<10} {'ASE':>8} {'ATE':>8} {'AOE':>8} {'IoU':>8} {'MAE':>8} {'Coverage':>9}"
    lines.append(header)
    lines.append("-" * len(header))
    if ev.boxes is not None:
        b = ev.boxes
        lines.append(
            f"{'boxes':<10} {b.ase:>8.4f} {b.ate:>8.4f} {b.aoe:>8.4f} "
            f"{'-':>8} {'-':>8} {b.coverage:>9.3f}"
        )
    for mod, m in sorted(ev.masks.items()):
        lines.append(
            f"{'mask/' + mod:<10} {'-':>8} {'-':>8} {'-':>8} "
            f"{m.iou:>8.4f} {m.mae:>8.4f} {m.coverage:>9.3f}"
        )
    return "\n".join(lines) + "\n"
