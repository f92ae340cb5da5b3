"""Single-stage online tracker driven purely by appearance similarity.

Per frame: gate detections on confidence, fit or reuse the discriminant
projection from the live trajectories' feature queues (falling back to the
original space when fewer than two trajectories or too few samples exist),
blend projected- and original-space cosine similarities, assign with the
Hungarian solver, then update matched tracks, spawn newborns from confident
leftovers and age out trajectories that have been missing too long.

Thresholds gate strictly: a detection survives when conf > tau_det, a pair is
accepted when its normalized similarity (cos + 1)/2 > tau_sim, and a leftover
becomes a newborn when conf > tau_new.  Matching always runs against every
live trajectory, including ones currently unseen, and those trajectories also
keep contributing to the projection fit until removal.

A TrackerState must be driven by one thread at a time; separate sequences can
run in parallel with independent states.
"""

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import assignment, fld
from .errors import (
    ConfigError,
    DimensionMismatchError,
    FrameOrderError,
    ZeroVectorError,
)
from .io import TrackRecord

PROJECTION_KINDS = ("fld", "pca", "none")


@dataclass(frozen=True)
class TrackerConfig:
    tau_det: float = 0.6        # detection confidence gate
    tau_sim: float = 0.55       # acceptance threshold on normalized similarity
    tau_new: float = 0.7        # newborn confidence threshold
    tau_miss: int = 30          # frames missing before removal
    T: int = 60                 # feature queue capacity
    lambda0: float = 0.9        # recency decay for centroid weighting
    alpha: float = 0.9          # projected-space share of the similarity blend
    alpha_ema: float = 0.9      # EMA update rate for trajectory features
    epsilon: float = 1e-3       # within-scatter shrinkage coefficient
    refit_stride: int = 1       # frames between projection refits
    use_projection: bool = True
    projection_kind: str = "fld"

    def validate(self) -> None:
        for name in ("tau_det", "tau_sim", "tau_new"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise ConfigError(name, f"must lie in [0, 1], got {value}")
        if self.tau_miss < 1:
            raise ConfigError("tau_miss", f"must be >= 1, got {self.tau_miss}")
        if self.T < 1:
            raise ConfigError("T", f"must be >= 1, got {self.T}")
        if not (0.0 < self.lambda0 <= 1.0):
            raise ConfigError("lambda0", f"must lie in (0, 1], got {self.lambda0}")
        if not (0.0 <= self.alpha <= 1.0):
            raise ConfigError("alpha", f"must lie in [0, 1], got {self.alpha}")
        if not (0.0 <= self.alpha_ema <= 1.0):
            raise ConfigError("alpha_ema", f"must lie in [0, 1], got {self.alpha_ema}")
        if self.epsilon <= 0.0:
            raise ConfigError("epsilon", f"must be positive, got {self.epsilon}")
        if self.refit_stride < 1:
            raise ConfigError("refit_stride", f"must be >= 1, got {self.refit_stride}")
        if self.projection_kind not in PROJECTION_KINDS:
            raise ConfigError(
                "projection_kind",
                f"must be one of {PROJECTION_KINDS}, got {self.projection_kind!r}",
            )


@dataclass
class FrameInput:
    """One frame's detections: boxes (left, top, w, h), confidences in [0, 1]
    and the aligned feature vectors."""

    frame: int
    boxes: list
    confidences: list
    features: list


@dataclass
class TrajectoryState:
    id: int
    frames: list[int]            # observation frames, oldest first
    feats: list[np.ndarray]      # parallel to frames, L2-normalized
    ema: np.ndarray
    last_seen_frame: int
    misses: int = 0


@dataclass
class StepReport:
    frame: int
    matches: list[tuple[int, int]]   # (detection index, trajectory id)
    newborn_ids: list[int]
    removed_ids: list[int]
    records: list[TrackRecord]


@dataclass
class StepTrace:
    """Instrumentation snapshot handed to the optional trace hook; the
    per-space matrices are None whenever that space was not computed."""

    frame: int
    alpha: float
    used_projection: bool
    sim_original: Optional[np.ndarray]
    sim_projected: Optional[np.ndarray]
    sim_integrated: np.ndarray
    normalized: np.ndarray


@dataclass
class TrackerState:
    config: TrackerConfig
    tracks: list[TrajectoryState] = field(default_factory=list)
    next_id: int = 1
    frame: int = 0
    dim: Optional[int] = None
    records: list[TrackRecord] = field(default_factory=list)
    projection: Optional[fld.ProjectionMatrix] = None
    last_fit_frame: Optional[int] = None
    fit_seconds: list[float] = field(default_factory=list)
    trace_hook: Optional[Callable[[StepTrace], None]] = None


def new_state(config: TrackerConfig) -> TrackerState:
    """Fresh tracker state: no trajectories, ids starting at 1, frame 0."""
    config.validate()
    return TrackerState(config=config)


def ema_update(old, new, alpha_ema: float) -> np.ndarray:
    """(1 - alpha_ema) * old + alpha_ema * new, L2-normalized."""
    ov = np.asarray(old, dtype=np.float64)
    nv = np.asarray(new, dtype=np.float64)
    if ov.shape != nv.shape:
        raise DimensionMismatchError(
            f"ema_update dims {ov.shape} vs {nv.shape}"
        )
    mixed = (1.0 - alpha_ema) * ov + alpha_ema * nv
    norm = np.linalg.norm(mixed)
    if norm == 0.0:
        raise ZeroVectorError("EMA update produced a zero vector")
    return mixed / norm


def build_cost(similarity: np.ndarray) -> np.ndarray:
    """Map cosine similarities to costs: -(cos + 1)/2."""
    sim = np.asarray(similarity, dtype=np.float64)
    return -(sim + 1.0) * 0.5


def _queues_at(tracks, frame: int, capacity: int) -> list[fld.FeatureQueue]:
    queues = []
    for t in tracks:
        entries = [
            (frame - fr, ft)
            for fr, ft in zip(reversed(t.frames), reversed(t.feats))
        ]
        queues.append(fld.FeatureQueue(identity=t.id, entries=entries, capacity=capacity))
    return queues


def _ingest_features(state: TrackerState, features) -> np.ndarray:
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim == 1:
        feats = feats.reshape(0, state.dim or 1)
    if feats.shape[0] == 0:
        return feats
    if not np.isfinite(feats).all():
        raise ValueError("features contain non-finite values")
    if state.dim is None:
        state.dim = feats.shape[1]
    elif feats.shape[1] != state.dim:
        raise DimensionMismatchError(
            f"feature dim {feats.shape[1]} vs locked dim {state.dim}"
        )
    norms = np.linalg.norm(feats, axis=1)
    if (norms == 0.0).any():
        raise ZeroVectorError("zero-norm feature vector")
    return feats / norms[:, None]


def _maybe_fit(state: TrackerState, frame: int):
    """Fit or reuse the projection; returns (projection, alpha) for the frame."""
    cfg = state.config
    if not cfg.use_projection or cfg.projection_kind == "none":
        return None, 0.0
    n_classes = len(state.tracks)
    if n_classes < 2:
        return None, 0.0
    n_samples = sum(len(t.frames) for t in state.tracks)
    if n_samples < n_classes + 1:
        return None, 0.0
    due = (
        state.projection is None
        or state.last_fit_frame is None
        or frame - state.last_fit_frame >= cfg.refit_stride
    )
    if due:
        queues = _queues_at(state.tracks, frame, cfg.T)
        t0 = time.perf_counter()
        if cfg.projection_kind == "fld":
            state.projection = fld.fit_projection(queues, cfg.lambda0, cfg.epsilon)
        else:
            state.projection = fld.fit_pca_projection(
                queues, cfg.lambda0, n_classes - 1
            )
        state.fit_seconds.append(time.perf_counter() - t0)
        state.last_fit_frame = frame
    return state.projection, cfg.alpha


def step(state: TrackerState, finput: FrameInput) -> StepReport:
    """Advance the tracker by exactly one frame.

    The input frame index must be state.frame + 1; drive empty FrameInputs
    through frames with no detections so that miss counting and feature ages
    stay aligned with real frame gaps.
    """
    cfg = state.config
    if finput.frame != state.frame + 1:
        raise FrameOrderError(
            f"expected frame {state.frame + 1}, got {finput.frame}"
        )
    n_dets = len(finput.features)
    if len(finput.boxes) != n_dets or len(finput.confidences) != n_dets:
        raise ValueError("boxes, confidences and features must align")
    for box in finput.boxes:
        if box[2] <= 0 or box[3] <= 0:
            raise ValueError(f"non-positive box size in frame {finput.frame}")

    feats = _ingest_features(state, finput.features)
    kept = [i for i in range(n_dets) if finput.confidences[i] > cfg.tau_det]

    projection, alpha = _maybe_fit(state, finput.frame)

    matches: list[tuple[int, int]] = []
    records: list[TrackRecord] = []
    matched_dets: set[int] = set()
    matched_tracks: set[int] = set()
    alive = state.tracks

    if kept and alive:
        det_feats = feats[kept]
        emas = np.stack([t.ema for t in alive])
        integrated, orig, projd = fld.similarity_parts(
            det_feats, emas, projection, alpha
        )
        normalized = (integrated + 1.0) * 0.5
        if state.trace_hook is not None:
            state.trace_hook(
                StepTrace(
                    frame=finput.frame,
                    alpha=alpha if projection is not None else 0.0,
                    used_projection=projection is not None and alpha > 0.0,
                    sim_original=orig,
                    sim_projected=projd,
                    sim_integrated=integrated,
                    normalized=normalized,
                )
            )
        result = assignment.solve(build_cost(integrated))
        for row, col in result.pairs:
            if normalized[row, col] <= cfg.tau_sim:
                continue
            det_idx = kept[row]
            track = alive[col]
            track.frames.append(finput.frame)
            track.feats.append(feats[det_idx])
            if len(track.frames) > cfg.T:
                track.frames.pop(0)
                track.feats.pop(0)
            track.ema = ema_update(track.ema, feats[det_idx], cfg.alpha_ema)
            track.misses = 0
            track.last_seen_frame = finput.frame
            matches.append((det_idx, track.id))
            matched_dets.add(det_idx)
            matched_tracks.add(track.id)
            records.append(
                TrackRecord(finput.frame, track.id, tuple(finput.boxes[det_idx]))
            )

    newborn_ids: list[int] = []
    for det_idx in kept:
        if det_idx in matched_dets:
            continue
        if finput.confidences[det_idx] <= cfg.tau_new:
            continue
        tid = state.next_id
        state.next_id += 1
        feat = feats[det_idx]
        state.tracks.append(
            TrajectoryState(
                id=tid,
                frames=[finput.frame],
                feats=[feat],
                ema=feat.copy(),
                last_seen_frame=finput.frame,
                misses=0,
            )
        )
        newborn_ids.append(tid)
        records.append(
            TrackRecord(finput.frame, tid, tuple(finput.boxes[det_idx]))
        )

    removed_ids: list[int] = []
    survivors: list[TrajectoryState] = []
    for t in state.tracks:
        if t.id not in matched_tracks and t.id not in newborn_ids:
            t.misses += 1
        if t.misses > cfg.tau_miss:
            removed_ids.append(t.id)
        else:
            survivors.append(t)
    state.tracks = survivors

    state.frame = finput.frame
    state.records.extend(records)
    return StepReport(finput.frame, matches, newborn_ids, removed_ids, records)


def finalize(state: TrackerState) -> list[TrackRecord]:
    """All emitted records sorted by (frame, id)."""
    return sorted(state.records, key=lambda r: (r.frame, r.id))
