"""Deterministic synthetic sequences: ground truth, detections and embedding
features for a hard appearance regime with many near-identical identities.

Identity prototypes live inside a cone of configurable half-angle around a
random axis, so any two prototypes are within twice that angle of each other.
Per frame each identity's feature is normalize(prototype + random-walk drift
+ gaussian noise); occlusion spans (geometric lengths clipped to a range)
drop both the detection and the ground-truth row for their duration.  Boxes
follow constant-velocity paths that bounce off the arena walls.

The observation noise is gaussian but anisotropic: on top of an isotropic
floor, a handful of nuisance axes shared by every identity carry several
times more variance, standing in for pose and lighting changes that move all
appearances along the same directions.  noise_sigma scales both parts.

All randomness flows from a single seed through numpy's PCG64 generator with
draws in a fixed order, so equal configs produce byte-identical outputs.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .io import DetectionRow, FeatureBank, TrackRecord

ARENA_W = 1920.0
ARENA_H = 1080.0

# shared nuisance-noise structure: per-axis std is NUISANCE_GAIN * noise_sigma
# on NUISANCE_DIMS sequence-wide axes (capped below the feature dimension)
NUISANCE_DIMS = 6
NUISANCE_GAIN = 4.0


@dataclass(frozen=True)
class SynthConfig:
    num_ids: int = 10
    num_frames: int = 200
    dim: int = 64
    cone_angle_deg: float = 15.0     # max angle between a prototype and the axis
    drift_step: float = 0.01         # per-frame random-walk magnitude
    noise_sigma: float = 0.05        # per-observation gaussian noise
    occlusion_prob: float = 0.05     # chance per visible frame to start a span
    occlusion_len: tuple[int, int] = (2, 10)
    det_conf: tuple[float, float] = (0.75, 0.99)
    seed: int = 1

    def validate(self) -> None:
        if self.num_ids < 2:
            raise ConfigError("num_ids", f"must be >= 2, got {self.num_ids}")
        if self.num_frames < 1:
            raise ConfigError("num_frames", f"must be >= 1, got {self.num_frames}")
        if self.dim < 2:
            raise ConfigError("dim", f"must be >= 2, got {self.dim}")
        if not (0.0 < self.cone_angle_deg <= 90.0):
            raise ConfigError(
                "cone_angle_deg", f"must lie in (0, 90], got {self.cone_angle_deg}"
            )
        if self.drift_step < 0.0:
            raise ConfigError("drift_step", f"must be >= 0, got {self.drift_step}")
        if self.noise_sigma < 0.0:
            raise ConfigError("noise_sigma", f"must be >= 0, got {self.noise_sigma}")
        if not (0.0 <= self.occlusion_prob <= 1.0):
            raise ConfigError(
                "occlusion_prob", f"must lie in [0, 1], got {self.occlusion_prob}"
            )
        lo, hi = self.occlusion_len
        if lo < 1 or hi < lo:
            raise ConfigError(
                "occlusion_len", f"need 1 <= min <= max, got ({lo}, {hi})"
            )
        clo, chi = self.det_conf
        if not (0.0 <= clo <= chi <= 1.0):
            raise ConfigError(
                "det_conf", f"need 0 <= min <= max <= 1, got ({clo}, {chi})"
            )


@dataclass
class SynthOutput:
    gt: list[TrackRecord]
    detections: list[DetectionRow]
    bank: FeatureBank
    prototypes: np.ndarray  # num_ids x dim


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _prototypes(rng, config: SynthConfig) -> np.ndarray:
    axis = _unit(rng.normal(size=config.dim))
    cone = np.deg2rad(config.cone_angle_deg)
    protos = np.empty((config.num_ids, config.dim))
    for i in range(config.num_ids):
        theta = rng.uniform(0.0, cone)
        raw = rng.normal(size=config.dim)
        ortho = raw - (raw @ axis) * axis
        protos[i] = np.cos(theta) * axis + np.sin(theta) * _unit(ortho)
    return protos


def _occlusion_span(rng, config: SynthConfig) -> int:
    lo, hi = config.occlusion_len
    mean_len = 0.5 * (lo + hi)
    span = int(rng.geometric(1.0 / mean_len))
    return min(hi, max(lo, span))


def generate(config: SynthConfig) -> SynthOutput:
    """Generate one sequence; fully deterministic given config.seed."""
    config.validate()
    rng = np.random.Generator(np.random.PCG64(config.seed))
    protos = _prototypes(rng, config)
    n_nuis = min(NUISANCE_DIMS, config.dim - 1)
    nuisance_axes, _ = np.linalg.qr(rng.normal(size=(config.dim, n_nuis)))

    n = config.num_ids
    width = rng.uniform(40.0, 90.0, size=n)
    height = rng.uniform(90.0, 180.0, size=n)
    x = rng.uniform(0.0, ARENA_W - width)
    y = rng.uniform(0.0, ARENA_H - height)
    vx = rng.uniform(-6.0, 6.0, size=n)
    vy = rng.uniform(-6.0, 6.0, size=n)
    drift = np.zeros((n, config.dim))
    occluded_left = np.zeros(n, dtype=np.int64)

    gt: list[TrackRecord] = []
    detections: list[DetectionRow] = []
    features: list[np.ndarray] = []
    clo, chi = config.det_conf

    for frame in range(1, config.num_frames + 1):
        for i in range(n):
            drift[i] += config.drift_step * rng.normal(size=config.dim)
            x[i] += vx[i]
            y[i] += vy[i]
            if x[i] < 0.0 or x[i] > ARENA_W - width[i]:
                vx[i] = -vx[i]
                x[i] = min(max(x[i], 0.0), ARENA_W - width[i])
            if y[i] < 0.0 or y[i] > ARENA_H - height[i]:
                vy[i] = -vy[i]
                y[i] = min(max(y[i], 0.0), ARENA_H - height[i])
            if occluded_left[i] > 0:
                occluded_left[i] -= 1
                continue
            if config.occlusion_prob > 0.0 and rng.uniform() < config.occlusion_prob:
                occluded_left[i] = _occlusion_span(rng, config) - 1
                continue
            box = (
                round(x[i], 2),
                round(y[i], 2),
                round(width[i], 2),
                round(height[i], 2),
            )
            gt.append(TrackRecord(frame, i + 1, box))
            noise = config.noise_sigma * rng.normal(size=config.dim)
            noise += nuisance_axes @ (
                NUISANCE_GAIN * config.noise_sigma * rng.normal(size=n_nuis)
            )
            feat = _unit(protos[i] + drift[i] + noise)
            conf = round(rng.uniform(clo, chi), 4)
            detections.append(
                DetectionRow(
                    frame, -1, box[0], box[1], box[2], box[3], conf, len(detections)
                )
            )
            features.append(feat.astype(np.float32))

    if features:
        bank = FeatureBank(np.stack(features))
    else:
        bank = FeatureBank(np.zeros((0, config.dim), dtype=np.float32))
    return SynthOutput(gt, detections, bank, protos)
