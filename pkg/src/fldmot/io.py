"""On-disk formats: MOT-style comma-separated text for detections, ground
truth and tracking results, plus the binary feature sidecar.

Feature sidecar layout (little-endian): magic "HATF", u32 version = 1,
u32 dim, u64 count, then count * dim float32 values in row-major order.
A CSV fallback with one feature vector per line exists for hand-written
fixtures.  Floats are written in shortest round-trip form (integral values
without a decimal point), so every writer/reader pair is an exact inverse.
"""

import logging
import struct
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    AlignmentError,
    DataError,
    FormatError,
    ParseError,
    TruncationError,
)

log = logging.getLogger(__name__)

MAGIC = b"HATF"
VERSION = 1
_HEADER = struct.Struct("<4sIIQ")


class TrackRecord(NamedTuple):
    """One finalized (frame, id, box) observation; box is (left, top, w, h)."""

    frame: int
    id: int
    box: tuple[float, float, float, float]


@dataclass
class DetectionRow:
    frame: int
    id: int
    left: float
    top: float
    width: float
    height: float
    conf: float
    index: int  # ordinal in the source file; pairs the row with its feature


@dataclass
class DetectionFile:
    rows: list[DetectionRow]  # sorted by frame, stable within a frame


@dataclass
class FeatureBank:
    vectors: np.ndarray  # count x dim, float32

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def count(self) -> int:
        return self.vectors.shape[0]


def _fmt(x: float) -> str:
    v = float(x)
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _parse_float(token: str, lineno: int, what: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParseError(lineno, f"bad {what}: {token!r}") from None


def _parse_int(token: str, lineno: int, what: str) -> int:
    try:
        return int(float(token))
    except ValueError:
        raise ParseError(lineno, f"bad {what}: {token!r}") from None


def read_detections(path) -> DetectionFile:
    """Parse a detection file: frame,id,left,top,w,h,conf[,...] per line.

    Extra trailing columns are ignored; rows with non-positive width or
    height raise ParseError with the offending line number; confidences are
    clamped into [0, 1] with a warning.  Rows come back sorted by frame.
    """
    rows: list[DetectionRow] = []
    with open(path, "r", encoding="ascii") as fh:
        index = 0
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) < 7:
                raise ParseError(lineno, f"expected at least 7 fields, got {len(parts)}")
            frame = _parse_int(parts[0], lineno, "frame")
            if frame <= 0:
                raise ParseError(lineno, f"frame must be positive, got {frame}")
            det_id = _parse_int(parts[1], lineno, "id")
            left = _parse_float(parts[2], lineno, "left")
            top = _parse_float(parts[3], lineno, "top")
            width = _parse_float(parts[4], lineno, "width")
            height = _parse_float(parts[5], lineno, "height")
            conf = _parse_float(parts[6], lineno, "confidence")
            if width <= 0 or height <= 0:
                raise ParseError(lineno, f"non-positive box size {width}x{height}")
            if not (0.0 <= conf <= 1.0):
                clamped = min(1.0, max(0.0, conf))
                log.warning("line %d: confidence %s clamped to %s", lineno, conf, clamped)
                conf = clamped
            rows.append(DetectionRow(frame, det_id, left, top, width, height, conf, index))
            index += 1
    rows.sort(key=lambda r: r.frame)
    return DetectionFile(rows)


def write_detections(rows, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for r in rows:
            fh.write(
                f"{r.frame},{r.id},{_fmt(r.left)},{_fmt(r.top)},"
                f"{_fmt(r.width)},{_fmt(r.height)},{_fmt(r.conf)}\n"
            )


def read_features(path) -> FeatureBank:
    """Read a binary feature sidecar, validating header, length and values."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise TruncationError(f"file shorter than header ({len(blob)} bytes)")
    magic, version, dim, count = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    if dim < 1:
        raise FormatError(f"dim must be >= 1, got {dim}")
    payload = blob[_HEADER.size:]
    expected = count * dim * 4
    if len(payload) < expected:
        raise TruncationError(
            f"payload holds {len(payload)} bytes, expected {expected}"
        )
    if len(payload) > expected:
        raise FormatError(f"{len(payload) - expected} trailing bytes")
    flat = np.frombuffer(payload, dtype="<f4")
    bad = np.nonzero(~np.isfinite(flat))[0]
    if bad.size:
        raise DataError(int(bad[0]), "non-finite feature value")
    return FeatureBank(flat.reshape(count, dim).copy())


def write_features(bank: FeatureBank, path) -> None:
    vectors = np.ascontiguousarray(bank.vectors, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, vectors.shape[1], vectors.shape[0]))
        fh.write(vectors.tobytes())


def read_features_csv(path) -> FeatureBank:
    """CSV fallback: one comma-separated feature vector per line."""
    rows = []
    dim = None
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                vec = [float(tok) for tok in line.split(",")]
            except ValueError:
                raise ParseError(lineno, "bad feature value") from None
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise ParseError(lineno, f"expected {dim} values, got {len(vec)}")
            rows.append(vec)
    if not rows:
        return FeatureBank(np.zeros((0, 1), dtype=np.float32))
    arr = np.array(rows, dtype=np.float32)
    bad = np.nonzero(~np.isfinite(arr.ravel()))[0]
    if bad.size:
        raise DataError(int(bad[0]), "non-finite feature value")
    return FeatureBank(arr)


def write_features_csv(bank: FeatureBank, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for row in bank.vectors:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def write_tracks(records, path) -> None:
    """Write track records as "frame,id,left,top,w,h,1,-1,-1,-1" rows,
    sorted by (frame, id)."""
    ordered = sorted(records, key=lambda r: (r.frame, r.id))
    with open(path, "w", encoding="ascii") as fh:
        for r in ordered:
            left, top, width, height = r.box
            fh.write(
                f"{r.frame},{r.id},{_fmt(left)},{_fmt(top)},"
                f"{_fmt(width)},{_fmt(height)},1,-1,-1,-1\n"
            )


def read_gt(path) -> list[TrackRecord]:
    """Parse ground-truth/result rows of the write_tracks shape (real ids)."""
    records = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) < 6:
                raise ParseError(lineno, f"expected at least 6 fields, got {len(parts)}")
            frame = _parse_int(parts[0], lineno, "frame")
            rec_id = _parse_int(parts[1], lineno, "id")
            if frame <= 0:
                raise ParseError(lineno, f"frame must be positive, got {frame}")
            left = _parse_float(parts[2], lineno, "left")
            top = _parse_float(parts[3], lineno, "top")
            width = _parse_float(parts[4], lineno, "width")
            height = _parse_float(parts[5], lineno, "height")
            if width <= 0 or height <= 0:
                raise ParseError(lineno, f"non-positive box size {width}x{height}")
            records.append(TrackRecord(frame, rec_id, (left, top, width, height)))
    return records


def load_sequence(dets_path, feats_path, feats_csv: bool = False):
    """Load a detection file and its aligned feature bank.

    Raises AlignmentError when detection and feature counts differ.
    """
    dets = read_detections(dets_path)
    bank = read_features_csv(feats_path) if feats_csv else read_features(feats_path)
    if len(dets.rows) != bank.count:
        raise AlignmentError(
            f"{len(dets.rows)} detections but {bank.count} feature vectors"
        )
    return dets, bank
