"""Command-line entry point: track / synth / eval / bench / inspect.

Configuration is a flat ``key = value`` file (# comments allowed) overridden
by repeated ``--set key=value`` flags; flag beats file beats default.  Every
command writes machine-parsable output; ``track`` additionally drops a
manifest next to its output recording the fully resolved configuration,
input paths, tool version and per-stage wall-clock timings.

Exit codes: 0 success, 1 input or validation error, 2 internal solver error.
Failures print a single line "CODE: message" to stderr.
"""

import argparse
import sys
import time
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__, assignment, eval as eval_mod, fld, io as io_mod, synth, tracker
from .errors import ConfigError, FldmotError


def _parse_config_file(path) -> dict[str, str]:
    raw: dict[str, str] = {}
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError("file", f"line {lineno}: expected key = value")
            key, value = text.split("=", 1)
            raw[key.strip()] = value.strip()
    return raw


def _coerce(name: str, value: str, target_type):
    try:
        if target_type is bool:
            lowered = value.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if target_type is int:
            return int(value)
        if target_type is float:
            return float(value)
        if target_type is str:
            return value
        if target_type in (tuple, "pair_int"):
            parts = [p.strip() for p in value.split(",")]
            if len(parts) != 2:
                raise ValueError(value)
            return parts
        raise ValueError(f"unsupported type {target_type}")
    except ValueError:
        raise ConfigError(name, f"cannot parse {value!r}") from None


_BASE_TYPES = {int: int, float: float, bool: bool, str: str}


def _dataclass_from_keys(cls, raw: dict[str, str], *, pair_fields=()):
    known = {f.name: f for f in fields(cls)}
    values = {}
    for key, text in raw.items():
        if key not in known:
            raise ConfigError(key, "unknown configuration key")
        if key in pair_fields:
            lo, hi = _coerce(key, text, tuple)
            elem = pair_fields[key]
            values[key] = (
                _coerce(key, lo, elem),
                _coerce(key, hi, elem),
            )
            continue
        ftype = known[key].type
        if isinstance(ftype, str):
            ftype = {"int": int, "float": float, "bool": bool, "str": str}.get(
                ftype, str
            )
        values[key] = _coerce(key, text, ftype)
    return cls(**values)


def _resolve_tracker_config(config_path, set_items) -> tracker.TrackerConfig:
    raw: dict[str, str] = {}
    if config_path:
        raw.update(_parse_config_file(config_path))
    for item in set_items or ():
        if "=" not in item:
            raise ConfigError("--set", f"expected key=value, got {item!r}")
        key, value = item.split("=", 1)
        raw[key.strip()] = value.strip()
    cfg = _dataclass_from_keys(tracker.TrackerConfig, raw)
    cfg.validate()
    return cfg


def _write_manifest(path, entries) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for key, value in entries:
            fh.write(f"{key} = {value}\n")


def _config_entries(cfg) -> list[tuple[str, str]]:
    return [(f.name, str(getattr(cfg, f.name))) for f in fields(cfg)]


def _frame_inputs(dets: io_mod.DetectionFile, bank: io_mod.FeatureBank):
    """Yield one FrameInput per frame index from 1 to the last detected frame."""
    by_frame: dict[int, list[io_mod.DetectionRow]] = {}
    for row in dets.rows:
        by_frame.setdefault(row.frame, []).append(row)
    last = max(by_frame) if by_frame else 0
    for frame in range(1, last + 1):
        rows = by_frame.get(frame, [])
        yield tracker.FrameInput(
            frame=frame,
            boxes=[(r.left, r.top, r.width, r.height) for r in rows],
            confidences=[r.conf for r in rows],
            features=[bank.vectors[r.index] for r in rows],
        )


def cmd_track(args) -> int:
    cfg = _resolve_tracker_config(args.config, args.set)
    t_start = time.perf_counter()
    dets, bank = io_mod.load_sequence(args.dets, args.feats, feats_csv=args.feats_csv)
    t_loaded = time.perf_counter()
    state = tracker.new_state(cfg)
    for finput in _frame_inputs(dets, bank):
        tracker.step(state, finput)
    records = tracker.finalize(state)
    t_tracked = time.perf_counter()
    io_mod.write_tracks(records, args.out)
    t_written = time.perf_counter()

    manifest = [
        ("tool_version", __version__),
        ("dets", str(args.dets)),
        ("feats", str(args.feats)),
        ("out", str(args.out)),
        ("seed", "n/a"),
    ]
    manifest.extend(_config_entries(cfg))
    manifest.extend(
        [
            ("records", str(len(records))),
            ("load_seconds", f"{t_loaded - t_start:.6f}"),
            ("track_seconds", f"{t_tracked - t_loaded:.6f}"),
            ("write_seconds", f"{t_written - t_tracked:.6f}"),
            ("total_seconds", f"{t_written - t_start:.6f}"),
        ]
    )
    _write_manifest(str(args.out) + ".manifest", manifest)
    return 0


def cmd_synth(args) -> int:
    raw = _parse_config_file(args.config) if args.config else {}
    cfg = _dataclass_from_keys(
        synth.SynthConfig,
        raw,
        pair_fields={"occlusion_len": int, "det_conf": float},
    )
    cfg.validate()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = synth.generate(cfg)
    io_mod.write_tracks(result.gt, out / "gt.txt")
    io_mod.write_detections(result.detections, out / "det.txt")
    io_mod.write_features(result.bank, out / "feats.bin")
    manifest = [("tool_version", __version__)]
    manifest.extend(_config_entries(cfg))
    _write_manifest(out / "manifest.txt", manifest)
    print(
        f"wrote {len(result.detections)} detections over "
        f"{cfg.num_frames} frames to {out}"
    )
    return 0


def cmd_eval(args) -> int:
    pred = io_mod.read_gt(args.pred)
    gt = io_mod.read_gt(args.gt)
    report = eval_mod.evaluate(pred, gt, iou_thr=args.iou)
    print(eval_mod.format_report(report))
    return 0


def cmd_bench(args) -> int:
    rng = np.random.Generator(np.random.PCG64(args.seed))
    dim, n_ids, depth = args.dim, args.ids, args.queue
    protos = rng.normal(size=(n_ids, dim))
    protos /= np.linalg.norm(protos, axis=1)[:, None]

    def sample(i):
        v = protos[i] + 0.05 * rng.normal(size=dim)
        return v / np.linalg.norm(v)

    def make_queues(history):
        return [
            fld.FeatureQueue(
                identity=i + 1,
                entries=[(age, f) for age, f in history[i]],
                capacity=depth,
            )
            for i in range(n_ids)
        ]

    history = [
        [(age, sample(i)) for age in range(1, depth + 1)] for i in range(n_ids)
    ]
    for _ in range(args.warmup):
        fld.fit_projection(make_queues(history), 0.9, 1e-3)

    fit_times = []
    t_loop = time.perf_counter()
    for _ in range(args.frames):
        queues = make_queues(history)
        t0 = time.perf_counter()
        proj = fld.fit_projection(queues, 0.9, 1e-3)
        fit_times.append(time.perf_counter() - t0)
        dets = np.stack([sample(i) for i in range(n_ids)])
        emas = np.stack([history[i][0][1] for i in range(n_ids)])
        sims = fld.integrated_similarity(dets, emas, proj, 0.9)
        assignment.solve(tracker.build_cost(sims))
        for i in range(n_ids):
            history[i] = [(1, dets[i])] + [
                (age + 1, f) for age, f in history[i][: depth - 1]
            ]
    total = time.perf_counter() - t_loop
    ms = np.array(fit_times) * 1e3
    print(f"dim={dim}")
    print(f"ids={n_ids}")
    print(f"queue={depth}")
    print(f"frames={args.frames}")
    print(f"fit_p50_ms={np.percentile(ms, 50):.3f}")
    print(f"fit_p95_ms={np.percentile(ms, 95):.3f}")
    print(f"fit_mean_ms={ms.mean():.3f}")
    print(f"fps={args.frames / total:.2f}")
    return 0


def cmd_inspect(args) -> int:
    cfg = _resolve_tracker_config(args.config, args.set)
    dets, bank = io_mod.load_sequence(args.dets, args.feats, feats_csv=args.feats_csv)
    state = tracker.new_state(cfg)
    target_rows = None
    for finput in _frame_inputs(dets, bank):
        if finput.frame == args.frame:
            target_rows = finput
            break
        tracker.step(state, finput)
    if target_rows is None or not target_rows.features:
        raise FldmotError(f"no detections at frame {args.frame}")

    feats = np.asarray(target_rows.features, dtype=np.float64)
    feats = feats / np.linalg.norm(feats, axis=1)[:, None]
    queues = tracker._queues_at(state.tracks, args.frame, cfg.T)
    fld_proj = fld.fit_projection(queues, cfg.lambda0, cfg.epsilon)
    pca_proj = fld.fit_pca_projection(queues, cfg.lambda0, 2)
    fld_xy = fld.project(feats, fld_proj)[:, :2]
    pca_xy = fld.project(feats, pca_proj)[:, :2]

    def col(mat, j):
        return mat[:, j] if mat.shape[1] > j else np.zeros(mat.shape[0])

    with open(args.out, "w", encoding="ascii") as fh:
        fh.write("det,conf,orig_x,orig_y,fld_x,fld_y\n")
        for i in range(feats.shape[0]):
            fh.write(
                f"{i},{target_rows.confidences[i]!r},"
                f"{col(pca_xy, 0)[i]!r},{col(pca_xy, 1)[i]!r},"
                f"{col(fld_xy, 0)[i]!r},{col(fld_xy, 1)[i]!r}\n"
            )
    print(f"wrote {feats.shape[0]} rows to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fldmot",
        description="Appearance-only multi-object tracking with an online "
        "discriminant projection",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_track = sub.add_parser("track", help="associate detections into tracks")
    p_track.add_argument("--dets", required=True)
    p_track.add_argument("--feats", required=True)
    p_track.add_argument("--out", required=True)
    p_track.add_argument("--config")
    p_track.add_argument("--set", action="append", metavar="KEY=VALUE")
    p_track.add_argument("--feats-csv", action="store_true")
    p_track.set_defaults(func=cmd_track)

    p_synth = sub.add_parser("synth", help="generate a synthetic sequence")
    p_synth.add_argument("--config")
    p_synth.add_argument("--out", required=True)
    p_synth.set_defaults(func=cmd_synth)

    p_eval = sub.add_parser("eval", help="score predictions against ground truth")
    p_eval.add_argument("--pred", required=True)
    p_eval.add_argument("--gt", required=True)
    p_eval.add_argument("--iou", type=float, default=0.5)
    p_eval.set_defaults(func=cmd_eval)

    p_bench = sub.add_parser("bench", help="measure projection fit latency")
    p_bench.add_argument("--dim", type=int, required=True)
    p_bench.add_argument("--ids", type=int, required=True)
    p_bench.add_argument("--queue", type=int, default=60)
    p_bench.add_argument("--frames", type=int, default=20)
    p_bench.add_argument("--seed", type=int, default=1)
    p_bench.add_argument("--warmup", type=int, default=3)
    p_bench.set_defaults(func=cmd_bench)

    p_inspect = sub.add_parser(
        "inspect", help="dump 2-D feature coordinates for one frame"
    )
    p_inspect.add_argument("--dets", required=True)
    p_inspect.add_argument("--feats", required=True)
    p_inspect.add_argument("--frame", type=int, required=True)
    p_inspect.add_argument("--out", required=True)
    p_inspect.add_argument("--config")
    p_inspect.add_argument("--set", action="append", metavar="KEY=VALUE")
    p_inspect.add_argument("--feats-csv", action="store_true")
    p_inspect.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FldmotError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"IO: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
