"""Command-line surface: analyze, encode, decode, eval, sweep,
search-placement, rope, speedup, synth.

Reports are comma-separated tables with a header row (or JSON lines with
--report-format jsonl), deterministic for a given config and --seed.
Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 format error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import container, cost, rope
from .errors import FormatError, ParameterError
from .evaluate import eval_corpus, grid_from_axes, threshold_sweep
from .pipeline import (
    Pipeline,
    decode,
    default_pipeline,
    encode,
    parse_pipeline,
    search_placement,
    slots_for_ratio,
)
from .scheduler import (
    DEFAULT_CLASS_RATES,
    DEFAULT_THRESHOLDS,
    RateSchedule,
    ScheduleEntry,
    build_classes,
    make_config,
    parse_config_text,
    schedule,
    single_class_config,
)
from .spectrum import (
    DEFAULT_EPSILON,
    DEFAULT_GRID_STRIDE,
    dft_magnitude,
    effective_frequency,
    required_rate,
    temporal_signal,
)
from .video import Clip, load_clip, make_mixed_corpus, save_clip, segment_clip, synth_sine, synth_translate

RAW_SUFFIX = ".dlfrraw"


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _fmt(value) -> str:
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return format(value, ".6g")
    if value is None:
        return ""
    return str(value)


def _write_rows(rows: list[dict], fieldnames: list[str], args) -> None:
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        if args.report_format == "csv":
            writer = csv.DictWriter(out, fieldnames=fieldnames, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({k: _fmt(v) for k, v in row.items()})
        else:
            for row in rows:
                clean = {
                    k: ("inf" if isinstance(v, float) and math.isinf(v) else v)
                    for k, v in row.items()
                }
                out.write(json.dumps(clean) + "\n")
    finally:
        if args.out:
            out.close()


def _merged_scheduler_settings(args) -> dict:
    """Defaults < config file < explicit flags."""
    settings = {
        "classes": DEFAULT_CLASS_RATES,
        "thresholds": DEFAULT_THRESHOLDS,
        "smoothing": True,
        "segment_len": None,
        "epsilon": DEFAULT_EPSILON,
    }
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            settings.update(parse_config_text(fh.read()))
    if getattr(args, "classes", None) is not None:
        settings["classes"] = args.classes
    if getattr(args, "thresholds", None) is not None:
        settings["thresholds"] = args.thresholds
    if getattr(args, "smoothing", None) is not None:
        settings["smoothing"] = args.smoothing == "on"
    if getattr(args, "segment_len", None) is not None:
        settings["segment_len"] = args.segment_len
    if getattr(args, "epsilon", None) is not None:
        settings["epsilon"] = args.epsilon
    return settings


def _config_for(fps: float, settings: dict):
    return make_config(
        fps, settings["classes"], settings["thresholds"], smoothing=settings["smoothing"]
    )


def _load_corpus(paths: list[str]) -> list[tuple[str, Clip]]:
    clips: list[tuple[str, Clip]] = []
    for path in paths:
        if os.path.isdir(path):
            names = sorted(n for n in os.listdir(path) if n.endswith(RAW_SUFFIX))
            if not names:
                raise ParameterError(f"{path}: no {RAW_SUFFIX} clips in directory")
            for name in names:
                clips.append((name[: -len(RAW_SUFFIX)], load_clip(os.path.join(path, name))))
        else:
            stem = os.path.splitext(os.path.basename(path))[0]
            clips.append((stem, load_clip(path)))
    return clips


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_synth(args) -> None:
    if args.kind == "corpus":
        os.makedirs(args.out, exist_ok=True)
        clips = make_mixed_corpus(
            n_static=args.static, n_motion=args.motion, fps=args.fps,
            n_frames=args.frames, width=args.width, height=args.height, seed=args.seed,
        )
        for name, clip in clips:
            path = os.path.join(args.out, name + RAW_SUFFIX)
            save_clip(clip, path)
            print(path)
        return
    if args.kind == "sine":
        clip = synth_sine(
            args.freq, args.fps, args.frames, args.width, args.height,
            amplitude=args.amplitude, mean=args.mean,
        )
    else:
        clip = synth_translate(
            args.kind, args.velocity, args.fps, args.frames,
            args.width, args.height, cell=args.cell,
        )
    save_clip(clip, args.out)
    print(args.out)


def cmd_analyze(args) -> None:
    clip = load_clip(args.input)
    settings = _merged_scheduler_settings(args)
    cfg = _config_for(clip.fps, settings)
    sched = schedule(clip, cfg, settings["segment_len"])
    segments = segment_clip(clip, sched.segment_len)
    rows = []
    for seg, entry in zip(segments, sched.entries):
        if seg.n_frames >= 2:
            report = dft_magnitude(temporal_signal(seg, args.grid_stride), clip.fps)
            f_eff = effective_frequency(report, settings["epsilon"])
        else:
            f_eff = None
        rows.append(
            {
                "segment": entry.index,
                "n_frames": entry.n_frames,
                "complexity": entry.complexity,
                "f_eff_hz": f_eff,
                "required_rate_hz": required_rate(f_eff, cfg.min_rate),
                "class": entry.class_k,
                "latent_rate_hz": entry.latent_rate,
                "down_ratio": entry.down_ratio,
            }
        )
    _write_rows(
        rows,
        ["segment", "n_frames", "complexity", "f_eff_hz", "required_rate_hz",
         "class", "latent_rate_hz", "down_ratio"],
        args,
    )


def _pipeline_for(args, cfg, static_ratio: int | None = None) -> Pipeline:
    if args.pipeline:
        return parse_pipeline(args.pipeline)
    max_ratio = max(c.down_ratio for c in cfg.classes)
    if static_ratio:
        max_ratio = max(max_ratio, static_ratio)
    return default_pipeline(
        slots_for_ratio(max_ratio), down_method=args.down_method, up_method=args.up_method
    )


def cmd_encode(args) -> None:
    clip = load_clip(args.input)
    settings = _merged_scheduler_settings(args)
    if args.static_rate is not None:
        cfg = single_class_config(clip.fps, args.static_rate)
    else:
        cfg = _config_for(clip.fps, settings)
    sched = schedule(clip, cfg, settings["segment_len"])
    stream = encode(clip, sched, _pipeline_for(args, cfg))
    container.save_stream(stream, args.out)
    print(args.out)


def cmd_decode(args) -> None:
    stream = container.load_stream(args.input)
    clip = decode(stream, parse_pipeline(stream.pipeline_descriptor))
    save_clip(clip, args.out)
    print(args.out)


def cmd_eval(args) -> None:
    clips = _load_corpus(args.inputs)
    settings = _merged_scheduler_settings(args)
    cfg = _config_for(clips[0][1].fps, settings)
    pipeline = _pipeline_for(args, cfg, static_ratio=args.static_ratio)
    rows_data, summary = eval_corpus(
        clips, cfg, settings["segment_len"], pipeline=pipeline, static_ratio=args.static_ratio
    )
    rows = [
        {"clip": r.clip, "kind": r.kind, "cr": r.cr, "ssim": r.ssim, "psnr": r.psnr}
        for r in rows_data
    ]
    for kind, cr, ssim_value in (
        ("dynamic", summary.dynamic_cr, summary.dynamic_ssim),
        ("static", summary.static_cr, summary.static_ssim),
    ):
        # corpus PSNR from pooled MSE so one perfect clip does not force inf
        mses = [
            0.0 if math.isinf(r.psnr) else 255.0**2 / 10.0 ** (r.psnr / 10.0)
            for r in rows_data
            if r.kind == kind
        ]
        pooled = float(np.mean(mses))
        pooled_psnr = math.inf if pooled == 0.0 else 10.0 * math.log10(255.0**2 / pooled)
        rows.append(
            {"clip": "MEAN", "kind": kind, "cr": cr, "ssim": ssim_value, "psnr": pooled_psnr}
        )
    _write_rows(rows, ["clip", "kind", "cr", "ssim", "psnr"], args)


def cmd_sweep(args) -> None:
    clips = _load_corpus(args.inputs)
    settings = _merged_scheduler_settings(args)
    grid = grid_from_axes(args.grid_th1, args.grid_th2)
    points = threshold_sweep(
        clips, settings["classes"], grid, settings["segment_len"],
        smoothing=settings["smoothing"],
    )
    rows = [
        {"th1": p.thresholds[0], "th2": p.thresholds[1], "cr": p.cr,
         "ssim": p.ssim, "frontier": int(p.frontier)}
        for p in points
    ]
    _write_rows(rows, ["th1", "th2", "cr", "ssim", "frontier"], args)


def cmd_search_placement(args) -> None:
    clips = _load_corpus(args.inputs)
    template = parse_pipeline(args.pipeline)
    fps = clips[0][1].fps
    rate_class = build_classes(fps, [args.rate])[0]
    settings = _merged_scheduler_settings(args)
    best, table = search_placement(
        template, [clip for _, clip in clips], rate_class, settings["segment_len"]
    )
    rows = [
        {
            "enc_slots": "+".join(str(i) for i in r.enc_slots) or "-",
            "dec_slots": "+".join(str(i) for i in r.dec_slots) or "-",
            "ssim": r.mean_ssim,
            "psnr": r.mean_psnr,
            "best": int(r == best),
        }
        for r in table
    ]
    _write_rows(rows, ["enc_slots", "dec_slots", "ssim", "psnr", "best"], args)


def _read_schedule_csv(path: str) -> RateSchedule:
    """Rebuild a schedule from an analyze report (CSV columns)."""
    with open(path, "r", newline="") as fh:
        reader = csv.DictReader(fh)
        needed = {"segment", "n_frames", "class", "latent_rate_hz", "down_ratio"}
        if reader.fieldnames is None or not needed <= set(reader.fieldnames):
            raise FormatError(
                f"{path}: schedule CSV must have columns {sorted(needed)}"
            )
        entries = []
        for row in reader:
            try:
                entries.append(
                    ScheduleEntry(
                        index=int(row["segment"]),
                        n_frames=int(row["n_frames"]),
                        complexity=float(row.get("complexity") or 0.0),
                        class_k=int(row["class"]),
                        latent_rate=float(row["latent_rate_hz"]),
                        down_ratio=int(row["down_ratio"]),
                    )
                )
            except (TypeError, ValueError) as exc:
                raise FormatError(f"{path}: bad schedule row {row!r}") from exc
    if not entries:
        raise FormatError(f"{path}: schedule CSV has no rows")
    fps = entries[0].latent_rate * entries[0].down_ratio
    rates = sorted({e.latent_rate for e in entries})
    return RateSchedule(
        fps=fps,
        segment_len=max(e.n_frames for e in entries),
        classes=build_classes(fps, rates),
        entries=tuple(entries),
    )


def cmd_rope(args) -> None:
    sched = _read_schedule_csv(args.schedule)
    durations = rope.durations_from_schedule(sched)
    table = rope.rope_table(durations, args.dim)
    half = args.dim // 2
    fieldnames = (
        ["token", "duration", "position"]
        + [f"cos{i}" for i in range(half)]
        + [f"sin{i}" for i in range(half)]
    )
    rows = []
    for m, duration in enumerate(durations):
        row = {"token": m, "duration": duration, "position": float(table.positions[m])}
        for i in range(half):
            row[f"cos{i}"] = float(table.cos[m, i])
            row[f"sin{i}"] = float(table.sin[m, i])
        rows.append(row)
    _write_rows(rows, fieldnames, args)


def _parse_observations(text: str) -> list[tuple[float, float]]:
    obs = []
    for part in text.split(","):
        if ":" not in part:
            raise ParameterError(
                f"calibration observations look like ratio:speedup, got {part!r}"
            )
        r, _, s = part.partition(":")
        try:
            obs.append((float(r), float(s)))
        except ValueError as exc:
            raise ParameterError(f"bad observation {part!r}") from exc
    return obs


def cmd_speedup(args) -> None:
    if args.calibrate:
        alpha = cost.calibrate_quad_fraction(_parse_observations(args.calibrate))
    else:
        alpha = args.alpha
    rows = []
    for path in args.schedules:
        sched = _read_schedule_csv(path)
        est = cost.estimate(sched, args.spatial_tokens, alpha)
        rows.append(
            {
                "schedule": os.path.basename(path),
                "tokens_base": est.tokens_base,
                "tokens_dlfr": est.tokens_dlfr,
                "token_ratio": est.tokens_dlfr / est.tokens_base,
                "alpha": est.quad_fraction,
                "speedup": est.speedup,
            }
        )
    _write_rows(
        rows,
        ["schedule", "tokens_base", "tokens_dlfr", "token_ratio", "alpha", "speedup"],
        args,
    )


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dlfr",
        description="Content-adaptive temporal compression for luma video.",
    )

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument(
        "--report-format", choices=("csv", "jsonl"), default="csv", dest="report_format"
    )

    artifact_out = argparse.ArgumentParser(add_help=False)
    artifact_out.add_argument("--out", required=True, help="output path")

    sched_opts = argparse.ArgumentParser(add_help=False)
    sched_opts.add_argument("--config", help="key=value config file")
    sched_opts.add_argument("--classes", type=_float_list, default=None,
                            help="latent rate classes in Hz, e.g. 1,2,4")
    sched_opts.add_argument("--thresholds", type=_float_list, default=None,
                            help="ascending complexity thresholds, e.g. 0.05,0.15")
    sched_opts.add_argument("--smoothing", choices=("on", "off"), default=None)
    sched_opts.add_argument("--segment-len", type=int, default=None, dest="segment_len")
    sched_opts.add_argument("--epsilon", type=float, default=None,
                            help="spectral magnitude threshold for f_eff")

    pipe_opts = argparse.ArgumentParser(add_help=False)
    pipe_opts.add_argument("--pipeline", default=None, help="pipeline descriptor text")
    pipe_opts.add_argument("--down-method", choices=("drop", "average", "linear"),
                           default="drop", dest="down_method")
    pipe_opts.add_argument("--up-method", choices=("nearest", "linear"),
                           default="linear", dest="up_method")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[artifact_out], help="generate synthetic clips")
    p.add_argument("--kind", choices=("sine", "checker", "gradient", "corpus"), required=True)
    p.add_argument("--fps", type=float, default=16.0)
    p.add_argument("--frames", type=int, default=64)
    p.add_argument("--width", type=int, default=32)
    p.add_argument("--height", type=int, default=32)
    p.add_argument("--freq", type=float, default=2.0, help="sine frequency in Hz")
    p.add_argument("--amplitude", type=float, default=64.0)
    p.add_argument("--mean", type=float, default=128.0)
    p.add_argument("--velocity", type=float, default=2.0, help="pixels per frame")
    p.add_argument("--cell", type=int, default=8, help="checker cell size")
    p.add_argument("--static", type=int, default=10, help="corpus static clip count")
    p.add_argument("--motion", type=int, default=10, help="corpus motion clip count")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized corpus choices")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("analyze", parents=[common, sched_opts],
                       help="per-segment complexity and spectrum report")
    p.add_argument("input")
    p.add_argument("--grid-stride", type=int, default=DEFAULT_GRID_STRIDE, dest="grid_stride")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("encode", parents=[artifact_out, sched_opts, pipe_opts],
                       help="encode a clip into a latent stream")
    p.add_argument("input")
    p.add_argument("--static-rate", type=float, default=None, dest="static_rate",
                   help="bypass the scheduler with one uniform latent rate in Hz")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", parents=[artifact_out], help="decode a latent stream")
    p.add_argument("input")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("eval", parents=[common, sched_opts, pipe_opts],
                       help="dynamic vs matched-static roundtrip metrics")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--static-ratio", type=int, default=None, dest="static_ratio",
                   help="override the matched uniform ratio")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", parents=[common, sched_opts],
                       help="threshold grid sweep with Pareto frontier")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--grid-th1", type=_float_list, required=True, dest="grid_th1")
    p.add_argument("--grid-th2", type=_float_list, required=True, dest="grid_th2")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("search-placement", parents=[common, sched_opts],
                       help="exhaustive resampler placement search")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--pipeline", required=True, help="template descriptor with candidate slots")
    p.add_argument("--rate", type=float, required=True, help="latent rate class in Hz")
    p.set_defaults(func=cmd_search_placement)

    p = sub.add_parser("rope", parents=[common],
                       help="rotary position tables for a schedule")
    p.add_argument("schedule", help="schedule CSV produced by analyze")
    p.add_argument("--dim", type=int, default=16)
    p.set_defaults(func=cmd_rope)

    p = sub.add_parser("speedup", parents=[common],
                       help="token counts and estimated generation speedup")
    p.add_argument("schedules", nargs="+", help="schedule CSVs produced by analyze")
    p.add_argument("--spatial-tokens", type=int, default=1, dest="spatial_tokens")
    p.add_argument("--alpha", type=float, default=1.0,
                   help="quadratic cost fraction in [0, 1]")
    p.add_argument("--calibrate", default=None,
                   help="fit alpha from ratio:speedup observations, e.g. 0.5:3.1,0.33:6.2")
    p.set_defaults(func=cmd_speedup)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except ParameterError as exc:
        print(f"dlfr: configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"dlfr: I/O error: {exc}", file=sys.stderr)
        return 3
    except FormatError as exc:
        print(f"dlfr: format error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
