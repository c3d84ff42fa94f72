"""Corpus-level roundtrip evaluation and threshold sweeps.

A dynamic schedule rarely lands exactly on an integer uniform ratio, so
the "matched" static baseline runs at the achievable uniform ratio nearest
to the dynamic corpus compression ratio (ties preferring the higher
ratio), mirroring how adaptive-vs-uniform codecs are usually compared.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .metrics import clip_quality
from .pipeline import Pipeline, default_pipeline, roundtrip, slots_for_ratio
from .scheduler import SchedulerConfig, make_config, schedule, single_class_config
from .video import Clip


@dataclass(frozen=True)
class EvalRow:
    clip: str
    kind: str  # "dynamic" or "static"
    cr: float
    ssim: float
    psnr: float


@dataclass(frozen=True)
class EvalSummary:
    dynamic_cr: float
    dynamic_ssim: float
    static_ratio: int
    static_cr: float
    static_ssim: float


def achievable_ratios(n_slots: int) -> list[int]:
    """Uniform temporal ratios reachable with factor-2 slot filling."""
    return [2**k for k in range(n_slots + 1)]


def matched_static_ratio(dynamic_cr: float, ratios: list[int]) -> int:
    """Achievable uniform ratio nearest to a dynamic CR, ties to the larger."""
    if not ratios:
        raise ParameterError("no achievable static ratios")
    return min(ratios, key=lambda r: (abs(r - dynamic_cr), -r))


def _corpus_cr(schedules) -> float:
    return sum(s.source_steps() for s in schedules) / sum(
        s.latent_steps() for s in schedules
    )


def eval_corpus(
    named_clips: list[tuple[str, Clip]],
    cfg: SchedulerConfig,
    segment_len: int | None = None,
    pipeline: Pipeline | None = None,
    static_ratio: int | None = None,
) -> tuple[list[EvalRow], EvalSummary]:
    """Roundtrip every clip under the dynamic schedule and a static baseline.

    Returns per-clip rows (a static row for every dynamic row) and the
    corpus summary with the achieved average compression ratios.
    """
    if not named_clips:
        raise ParameterError("evaluation corpus is empty")
    max_ratio = max(c.down_ratio for c in cfg.classes)
    n_slots = slots_for_ratio(max_ratio if static_ratio is None else max(max_ratio, static_ratio))
    if pipeline is None:
        pipeline = default_pipeline(n_slots)

    schedules = {name: schedule(clip, cfg, segment_len) for name, clip in named_clips}
    dynamic_cr = _corpus_cr(schedules.values())
    if static_ratio is None:
        static_ratio = matched_static_ratio(
            dynamic_cr, achievable_ratios(len(pipeline.down_slots()))
        )

    fps = named_clips[0][1].fps
    static_cfg = single_class_config(fps, fps / static_ratio)

    rows: list[EvalRow] = []
    dyn_ssims, static_ssims = [], []
    static_crs = []
    for name, clip in named_clips:
        sched = schedules[name]
        quality = clip_quality(clip, roundtrip(clip, sched, pipeline))
        dyn_ssims.append(quality.ssim)
        rows.append(
            EvalRow(clip=name, kind="dynamic", cr=sched.average_cr(),
                    ssim=quality.ssim, psnr=quality.psnr)
        )
        s_sched = schedule(clip, static_cfg, segment_len)
        s_quality = clip_quality(clip, roundtrip(clip, s_sched, pipeline))
        static_ssims.append(s_quality.ssim)
        static_crs.append(s_sched.average_cr())
        rows.append(
            EvalRow(clip=name, kind="static", cr=s_sched.average_cr(),
                    ssim=s_quality.ssim, psnr=s_quality.psnr)
        )
    summary = EvalSummary(
        dynamic_cr=dynamic_cr,
        dynamic_ssim=float(np.mean(dyn_ssims)),
        static_ratio=static_ratio,
        static_cr=float(np.mean(static_crs)),
        static_ssim=float(np.mean(static_ssims)),
    )
    return rows, summary


@dataclass(frozen=True)
class SweepPoint:
    thresholds: tuple[float, ...]
    cr: float
    ssim: float
    frontier: bool


def pareto_front(points: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Non-dominated subset when maximizing both coordinates."""
    unique = sorted(set(points))
    front = []
    for p in unique:
        dominated = any(
            q != p and q[0] >= p[0] and q[1] >= p[1] for q in unique
        )
        if not dominated:
            front.append(p)
    return front


def threshold_sweep(
    named_clips: list[tuple[str, Clip]],
    latent_rates,
    grid: list[tuple[float, ...]],
    segment_len: int | None = None,
    smoothing: bool = True,
    pipeline: Pipeline | None = None,
) -> list[SweepPoint]:
    """One (corpus CR, mean SSIM) point per threshold cell, frontier flagged."""
    if not grid:
        raise ParameterError("threshold grid is empty")
    if not named_clips:
        raise ParameterError("sweep corpus is empty")
    fps = named_clips[0][1].fps
    results = []
    for thresholds in grid:
        cfg = make_config(fps, latent_rates, thresholds, smoothing=smoothing)
        max_ratio = max(c.down_ratio for c in cfg.classes)
        pipe = pipeline or default_pipeline(slots_for_ratio(max_ratio))
        schedules = []
        ssims = []
        for _, clip in named_clips:
            sched = schedule(clip, cfg, segment_len)
            schedules.append(sched)
            ssims.append(clip_quality(clip, roundtrip(clip, sched, pipe)).ssim)
        results.append((tuple(thresholds), _corpus_cr(schedules), float(np.mean(ssims))))
    front = set(pareto_front([(cr, ssim) for _, cr, ssim in results]))
    return [
        SweepPoint(thresholds=th, cr=cr, ssim=ssim, frontier=(cr, ssim) in front)
        for th, cr, ssim in results
    ]


def frontier_is_monotone(points: list[SweepPoint]) -> bool:
    """Higher CR never gains SSIM along the non-dominated frontier."""
    front = sorted({(p.cr, p.ssim) for p in points if p.frontier})
    return all(
        b[1] <= a[1] + 1e-12 for a, b in zip(front, front[1:])
    )


def grid_from_axes(axis1, axis2) -> list[tuple[float, float]]:
    """All strictly ascending (th1, th2) cells from two axis value lists."""
    cells = [(t1, t2) for t1 in axis1 for t2 in axis2 if t1 < t2]
    if not cells:
        raise ParameterError("threshold axes produce no ascending (th1, th2) cells")
    return cells
