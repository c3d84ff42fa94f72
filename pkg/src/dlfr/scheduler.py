"""Complexity-driven frame-rate scheduling.

Segments are scored with a content-complexity metric (mean dissimilarity
of adjacent frames), mapped onto a small set of rate classes through
ascending thresholds, and optionally smoothed so neighboring segments
never differ by more than one class.

Rate classes are configured by their latent frame rate in Hz; e.g. classes
{1, 2, 4} Hz for 16 FPS source video compress 16x/8x/4x temporally. Each
class's effective frequency is half its rate (the Nyquist bound it can
represent).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import ParameterError
from .metrics import ssim
from .video import Clip, Segment, segment_clip

DEFAULT_CLASS_RATES = (1.0, 2.0, 4.0)
DEFAULT_THRESHOLDS = (0.05, 0.15)


@dataclass(frozen=True)
class RateClass:
    """One complexity level and the latent rate assigned to it."""

    k: int  # ordinal, 1 = lowest frequency = max compression
    eff_freq: float  # Hz the class can represent (latent_rate / 2)
    latent_rate: float  # Hz
    down_ratio: int  # source fps / latent_rate


def build_classes(source_fps: float, latent_rates: tuple[float, ...] | list[float]) -> tuple[RateClass, ...]:
    """Build the ordered class table for a source frame rate.

    Rates must be strictly ascending and divide the source fps integrally
    (frame-drop downsampling needs an integer stride).
    """
    if not latent_rates:
        raise ParameterError("at least one rate class is required")
    rates = [float(r) for r in latent_rates]
    if any(r <= 0 for r in rates):
        raise ParameterError(f"class rates must be positive, got {rates}")
    if sorted(rates) != rates or len(set(rates)) != len(rates):
        raise ParameterError(f"class rates must be strictly ascending, got {rates}")
    classes = []
    for k, rate in enumerate(rates, start=1):
        ratio = source_fps / rate
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ParameterError(
                f"class rate {rate} Hz does not divide source fps {source_fps} integrally"
            )
        classes.append(
            RateClass(k=k, eff_freq=rate / 2.0, latent_rate=rate, down_ratio=int(round(ratio)))
        )
    return tuple(classes)


@dataclass(frozen=True)
class SchedulerConfig:
    classes: tuple[RateClass, ...]
    thresholds: tuple[float, ...]  # ascending, len(classes) - 1 entries
    smoothing: bool = True

    def __post_init__(self) -> None:
        if len(self.thresholds) != len(self.classes) - 1:
            raise ParameterError(
                f"{len(self.classes)} classes need {len(self.classes) - 1} thresholds, "
                f"got {len(self.thresholds)}"
            )
        if any(b <= a for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise ParameterError(f"thresholds must be strictly ascending, got {self.thresholds}")
        freqs = [c.eff_freq for c in self.classes]
        if any(b <= a for a, b in zip(freqs, freqs[1:])):
            raise ParameterError("classes must be strictly ordered by effective frequency")

    @property
    def source_fps(self) -> float:
        c = self.classes[0]
        return c.latent_rate * c.down_ratio

    @property
    def min_rate(self) -> float:
        return self.classes[0].latent_rate

    def by_ordinal(self, k: int) -> RateClass:
        return self.classes[k - 1]


def make_config(
    source_fps: float,
    latent_rates: tuple[float, ...] | list[float] = DEFAULT_CLASS_RATES,
    thresholds: tuple[float, ...] | list[float] = DEFAULT_THRESHOLDS,
    smoothing: bool = True,
) -> SchedulerConfig:
    return SchedulerConfig(
        classes=build_classes(source_fps, latent_rates),
        thresholds=tuple(float(t) for t in thresholds),
        smoothing=smoothing,
    )


def single_class_config(source_fps: float, latent_rate: float) -> SchedulerConfig:
    """Degenerate config that pins every segment to one rate (static schedule)."""
    return SchedulerConfig(
        classes=build_classes(source_fps, [latent_rate]), thresholds=(), smoothing=False
    )


@dataclass(frozen=True)
class ScheduleEntry:
    index: int
    n_frames: int
    complexity: float
    class_k: int
    latent_rate: float
    down_ratio: int


@dataclass(frozen=True)
class RateSchedule:
    """Per-segment rate assignments for one clip."""

    fps: float
    segment_len: int
    classes: tuple[RateClass, ...]
    entries: tuple[ScheduleEntry, ...]

    @property
    def n_segments(self) -> int:
        return len(self.entries)

    def latent_steps(self) -> int:
        """Total temporal steps after per-segment downsampling."""
        return sum(math.ceil(e.n_frames / e.down_ratio) for e in self.entries)

    def source_steps(self) -> int:
        return sum(e.n_frames for e in self.entries)

    def average_cr(self) -> float:
        """Achieved temporal compression ratio, source steps / latent steps."""
        return self.source_steps() / self.latent_steps()


def content_complexity(segment: Segment) -> float:
    """Mean adjacent-frame dissimilarity (1 - SSIM) of a segment, in [0, 2]."""
    frames = segment.frames
    if frames.shape[0] < 2:
        raise ParameterError(
            f"content complexity needs >= 2 frames, segment {segment.index} has {frames.shape[0]}"
        )
    dissim = [
        1.0 - ssim(frames[j], frames[j + 1]) for j in range(frames.shape[0] - 1)
    ]
    return float(sum(dissim) / len(dissim))


def classify(c: float, cfg: SchedulerConfig) -> RateClass:
    """Map a complexity value onto a rate class.

    Intervals are left-open, right-closed: class k covers
    Th[k-1] < c <= Th[k] with Th[0] = -inf and Th[N] = +inf.
    """
    for k, th in enumerate(cfg.thresholds, start=1):
        if c <= th:
            return cfg.classes[k - 1]
    return cfg.classes[-1]


def _entry_for(segment: Segment, rate_class: RateClass, complexity: float) -> ScheduleEntry:
    return ScheduleEntry(
        index=segment.index,
        n_frames=segment.n_frames,
        complexity=complexity,
        class_k=rate_class.k,
        latent_rate=rate_class.latent_rate,
        down_ratio=rate_class.down_ratio,
    )


def schedule(clip: Clip, cfg: SchedulerConfig, segment_len: int | None = None) -> RateSchedule:
    """Segment a clip, classify each segment, and smooth if configured.

    Short trailing segments are pinned to the highest-rate class; a
    single-frame tail cannot be scored and gets complexity 0 by convention.
    """
    if segment_len is None:
        segment_len = int(round(clip.fps))
    if abs(cfg.source_fps - clip.fps) > 1e-9:
        raise ParameterError(
            f"scheduler config is built for {cfg.source_fps} FPS, clip is {clip.fps} FPS"
        )
    entries = []
    for seg in segment_clip(clip, segment_len):
        complexity = content_complexity(seg) if seg.n_frames >= 2 else 0.0
        if seg.short:
            rate_class = cfg.classes[-1]
        else:
            rate_class = classify(complexity, cfg)
        entries.append(_entry_for(seg, rate_class, complexity))
    sched = RateSchedule(
        fps=clip.fps, segment_len=segment_len, classes=cfg.classes, entries=tuple(entries)
    )
    if cfg.smoothing:
        sched = smooth(sched, cfg)
    return sched


def smooth(raw: RateSchedule, cfg: SchedulerConfig) -> RateSchedule:
    """Limit adjacent entries to one class step, raising the lower side.

    Never lowers a segment's class, so high-motion segments keep their
    rate; idempotent.
    """
    ordinals = [e.class_k for e in raw.entries]
    changed = True
    while changed:
        changed = False
        for i in range(1, len(ordinals)):  # left to right
            if ordinals[i] < ordinals[i - 1] - 1:
                ordinals[i] = ordinals[i - 1] - 1
                changed = True
        for i in range(len(ordinals) - 2, -1, -1):  # right to left
            if ordinals[i] < ordinals[i + 1] - 1:
                ordinals[i] = ordinals[i + 1] - 1
                changed = True
    entries = []
    for entry, k in zip(raw.entries, ordinals):
        if k != entry.class_k:
            cls = cfg.by_ordinal(k)
            entry = replace(
                entry, class_k=cls.k, latent_rate=cls.latent_rate, down_ratio=cls.down_ratio
            )
        entries.append(entry)
    return replace(raw, entries=tuple(entries))


def schedule_from_proxy(
    proxy: Clip,
    n_segments: int,
    cfg: SchedulerConfig,
    segment_len: int | None = None,
) -> RateSchedule:
    """Schedule a target timeline from a rough preview clip.

    The proxy (any resolution or quality) is split into ``n_segments``
    equal spans by proportional time alignment and each span is scored in
    place of the real segment. A proxy running at an integer multiple of
    the configured source rate is decimated first so complexities are
    comparable across rates. Entries describe full target segments of
    ``segment_len`` frames at the configured source fps.
    """
    if n_segments < 1:
        raise ParameterError(f"n_segments must be >= 1, got {n_segments}")
    if segment_len is None:
        segment_len = int(round(cfg.source_fps))
    frames = proxy.frames
    rate_factor = proxy.fps / cfg.source_fps
    if rate_factor > 1 and abs(rate_factor - round(rate_factor)) < 1e-9:
        frames = frames[:: int(round(rate_factor))]
    if frames.shape[0] < 2 * n_segments:
        raise ParameterError(
            f"proxy too short: {frames.shape[0]} usable frames cannot cover "
            f"{n_segments} segments with >= 2 frames each"
        )
    bounds = [round(i * frames.shape[0] / n_segments) for i in range(n_segments + 1)]
    entries = []
    for i in range(n_segments):
        span = Segment(
            index=i,
            start_frame=bounds[i],
            frames=frames[bounds[i] : bounds[i + 1]],
            fps=cfg.source_fps,
        )
        complexity = content_complexity(span)
        rate_class = classify(complexity, cfg)
        entries.append(
            ScheduleEntry(
                index=i,
                n_frames=segment_len,
                complexity=complexity,
                class_k=rate_class.k,
                latent_rate=rate_class.latent_rate,
                down_ratio=rate_class.down_ratio,
            )
        )
    sched = RateSchedule(
        fps=cfg.source_fps,
        segment_len=segment_len,
        classes=cfg.classes,
        entries=tuple(entries),
    )
    if cfg.smoothing:
        sched = smooth(sched, cfg)
    return sched


# ---------------------------------------------------------------------------
# Plain-text config files (key=value per line, # comments)
# ---------------------------------------------------------------------------

_CONFIG_KEYS = ("classes", "thresholds", "smoothing", "segment_len", "epsilon")


def parse_config_text(text: str) -> dict:
    """Parse scheduler settings from key=value lines.

    Recognized keys: classes (comma-separated Hz), thresholds
    (comma-separated), smoothing (on/off), segment_len, epsilon.
    """
    values: dict = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"config line {lineno}: expected key=value, got {raw_line!r}")
        key, _, val = (p.strip() for p in line.partition("="))
        if key not in _CONFIG_KEYS:
            raise ParameterError(f"config line {lineno}: unknown key {key!r}")
        try:
            if key == "classes":
                values[key] = tuple(float(v) for v in val.split(","))
            elif key == "thresholds":
                values[key] = tuple(float(v) for v in val.split(",")) if val else ()
            elif key == "smoothing":
                if val.lower() not in ("on", "off", "true", "false"):
                    raise ValueError(val)
                values[key] = val.lower() in ("on", "true")
            elif key == "segment_len":
                values[key] = int(val)
            elif key == "epsilon":
                values[key] = float(val)
        except ValueError as exc:
            raise ParameterError(f"config line {lineno}: bad value for {key}: {val!r}") from exc
    return values
