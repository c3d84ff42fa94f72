"""Staged encode/decode pipeline with injectable temporal resamplers.

The encoder is a list of toy feature stages (identity, spatial mean-pool,
seeded orthonormal projection) with temporal-downsample slots between
them; the decoder mirrors it with upsample slots. When a segment needs a
temporal ratio r, slots are filled front to back with factor-2 steps until
r is reached, and the decoder applies the factors in reverse order at its
mirrored slots, so a 4x segment compresses at the input end of the encoder
and re-expands at the output end of the decoder.

Features are (T, C, h, w) arrays; a pixel segment enters as (T, 1, H, W).
Latent data is float32 end to end, matching the container payload type.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import DimensionError, FormatError, ParameterError
from .metrics import clip_quality
from .scheduler import RateClass, RateSchedule, schedule, single_class_config
from .video import Clip, segment_clip

STAGE_KINDS = (
    "identity",
    "spatial_mean_pool",
    "fixed_linear",
    "temporal_downsample_slot",
    "temporal_upsample_slot",
)

DOWN_METHODS = ("drop", "average", "linear")
UP_METHODS = ("nearest", "linear")


# ---------------------------------------------------------------------------
# Temporal resamplers
# ---------------------------------------------------------------------------


def _integer_factor(source_rate: float, target_rate: float, what: str) -> int:
    if source_rate <= 0 or target_rate <= 0:
        raise ParameterError(f"rates must be positive, got {source_rate} -> {target_rate}")
    factor = source_rate / target_rate if what == "stride" else target_rate / source_rate
    if abs(factor - round(factor)) > 1e-9 or round(factor) < 1:
        raise ParameterError(
            f"{what} {source_rate} Hz -> {target_rate} Hz is not an integer resampling"
        )
    return int(round(factor))


def _downsample_stride(features: np.ndarray, stride: int, method: str) -> np.ndarray:
    if stride == 1:
        return features
    n = features.shape[0]
    if method == "drop":
        return features[::stride]
    if method == "average":
        out_len = math.ceil(n / stride)
        dtype = features.dtype if np.issubdtype(features.dtype, np.floating) else np.float64
        out = np.empty((out_len,) + features.shape[1:], dtype=dtype)
        for i in range(out_len):
            out[i] = features[i * stride : (i + 1) * stride].mean(axis=0)
        return out
    if method == "linear":
        # sample positions i*stride are integers, so linear interpolation
        # coincides with drop; kept as an explicit method for symmetry
        return features[::stride]
    raise ParameterError(f"unknown downsample method {method!r}")


def _upsample_factor(features: np.ndarray, factor: int, method: str) -> np.ndarray:
    if factor == 1:
        return features
    n = features.shape[0]
    if method == "nearest":
        return np.repeat(features, factor, axis=0)
    if method == "linear":
        pos = np.arange(n * factor, dtype=np.float64) / factor
        i0 = np.floor(pos).astype(int)
        i1 = np.minimum(i0 + 1, n - 1)  # edge-hold past the last step
        w = (pos - i0).reshape((-1,) + (1,) * (features.ndim - 1))
        out = (1.0 - w) * features[i0] + w * features[i1]
        if np.issubdtype(features.dtype, np.floating):
            out = out.astype(features.dtype)
        return out
    raise ParameterError(f"unknown upsample method {method!r}")


def downsample(
    features: np.ndarray, source_rate: float, target_rate: float, method: str = "drop"
) -> np.ndarray:
    """Reduce the temporal rate of a feature sequence by an integer stride.

    drop keeps every s-th step starting at 0, average takes consecutive
    s-block means, linear resamples on the stride grid. Output length is
    ceil(len / s).
    """
    features = np.asarray(features)
    if features.shape[0] < 1:
        raise DimensionError("cannot downsample an empty feature sequence")
    stride = _integer_factor(source_rate, target_rate, "stride")
    return _downsample_stride(features, stride, method)


def upsample(
    features: np.ndarray, source_rate: float, target_rate: float, method: str = "linear"
) -> np.ndarray:
    """Raise the temporal rate by an integer factor (nearest or linear)."""
    features = np.asarray(features)
    if features.shape[0] < 1:
        raise DimensionError("cannot upsample an empty feature sequence")
    factor = _integer_factor(source_rate, target_rate, "factor")
    return _upsample_factor(features, factor, method)


# ---------------------------------------------------------------------------
# Stages and pipelines
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PipelineStage:
    kind: str
    factor: int = 2  # spatial_mean_pool block size
    seed: int = 0  # fixed_linear projection seed

    def __post_init__(self) -> None:
        if self.kind not in STAGE_KINDS:
            raise ParameterError(f"unknown stage kind {self.kind!r}")
        if self.kind == "spatial_mean_pool" and self.factor < 2:
            raise ParameterError(f"pool factor must be >= 2, got {self.factor}")


_PROJECTION_CACHE: dict[tuple[int, int], np.ndarray] = {}


def _projection(seed: int, size: int) -> np.ndarray:
    """Seeded orthonormal matrix; its transpose is the decoder mirror."""
    key = (seed, size)
    if key not in _PROJECTION_CACHE:
        rng = np.random.default_rng(seed)
        q, r = np.linalg.qr(rng.standard_normal((size, size)))
        _PROJECTION_CACHE[key] = q * np.sign(np.diag(r))
    return _PROJECTION_CACHE[key]


def _run_stage(stage: PipelineStage, x: np.ndarray, direction: str) -> np.ndarray:
    """Apply one feature stage; decoder stages run the mirror operation."""
    if stage.kind == "identity":
        return x
    if stage.kind == "spatial_mean_pool":
        f = stage.factor
        t, c, h, w = x.shape
        if direction == "encode":
            if h % f or w % f:
                raise DimensionError(
                    f"spatial dims ({h}, {w}) not divisible by pool factor {f}"
                )
            return x.reshape(t, c, h // f, f, w // f, f).mean(axis=(3, 5))
        return np.repeat(np.repeat(x, f, axis=2), f, axis=3)
    if stage.kind == "fixed_linear":
        t, c, h, w = x.shape
        mat = _projection(stage.seed, h * w)
        flat = x.reshape(t, c, h * w)
        out = flat @ mat.T if direction == "encode" else flat @ mat
        return out.reshape(t, c, h, w)
    raise ParameterError(f"stage {stage.kind!r} is a resampling slot, not a feature stage")


IDENTITY = PipelineStage("identity")
DOWN_SLOT = PipelineStage("temporal_downsample_slot")
UP_SLOT = PipelineStage("temporal_upsample_slot")


@dataclass(frozen=True)
class Pipeline:
    """Mirror-consistent encoder/decoder stage lists plus resampling methods."""

    encoder: tuple[PipelineStage, ...]
    decoder: tuple[PipelineStage, ...]
    down_method: str = "drop"
    up_method: str = "linear"

    def __post_init__(self) -> None:
        if self.down_method not in DOWN_METHODS:
            raise ParameterError(f"unknown downsample method {self.down_method!r}")
        if self.up_method not in UP_METHODS:
            raise ParameterError(f"unknown upsample method {self.up_method!r}")
        for stage in self.encoder:
            if stage.kind == "temporal_upsample_slot":
                raise ParameterError("upsample slots belong in the decoder")
        for stage in self.decoder:
            if stage.kind == "temporal_downsample_slot":
                raise ParameterError("downsample slots belong in the encoder")

    def require_mirror_consistency(self) -> None:
        """Encode/decode need every downsample slot paired with an upsample slot.

        Search templates may hold unequal candidate counts; every chosen
        placement is balanced before use.
        """
        if len(self.down_slots()) != len(self.up_slots()):
            raise ParameterError(
                f"{len(self.down_slots())} downsample slots need as many upsample slots, "
                f"got {len(self.up_slots())}"
            )

    def down_slots(self) -> tuple[int, ...]:
        return tuple(
            i for i, s in enumerate(self.encoder) if s.kind == "temporal_downsample_slot"
        )

    def up_slots(self) -> tuple[int, ...]:
        return tuple(
            i for i, s in enumerate(self.decoder) if s.kind == "temporal_upsample_slot"
        )

    def descriptor(self) -> str:
        enc = ",".join(_stage_token(s) for s in self.encoder)
        dec = ",".join(_stage_token(s) for s in self.decoder)
        return f"enc={enc};dec={dec};down={self.down_method};up={self.up_method}"


def _stage_token(stage: PipelineStage) -> str:
    if stage.kind == "identity":
        return "identity"
    if stage.kind == "spatial_mean_pool":
        return f"pool{stage.factor}"
    if stage.kind == "fixed_linear":
        return f"linear{stage.seed}"
    if stage.kind == "temporal_downsample_slot":
        return "dslot"
    return "uslot"


def _parse_stage_token(token: str) -> PipelineStage:
    token = token.strip()
    if token == "identity":
        return IDENTITY
    if token == "dslot":
        return DOWN_SLOT
    if token == "uslot":
        return UP_SLOT
    if token.startswith("pool"):
        try:
            return PipelineStage("spatial_mean_pool", factor=int(token[4:]))
        except ValueError:
            pass
    if token.startswith("linear"):
        try:
            return PipelineStage("fixed_linear", seed=int(token[6:]))
        except ValueError:
            pass
    raise ParameterError(f"cannot parse pipeline stage {token!r}")


def parse_pipeline(descriptor: str) -> Pipeline:
    """Inverse of Pipeline.descriptor()."""
    parts = dict()
    for chunk in descriptor.split(";"):
        if "=" not in chunk:
            raise ParameterError(f"malformed pipeline descriptor chunk {chunk!r}")
        key, _, val = chunk.partition("=")
        parts[key.strip()] = val.strip()
    missing = {"enc", "dec"} - set(parts)
    if missing:
        raise ParameterError(f"pipeline descriptor lacks {sorted(missing)} sections")
    enc = tuple(_parse_stage_token(t) for t in parts["enc"].split(",") if t.strip())
    dec = tuple(_parse_stage_token(t) for t in parts["dec"].split(",") if t.strip())
    return Pipeline(
        encoder=enc,
        decoder=dec,
        down_method=parts.get("down", "drop"),
        up_method=parts.get("up", "linear"),
    )


def default_pipeline(n_slots: int = 4, down_method: str = "drop", up_method: str = "linear") -> Pipeline:
    """Identity pipeline with ``n_slots`` slot pairs (ratios up to 2**n_slots)."""
    return Pipeline(
        encoder=(DOWN_SLOT,) * n_slots,
        decoder=(UP_SLOT,) * n_slots,
        down_method=down_method,
        up_method=up_method,
    )


def slots_for_ratio(max_ratio: int) -> int:
    return max(1, math.ceil(math.log2(max(max_ratio, 1))))


def plan_slot_factors(ratio: int, n_slots: int) -> list[int]:
    """Assign factor-2 steps to slots front to back until ``ratio`` is met."""
    factors = [1] * n_slots
    remaining = ratio
    for i in range(n_slots):
        if remaining == 1:
            break
        if remaining % 2:
            break
        factors[i] = 2
        remaining //= 2
    if remaining != 1:
        raise ParameterError(
            f"temporal ratio {ratio}x is unreachable with {n_slots} factor-2 slots"
        )
    return factors


# ---------------------------------------------------------------------------
# Latent containers (in-memory form; the byte format lives in container.py)
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LatentSegment:
    """One segment's latent code at its scheduled rate."""

    index: int
    latent_rate: float
    data: np.ndarray  # (T', C, h', w') float32

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float32)
        if arr.ndim != 4:
            raise DimensionError(f"latent data must be (T', C, h', w'), got {arr.shape}")
        if arr.shape[0] < 1:
            raise DimensionError("latent segment needs at least one temporal step")
        if not np.all(np.isfinite(arr)):
            raise ParameterError("latent data must be finite")
        object.__setattr__(self, "data", arr)

    @property
    def n_steps(self) -> int:
        return self.data.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, LatentSegment):
            return NotImplemented
        return (
            self.index == other.index
            and self.latent_rate == other.latent_rate
            and self.data.shape == other.data.shape
            and np.array_equal(self.data, other.data)
        )


@dataclass(frozen=True)
class LatentStream:
    """Ordered variable-rate latent segments plus decode metadata."""

    source_fps: float
    segment_len: int
    n_frames_total: int
    pipeline_descriptor: str
    class_table: tuple[tuple[float, int], ...]  # (eff_freq Hz, down ratio)
    segments: tuple[LatentSegment, ...]

    def __post_init__(self) -> None:
        rates = {round(2.0 * eff, 9) for eff, _ in self.class_table}
        for seg in self.segments:
            if round(seg.latent_rate, 9) not in rates:
                raise ParameterError(
                    f"segment {seg.index} rate {seg.latent_rate} Hz is not in the class table"
                )


# ---------------------------------------------------------------------------
# Encode / decode
# ---------------------------------------------------------------------------


def _check_schedule(clip: Clip, sched: RateSchedule) -> list:
    if abs(sched.fps - clip.fps) > 1e-9:
        raise ParameterError(f"schedule fps {sched.fps} does not match clip fps {clip.fps}")
    segments = segment_clip(clip, sched.segment_len)
    if len(segments) != sched.n_segments:
        raise ParameterError(
            f"schedule covers {sched.n_segments} segments, clip has {len(segments)}"
        )
    for seg, entry in zip(segments, sched.entries):
        if seg.n_frames != entry.n_frames:
            raise ParameterError(
                f"segment {seg.index}: schedule expects {entry.n_frames} frames, "
                f"clip segment has {seg.n_frames}"
            )
    return segments


def encode(clip: Clip, sched: RateSchedule, pipeline: Pipeline) -> LatentStream:
    """Run every segment through the encoder at its scheduled rate."""
    pipeline.require_mirror_consistency()
    segments = _check_schedule(clip, sched)
    n_slots = len(pipeline.down_slots())
    latents = []
    for seg, entry in zip(segments, sched.entries):
        factors = plan_slot_factors(entry.down_ratio, n_slots)
        x = seg.frames[:, None, :, :].astype(np.float64)
        slot = 0
        for stage in pipeline.encoder:
            if stage.kind == "temporal_downsample_slot":
                x = _downsample_stride(x, factors[slot], pipeline.down_method)
                slot += 1
            else:
                x = _run_stage(stage, x, "encode")
        latents.append(
            LatentSegment(index=seg.index, latent_rate=entry.latent_rate, data=x)
        )
    return LatentStream(
        source_fps=clip.fps,
        segment_len=sched.segment_len,
        n_frames_total=clip.n_frames,
        pipeline_descriptor=pipeline.descriptor(),
        class_table=tuple((c.eff_freq, c.down_ratio) for c in sched.classes),
        segments=tuple(latents),
    )


def decode(stream: LatentStream, pipeline: Pipeline) -> Clip:
    """Reconstruct a clip from a latent stream; inverse layout of encode."""
    pipeline.require_mirror_consistency()
    if pipeline.descriptor() != stream.pipeline_descriptor:
        raise ParameterError(
            "pipeline does not match the stream header: "
            f"{pipeline.descriptor()!r} vs {stream.pipeline_descriptor!r}"
        )
    n_segments = len(stream.segments)
    if n_segments == 0:
        raise FormatError("cannot decode a stream with no segments")
    n_full = stream.segment_len
    last_frames = stream.n_frames_total - n_full * (n_segments - 1)
    if not 1 <= last_frames <= n_full:
        raise FormatError(
            f"{n_segments} segments of length {n_full} cannot tile "
            f"{stream.n_frames_total} source frames"
        )
    n_slots = len(pipeline.up_slots())
    pieces = []
    for pos, seg in enumerate(stream.segments):
        ratio = stream.source_fps / seg.latent_rate
        if abs(ratio - round(ratio)) > 1e-6:
            raise FormatError(
                f"segment {seg.index} rate {seg.latent_rate} Hz does not divide "
                f"source fps {stream.source_fps}"
            )
        factors = list(reversed(plan_slot_factors(int(round(ratio)), n_slots)))
        x = seg.data.astype(np.float64)
        slot = 0
        for stage in pipeline.decoder:
            if stage.kind == "temporal_upsample_slot":
                x = _upsample_factor(x, factors[slot], pipeline.up_method)
                slot += 1
            else:
                x = _run_stage(stage, x, "decode")
        n_frames = last_frames if pos == n_segments - 1 else n_full
        if x.shape[0] < n_frames:
            raise FormatError(
                f"segment {seg.index} decoded to {x.shape[0]} frames, needs {n_frames}"
            )
        if x.shape[1] != 1:
            raise DimensionError(
                f"decoded features have {x.shape[1]} channels; pipeline must end at luma"
            )
        pieces.append(x[:n_frames, 0])
    frames = np.clip(np.concatenate(pieces, axis=0), 0.0, 255.0)
    return Clip(fps=stream.source_fps, frames=frames)


def roundtrip(clip: Clip, sched: RateSchedule, pipeline: Pipeline) -> Clip:
    return decode(encode(clip, sched, pipeline), pipeline)


# ---------------------------------------------------------------------------
# Placement search
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlacementResult:
    enc_slots: tuple[int, ...]  # indices into the template encoder stage list
    dec_slots: tuple[int, ...]
    mean_ssim: float
    mean_psnr: float


def _select_slots(stages: tuple[PipelineStage, ...], kind: str, keep: tuple[int, ...]) -> tuple:
    return tuple(s for i, s in enumerate(stages) if s.kind != kind or i in keep)


def placement_pipeline(
    template: Pipeline, enc_slots: tuple[int, ...], dec_slots: tuple[int, ...]
) -> Pipeline:
    """Concrete pipeline keeping only the chosen slots of a template."""
    return Pipeline(
        encoder=_select_slots(template.encoder, "temporal_downsample_slot", enc_slots),
        decoder=_select_slots(template.decoder, "temporal_upsample_slot", dec_slots),
        down_method=template.down_method,
        up_method=template.up_method,
    )


def evaluate_placement(
    template: Pipeline,
    enc_slots: tuple[int, ...],
    dec_slots: tuple[int, ...],
    corpus: list[Clip],
    rate_class: RateClass,
    segment_len: int | None = None,
) -> PlacementResult:
    """Mean reconstruction quality of one slot assignment over a corpus."""
    variant = placement_pipeline(template, enc_slots, dec_slots)
    ssims, psnrs = [], []
    for clip in corpus:
        cfg = single_class_config(clip.fps, rate_class.latent_rate)
        sched = schedule(clip, cfg, segment_len)
        quality = clip_quality(clip, roundtrip(clip, sched, variant))
        ssims.append(quality.ssim)
        psnrs.append(quality.psnr)
    return PlacementResult(
        enc_slots=enc_slots,
        dec_slots=dec_slots,
        mean_ssim=float(np.mean(ssims)),
        mean_psnr=float(np.mean(psnrs)),
    )


def search_placement(
    template: Pipeline,
    corpus: list[Clip],
    rate_class: RateClass,
    segment_len: int | None = None,
) -> tuple[PlacementResult, list[PlacementResult]]:
    """Exhaustively evaluate all legal slot assignments for a target ratio.

    Returns the best placement (highest mean SSIM, ties broken by earliest
    encoder slot then earliest decoder slot) and the full table.
    """
    if not corpus:
        raise ParameterError("placement search needs a non-empty corpus")
    ratio = rate_class.down_ratio
    n_active = max(0, round(math.log2(ratio)))
    if 2**n_active != ratio:
        raise ParameterError(f"ratio {ratio}x is not a power of two; no legal placement")
    enc_positions = template.down_slots()
    dec_positions = template.up_slots()
    if n_active > len(enc_positions) or n_active > len(dec_positions):
        raise ParameterError(
            f"ratio {ratio}x needs {n_active} slot pairs, template offers "
            f"{len(enc_positions)} encoder and {len(dec_positions)} decoder slots"
        )
    table = [
        evaluate_placement(template, enc, dec, corpus, rate_class, segment_len)
        for enc in combinations(enc_positions, n_active)
        for dec in combinations(dec_positions, n_active)
    ]
    best = min(table, key=lambda r: (-r.mean_ssim, r.enc_slots, r.dec_slots))
    return best, table
