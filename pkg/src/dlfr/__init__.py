"""Content-adaptive temporal compression through a variable frame-rate latent space.

The toolkit analyzes the temporal spectrum and content complexity of luma
video segments, schedules per-segment latent frame rates, runs a staged
encode/decode pipeline with dynamic temporal resamplers, stores the result
in a checksummed binary container, and models the positional-embedding and
attention-cost consequences of the reduced token count.
"""

from .errors import (
    BadMagicError,
    ChecksumError,
    ContainerError,
    DimensionError,
    DlfrError,
    FormatError,
    ParameterError,
    TruncatedStreamError,
    UnsupportedVersionError,
)
from .video import Clip, Segment, load_clip, save_clip, segment_clip, synth_sine, synth_translate
from .metrics import QualityScore, clip_quality, psnr, ssim
from .spectrum import (
    SpectrumReport,
    dft_magnitude,
    dominant_frequency,
    effective_frequency,
    latent_spectrum,
    required_rate,
    temporal_signal,
)
from .scheduler import (
    RateClass,
    RateSchedule,
    SchedulerConfig,
    ScheduleEntry,
    build_classes,
    classify,
    content_complexity,
    make_config,
    schedule,
    schedule_from_proxy,
    single_class_config,
    smooth,
)
from .pipeline import (
    LatentSegment,
    LatentStream,
    Pipeline,
    PipelineStage,
    decode,
    default_pipeline,
    downsample,
    encode,
    parse_pipeline,
    search_placement,
    upsample,
)
from .container import deserialize, load_stream, save_stream, serialize
from .rope import RopeTable, attention_score, positions_from_durations, rope_table, rotate, theta
from .cost import CostEstimate, calibrate_quad_fraction, estimate_speedup, token_count

__version__ = "0.1.0"

__all__ = [
    "BadMagicError", "ChecksumError", "ContainerError", "DimensionError",
    "DlfrError", "FormatError", "ParameterError", "TruncatedStreamError",
    "UnsupportedVersionError",
    "Clip", "Segment", "load_clip", "save_clip", "segment_clip",
    "synth_sine", "synth_translate",
    "QualityScore", "clip_quality", "psnr", "ssim",
    "SpectrumReport", "dft_magnitude", "dominant_frequency",
    "effective_frequency", "latent_spectrum", "required_rate", "temporal_signal",
    "RateClass", "RateSchedule", "SchedulerConfig", "ScheduleEntry",
    "build_classes", "classify", "content_complexity", "make_config",
    "schedule", "schedule_from_proxy", "single_class_config", "smooth",
    "LatentSegment", "LatentStream", "Pipeline", "PipelineStage",
    "decode", "default_pipeline", "downsample", "encode", "parse_pipeline",
    "search_placement", "upsample",
    "deserialize", "load_stream", "save_stream", "serialize",
    "RopeTable", "attention_score", "positions_from_durations",
    "rope_table", "rotate", "theta",
    "CostEstimate", "calibrate_quad_fraction", "estimate_speedup", "token_count",
]
