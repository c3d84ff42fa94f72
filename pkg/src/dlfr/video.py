"""Clip and segment representation, raw file I/O, and synthetic test signals.

Everything downstream works on luma only: a clip is a stack of 2-D frames
holding real-valued samples in [0, 255]. Color inputs are reduced to luma
at load time (ITU-R BT.601 weights) and 8-bit quantization happens only
when a clip is written back to disk.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, FormatError, ParameterError

RAW_MAGIC = "DLFRRAW"

#: BT.601 luma weights for R, G, B.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


def _as_frames(frames: np.ndarray) -> np.ndarray:
    arr = np.asarray(frames, dtype=np.float64)
    if arr.ndim != 3:
        raise DimensionError(f"frames must be a (T, H, W) array, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1 or arr.shape[2] < 1:
        raise DimensionError(f"frames must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError("frame samples must be finite")
    if arr.min() < 0.0 or arr.max() > 255.0:
        raise ParameterError(
            f"luma samples must lie in [0, 255], got range [{arr.min()}, {arr.max()}]"
        )
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Clip:
    """A luma frame sequence sampled at ``fps`` frames per second."""

    fps: float
    frames: np.ndarray  # (T, H, W) float64, samples in [0, 255]

    def __post_init__(self) -> None:
        if not (isinstance(self.fps, (int, float)) and math.isfinite(self.fps) and self.fps > 0):
            raise ParameterError(f"fps must be positive and finite, got {self.fps!r}")
        object.__setattr__(self, "fps", float(self.fps))
        object.__setattr__(self, "frames", _as_frames(self.frames))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Clip):
            return NotImplemented
        return (
            self.fps == other.fps
            and self.frames.shape == other.frames.shape
            and np.array_equal(self.frames, other.frames)
        )

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    @property
    def duration(self) -> float:
        """Clip length in seconds."""
        return self.n_frames / self.fps


@dataclass(frozen=True)
class Segment:
    """A contiguous window of a clip; the scheduling granularity.

    ``short`` marks a trailing segment with fewer frames than the nominal
    segment length. Downstream schedulers pin short segments to the
    highest-rate class instead of analyzing them.
    """

    index: int
    start_frame: int
    frames: np.ndarray
    fps: float
    short: bool = field(default=False)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def duration(self) -> float:
        return self.n_frames / self.fps


def segment_clip(clip: Clip, segment_len: int) -> list[Segment]:
    """Split a clip into ceil(T / segment_len) non-overlapping segments.

    Segment i starts at frame ``i * segment_len``; the last segment keeps
    whatever remains and is flagged short if it is incomplete.
    """
    if segment_len < 2:
        raise ParameterError(f"segment_len must be >= 2, got {segment_len}")
    segments = []
    for i, start in enumerate(range(0, clip.n_frames, segment_len)):
        frames = clip.frames[start : start + segment_len]
        segments.append(
            Segment(
                index=i,
                start_frame=start,
                frames=frames,
                fps=clip.fps,
                short=frames.shape[0] < segment_len,
            )
        )
    return segments


def concat_segments(segments: list[Segment]) -> np.ndarray:
    """Reassemble segment frames in order (inverse of segment_clip)."""
    return np.concatenate([s.frames for s in segments], axis=0)


# ---------------------------------------------------------------------------
# Synthetic generators. These are the ground-truth oracles for the sampling
# math: their temporal spectra and motion statistics are known analytically.
# ---------------------------------------------------------------------------


def synth_sine(
    freq: float,
    fps: float,
    n_frames: int,
    width: int = 32,
    height: int = 32,
    amplitude: float = 64.0,
    mean: float = 128.0,
) -> Clip:
    """Spatially constant clip whose pixels trace mean + A*sin(2*pi*f*n/fps).

    With 0 < freq < fps/2 the tone sits below Nyquist and the clip is an
    alias-free reference signal.
    """
    if freq < 0:
        raise ParameterError(f"freq must be >= 0, got {freq}")
    if n_frames < 1:
        raise ParameterError(f"n_frames must be >= 1, got {n_frames}")
    if not (0.0 <= mean - amplitude and mean + amplitude <= 255.0):
        raise ParameterError(
            f"mean {mean} +/- amplitude {amplitude} leaves the [0, 255] luma range"
        )
    n = np.arange(n_frames, dtype=np.float64)
    trace = mean + amplitude * np.sin(2.0 * np.pi * freq * n / fps)
    frames = np.broadcast_to(trace[:, None, None], (n_frames, height, width))
    return Clip(fps=fps, frames=frames)


def make_checker(width: int, height: int, cell: int = 8, low: float = 0.0, high: float = 255.0) -> np.ndarray:
    """Checkerboard base pattern with square cells of ``cell`` pixels."""
    if cell < 1:
        raise ParameterError(f"cell must be >= 1, got {cell}")
    ys = (np.arange(height) // cell)[:, None]
    xs = (np.arange(width) // cell)[None, :]
    return np.where((ys + xs) % 2 == 0, high, low).astype(np.float64)


def make_gradient(width: int, height: int) -> np.ndarray:
    """Horizontal luma ramp from 0 to 255."""
    if width == 1:
        row = np.zeros(1)
    else:
        row = np.linspace(0.0, 255.0, width)
    return np.broadcast_to(row, (height, width)).astype(np.float64)


def synth_translate(
    pattern: str,
    velocity: float,
    fps: float,
    n_frames: int,
    width: int = 32,
    height: int = 32,
    cell: int = 8,
    phase: int = 0,
) -> Clip:
    """Clip that cyclically shifts a base pattern by round(n * velocity) px.

    velocity 0 yields a static clip; velocity == width wraps to the same
    frame every time. ``phase`` pre-shifts the base pattern so corpora can
    vary without changing motion statistics.
    """
    if velocity < 0:
        raise ParameterError(f"velocity must be >= 0, got {velocity}")
    if pattern == "checker":
        base = make_checker(width, height, cell=cell)
    elif pattern == "gradient":
        base = make_gradient(width, height)
    else:
        raise ParameterError(f"unknown pattern {pattern!r} (expected checker or gradient)")
    if phase:
        base = np.roll(base, phase, axis=1)
    frames = np.empty((n_frames, height, width), dtype=np.float64)
    for n in range(n_frames):
        shift = int(round(n * velocity)) % width
        frames[n] = np.roll(base, shift, axis=1)
    return Clip(fps=fps, frames=frames)


def make_mixed_corpus(
    n_static: int = 10,
    n_motion: int = 10,
    fps: float = 16.0,
    n_frames: int = 64,
    width: int = 32,
    height: int = 32,
    seed: int = 0,
) -> list[tuple[str, Clip]]:
    """Deterministic static/high-motion clip corpus for schedule comparisons.

    Static clips are constant or frozen patterns (zero temporal energy);
    motion clips are translating checkerboards at two speeds whose
    reconstruction quality degrades strictly with deeper temporal striding,
    so uniform-vs-adaptive comparisons and threshold sweeps are well posed.
    """
    rng = np.random.default_rng(seed)
    clips: list[tuple[str, Clip]] = []
    for i in range(n_static):
        kind = i % 3
        if kind == 0:
            level = float(rng.integers(32, 224))
            frames = np.full((n_frames, height, width), level)
            clip = Clip(fps=fps, frames=frames)
        elif kind == 1:
            clip = synth_translate("checker", 0.0, fps, n_frames, width, height,
                                   cell=8, phase=int(rng.integers(0, width)))
        else:
            clip = synth_translate("gradient", 0.0, fps, n_frames, width, height)
        clips.append((f"static{i:02d}", clip))
    for i in range(n_motion):
        velocity = (1.0, 1.5)[i % 2]
        clip = synth_translate("checker", velocity, fps, n_frames, width, height,
                               cell=16, phase=int(rng.integers(0, width)))
        clips.append((f"motion{i:02d}", clip))
    return clips


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------


def rgb_to_luma(rgb: np.ndarray) -> np.ndarray:
    """BT.601 luma from an (..., 3) RGB array, rounded to nearest sample."""
    r, g, b = LUMA_WEIGHTS
    luma = rgb[..., 0] * r + rgb[..., 1] * g + rgb[..., 2] * b
    return np.round(luma).astype(np.float64)


def _format_fps(fps: float) -> str:
    return format(fps, "g")


def save_clip(clip: Clip, path: str | os.PathLike) -> None:
    """Write a clip in the raw format (8-bit quantization happens here)."""
    header = f"{RAW_MAGIC} {clip.width} {clip.height} {clip.n_frames} {_format_fps(clip.fps)}\n"
    data = np.clip(np.round(clip.frames), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(data.tobytes())


def _load_raw(path: str | os.PathLike) -> Clip:
    with open(path, "rb") as fh:
        header = fh.readline()
        try:
            text = header.decode("ascii")
        except UnicodeDecodeError as exc:
            raise FormatError(f"{path}: raw header is not ASCII") from exc
        parts = text.split()
        if len(parts) != 5 or parts[0] != RAW_MAGIC:
            raise FormatError(f"{path}: malformed raw header {text!r}")
        try:
            width, height, n_frames = (int(p) for p in parts[1:4])
            fps = float(parts[4])
        except ValueError as exc:
            raise FormatError(f"{path}: non-numeric raw header field in {text!r}") from exc
        if width < 1 or height < 1 or n_frames < 1 or fps <= 0:
            raise FormatError(f"{path}: raw header values out of range: {text!r}")
        expected = width * height * n_frames
        payload = fh.read(expected + 1)
        if len(payload) != expected:
            raise FormatError(
                f"{path}: expected {expected} payload bytes, found {len(payload)}"
            )
    frames = np.frombuffer(payload, dtype=np.uint8).reshape(n_frames, height, width)
    return Clip(fps=fps, frames=frames.astype(np.float64))


_IMAGE_EXTENSIONS = (".png", ".pgm")
FPS_SIDECAR = "fps.txt"


def _load_image_dir(path: str | os.PathLike) -> Clip:
    from PIL import Image

    names = sorted(
        n for n in os.listdir(path) if n.lower().endswith(_IMAGE_EXTENSIONS)
    )
    if not names:
        raise FormatError(f"{path}: no .png/.pgm frames found")
    sidecar = os.path.join(path, FPS_SIDECAR)
    if not os.path.exists(sidecar):
        raise FormatError(f"{path}: missing {FPS_SIDECAR} sidecar with the frame rate")
    with open(sidecar, "r", encoding="ascii") as fh:
        try:
            fps = float(fh.readline().strip())
        except ValueError as exc:
            raise FormatError(f"{sidecar}: cannot parse fps value") from exc

    frames = []
    shape = None
    for name in names:
        with Image.open(os.path.join(path, name)) as img:
            arr = np.asarray(img)
        if arr.ndim == 3:
            luma = rgb_to_luma(arr[..., :3].astype(np.float64))
        elif arr.ndim == 2:
            luma = arr.astype(np.float64)
        else:
            raise FormatError(f"{name}: unsupported image layout {arr.shape}")
        if shape is None:
            shape = luma.shape
        elif luma.shape != shape:
            raise DimensionError(
                f"{name}: frame size {luma.shape} differs from first frame {shape}"
            )
        frames.append(luma)
    return Clip(fps=fps, frames=np.stack(frames))


def load_clip(path: str | os.PathLike, fmt: str = "auto") -> Clip:
    """Load a clip from the raw format or a directory of grayscale images.

    fmt: "raw", "image_dir", or "auto" (directory => image_dir).
    """
    if fmt == "auto":
        fmt = "image_dir" if os.path.isdir(path) else "raw"
    if fmt == "raw":
        return _load_raw(path)
    if fmt == "image_dir":
        return _load_image_dir(path)
    raise ParameterError(f"unknown clip format {fmt!r}")
