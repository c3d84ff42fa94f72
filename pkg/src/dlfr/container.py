"""Bit-exact byte format for latent streams.

Layout (all integers little-endian):

    magic           4s   "DLFR"
    version         u16  currently 1
    source_fps      f32
    segment_len     u32
    n_frames_total  u32  source frame count, needed to trim odd tails
    n_segments      u32
    descriptor      u32 length + UTF-8 pipeline descriptor
    n_classes       u32, then per class: eff_freq f32, ratio u32
    per segment:
        index u32, latent_rate f32, n_steps u32, channels u32,
        height u32, width u32, payload (n_steps*channels*h*w float32),
        crc u32 (CRC32 of the payload bytes)

Deserialization failures raise distinct error types: BadMagicError,
UnsupportedVersionError, TruncatedStreamError, ChecksumError.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from .errors import (
    BadMagicError,
    ChecksumError,
    ContainerError,
    TruncatedStreamError,
    UnsupportedVersionError,
)
from .pipeline import LatentSegment, LatentStream

MAGIC = b"DLFR"
VERSION = 1


def serialize(stream: LatentStream) -> bytes:
    buf = bytearray()
    buf += MAGIC
    buf += struct.pack("<H", VERSION)
    buf += struct.pack("<f", stream.source_fps)
    buf += struct.pack(
        "<III", stream.segment_len, stream.n_frames_total, len(stream.segments)
    )
    descriptor = stream.pipeline_descriptor.encode("utf-8")
    buf += struct.pack("<I", len(descriptor))
    buf += descriptor
    buf += struct.pack("<I", len(stream.class_table))
    for eff_freq, ratio in stream.class_table:
        buf += struct.pack("<fI", eff_freq, ratio)
    for seg in stream.segments:
        t, c, h, w = seg.data.shape
        payload = np.ascontiguousarray(seg.data, dtype="<f4").tobytes()
        buf += struct.pack("<IfIIII", seg.index, seg.latent_rate, t, c, h, w)
        buf += payload
        buf += struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF)
    return bytes(buf)


class _Reader:
    def __init__(self, data: bytes) -> None:
        self.data = data
        self.pos = 0

    def take(self, count: int, what: str) -> bytes:
        if self.pos + count > len(self.data):
            raise TruncatedStreamError(
                f"stream ends inside {what}: need {count} bytes at offset {self.pos}, "
                f"have {len(self.data) - self.pos}"
            )
        chunk = self.data[self.pos : self.pos + count]
        self.pos += count
        return chunk

    def unpack(self, fmt: str, what: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def deserialize(data: bytes) -> LatentStream:
    reader = _Reader(data)
    magic = reader.take(4, "magic")
    if magic != MAGIC:
        raise BadMagicError(f"expected magic {MAGIC!r}, got {magic!r}")
    (version,) = reader.unpack("<H", "version")
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported container version {version}")
    (source_fps,) = reader.unpack("<f", "header")
    segment_len, n_frames_total, n_segments = reader.unpack("<III", "header")
    (desc_len,) = reader.unpack("<I", "descriptor length")
    descriptor = reader.take(desc_len, "pipeline descriptor").decode("utf-8")
    (n_classes,) = reader.unpack("<I", "class table length")
    class_table = tuple(
        reader.unpack("<fI", f"class {i}") for i in range(n_classes)
    )
    segments = []
    for i in range(n_segments):
        index, latent_rate, t, c, h, w = reader.unpack("<IfIIII", f"segment {i} header")
        count = t * c * h * w
        payload = reader.take(4 * count, f"segment {i} payload")
        (crc,) = reader.unpack("<I", f"segment {i} checksum")
        actual = zlib.crc32(payload) & 0xFFFFFFFF
        if actual != crc:
            raise ChecksumError(
                f"segment {i}: payload CRC32 {actual:#010x} != stored {crc:#010x}"
            )
        values = np.frombuffer(payload, dtype="<f4").reshape(t, c, h, w)
        segments.append(
            LatentSegment(index=index, latent_rate=float(latent_rate), data=values)
        )
    if reader.pos != len(data):
        raise ContainerError(
            f"{len(data) - reader.pos} trailing bytes after the last segment"
        )
    return LatentStream(
        source_fps=float(source_fps),
        segment_len=int(segment_len),
        n_frames_total=int(n_frames_total),
        pipeline_descriptor=descriptor,
        class_table=tuple((float(e), int(r)) for e, r in class_table),
        segments=tuple(segments),
    )


def save_stream(stream: LatentStream, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(stream))


def load_stream(path) -> LatentStream:
    with open(path, "rb") as fh:
        return deserialize(fh.read())
