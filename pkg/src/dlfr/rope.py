"""Rotary position parameters for variable-duration latent tokens.

Tokens produced from a compressed segment span more source time than
base-rate tokens, so their rotary positions advance by the token duration
instead of by 1: P_0 = 0 and P_m is the cumulative start time of token m
in base-rate frame units. Uniform durations of 1 reduce everything to the
standard rotary embedding tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError
from .scheduler import RateSchedule

THETA_BASE = 10000.0


def theta(dim: int) -> np.ndarray:
    """Per-pair rotation frequencies theta_i = base^(-2i/D), i = 0..D/2-1."""
    if dim < 2 or dim % 2:
        raise ParameterError(f"rotary dimension must be even and >= 2, got {dim}")
    i = np.arange(dim // 2, dtype=np.float64)
    return THETA_BASE ** (-2.0 * i / dim)


def positions_from_durations(durations) -> np.ndarray:
    """Cumulative start times of tokens with the given durations."""
    d = np.asarray(durations, dtype=np.float64)
    if d.ndim != 1 or d.size == 0:
        raise ParameterError("durations must be a non-empty 1-D sequence")
    if np.any(d <= 0):
        raise ParameterError("durations must all be positive")
    positions = np.empty_like(d)
    positions[0] = 0.0
    np.cumsum(d[:-1], out=positions[1:])
    return positions


@dataclass(frozen=True)
class RopeTable:
    """Precomputed cos/sin rotation tables at resampled positions."""

    dim: int
    positions: np.ndarray  # (n_tokens,)
    theta: np.ndarray  # (dim/2,)
    cos: np.ndarray  # (n_tokens, dim/2)
    sin: np.ndarray


def rope_table(durations, dim: int) -> RopeTable:
    thetas = theta(dim)
    positions = positions_from_durations(durations)
    angles = np.outer(positions, thetas)
    return RopeTable(
        dim=dim, positions=positions, theta=thetas, cos=np.cos(angles), sin=np.sin(angles)
    )


def rotate(v, position: float, thetas: np.ndarray | None = None) -> np.ndarray:
    """Rotate each (2i, 2i+1) pair of ``v`` by angle position * theta_i."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size < 2 or v.size % 2:
        raise DimensionError(f"vector length must be even and >= 2, got shape {v.shape}")
    if thetas is None:
        thetas = theta(v.size)
    elif thetas.shape[0] != v.size // 2:
        raise DimensionError(
            f"theta table has {thetas.shape[0]} pairs, vector needs {v.size // 2}"
        )
    angles = position * thetas
    c, s = np.cos(angles), np.sin(angles)
    x, y = v[0::2], v[1::2]
    out = np.empty_like(v)
    out[0::2] = x * c - y * s
    out[1::2] = x * s + y * c
    return out


def attention_score(q, k, p_m: float, p_n: float) -> float:
    """Dot product of rotated query/key; depends only on p_m - p_n."""
    q = np.asarray(q, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    if q.shape != k.shape:
        raise DimensionError(f"query/key shapes differ: {q.shape} vs {k.shape}")
    thetas = theta(q.size)
    return float(np.dot(rotate(q, p_m, thetas), rotate(k, p_n, thetas)))


def durations_from_schedule(sched: RateSchedule) -> list[float]:
    """Per-token durations (in source-frame units) implied by a schedule.

    Each latent step of a segment covers ``down_ratio`` source frames; the
    trailing step of a short segment covers whatever remains.
    """
    durations: list[float] = []
    for entry in sched.entries:
        steps = math.ceil(entry.n_frames / entry.down_ratio)
        durations.extend(float(entry.down_ratio) for _ in range(steps - 1))
        durations.append(float(entry.n_frames - (steps - 1) * entry.down_ratio))
    return durations
