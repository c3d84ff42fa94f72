"""Token accounting and analytic speedup estimates for compressed latents.

Generation cost is modeled as a quadratic attention term plus a linear
everything-else term: cost(T) = a*(T/Tb)^2 + (1-a)*(T/Tb) with the base
token count Tb as reference. The quadratic fraction ``a`` can be
calibrated from observed (token ratio, speedup) pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import minimize_scalar

from .errors import ParameterError
from .scheduler import RateSchedule


@dataclass(frozen=True)
class CostEstimate:
    tokens_base: int
    tokens_dlfr: int
    quad_fraction: float
    speedup: float


def token_count(sched: RateSchedule, spatial_tokens_per_frame: int) -> int:
    """Latent token count of a schedule: sum of per-segment steps x spatial tokens."""
    if spatial_tokens_per_frame < 1:
        raise ParameterError(
            f"spatial_tokens_per_frame must be >= 1, got {spatial_tokens_per_frame}"
        )
    return sched.latent_steps() * spatial_tokens_per_frame


def base_token_count(sched: RateSchedule, spatial_tokens_per_frame: int) -> int:
    """Token count of the same timeline at the source rate."""
    if spatial_tokens_per_frame < 1:
        raise ParameterError(
            f"spatial_tokens_per_frame must be >= 1, got {spatial_tokens_per_frame}"
        )
    return sched.source_steps() * spatial_tokens_per_frame


def _cost(ratio: float, alpha: float) -> float:
    return alpha * ratio**2 + (1.0 - alpha) * ratio


def estimate_speedup(tokens_base: int, tokens_dlfr: int, quad_fraction: float) -> float:
    """Per-step cost ratio between base-rate and compressed token counts."""
    if tokens_base <= 0 or tokens_dlfr <= 0:
        raise ParameterError(
            f"token counts must be positive, got {tokens_base} and {tokens_dlfr}"
        )
    if not 0.0 <= quad_fraction <= 1.0:
        raise ParameterError(f"quad_fraction must lie in [0, 1], got {quad_fraction}")
    ratio = tokens_dlfr / tokens_base
    return 1.0 / _cost(ratio, quad_fraction)


def calibrate_quad_fraction(observed) -> float:
    """Least-squares quadratic fraction for (token_ratio, speedup) pairs.

    Minimizes the squared speedup error over alpha in [0, 1]; endpoints are
    checked explicitly so exactly-quadratic or exactly-linear observations
    calibrate to 1.0 or 0.0.
    """
    obs = [(float(r), float(s)) for r, s in observed]
    if not obs:
        raise ParameterError("calibration needs at least one observation")
    if any(r <= 0 or s <= 0 for r, s in obs):
        raise ParameterError(f"ratios and speedups must be positive, got {obs}")
    if all(r == 1.0 for r, _ in obs):
        raise ParameterError("calibration needs an observation with token ratio != 1")

    def error(alpha: float) -> float:
        return math.fsum((1.0 / _cost(r, alpha) - s) ** 2 for r, s in obs)

    result = minimize_scalar(error, bounds=(0.0, 1.0), method="bounded")
    candidates = [0.0, 1.0, float(result.x)]
    best = min(candidates, key=error)
    return min(max(best, 0.0), 1.0)


def estimate(
    sched: RateSchedule, spatial_tokens_per_frame: int, quad_fraction: float
) -> CostEstimate:
    base = base_token_count(sched, spatial_tokens_per_frame)
    dlfr = token_count(sched, spatial_tokens_per_frame)
    return CostEstimate(
        tokens_base=base,
        tokens_dlfr=dlfr,
        quad_fraction=quad_fraction,
        speedup=estimate_speedup(base, dlfr, quad_fraction),
    )
