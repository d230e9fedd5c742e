"""Convergence-order estimation by log-log slope fitting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoiseFloor

#: Defects at or below this are treated as floating-point noise.
NOISE_FLOOR = 1e-13


@dataclass(frozen=True)
class OrderFit:
    """Least-squares slope of log(defect) against log(scale)."""

    order: float
    residual: float  # RMS of the log-space fit errors
    used: int        # samples above the noise floor that entered the fit


def fit_order(samples, noise_floor: float = NOISE_FLOOR) -> OrderFit:
    """Fit the convergence order of (scale, defect) samples.

    Samples at or below the noise floor are excluded. Raises NoiseFloor when
    fewer than three informative samples remain.
    """
    pts = [(float(e), float(d)) for e, d in samples]
    live = [(e, d) for e, d in pts if d > noise_floor]
    if len(live) < 3:
        raise NoiseFloor(
            f"only {len(live)} samples above the noise floor {noise_floor:g}"
        )
    log_e = np.log([e for e, _ in live])
    log_d = np.log([d for _, d in live])
    slope, intercept = np.polyfit(log_e, log_d, 1)
    fitted = slope * log_e + intercept
    residual = float(np.sqrt(np.mean((fitted - log_d) ** 2)))
    return OrderFit(order=float(slope), residual=residual, used=len(live))


def try_fit_order(samples, noise_floor: float = NOISE_FLOOR):
    """fit_order, with the noise-floor case mapped to None."""
    try:
        return fit_order(samples, noise_floor)
    except NoiseFloor:
        return None
