"""Scalar unit conventions and conversions.

Conventions used throughout the package:

* lengths are metres internally (km only at CLI/config boundaries and in
  the visibility parameter, which is conventionally quoted in km),
* attenuations are decibels (positive = loss),
* transmittances are dimensionless fractions in [0, 1],
* all noise variances are in shot-noise units (vacuum variance = 1).
"""

from __future__ import annotations

import math


def db_to_transmittance(attenuation_db: float) -> float:
    """Convert an attenuation in dB to a power transmittance in [0, 1]."""
    if not math.isfinite(attenuation_db):
        raise ValueError(f"attenuation must be finite, got {attenuation_db}")
    if attenuation_db < 0.0:
        raise ValueError(f"attenuation must be >= 0 dB, got {attenuation_db}")
    return 10.0 ** (-attenuation_db / 10.0)


def transmittance_to_db(transmittance: float) -> float:
    """Convert a power transmittance in (0, 1] to an attenuation in dB."""
    if not transmittance > 0.0:
        raise ValueError(
            f"transmittance must be > 0 (got {transmittance}); "
            "a fully blocked channel has no finite dB value"
        )
    if transmittance > 1.0:
        raise ValueError(f"transmittance must be <= 1, got {transmittance}")
    return -10.0 * math.log10(transmittance)
