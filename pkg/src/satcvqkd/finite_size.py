"""Finite-size key rate: SNR, fitted reconciliation efficiency and frame
error rate, the privacy penalty, and the amended finite-size SKR.

The efficiency/FER fits were obtained at a 10^6 block length; FER falls
with block length, so using them at the default 10^11 symbols is a
conservatism that downstream reports should carry as metadata.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


@dataclass(frozen=True)
class ReconciliationModel:
    """Two-exponential efficiency fit and arctan FER fit coefficients."""

    name: str
    c1: float
    c2: float
    c3: float
    c4: float
    m1: float = 0.8218
    m2: float = -19.46
    m3: float = -298.1
    fit_block_length: float = 1e6


MD = ReconciliationModel("MD", c1=-0.0825, c2=0.1834, c3=0.9821, c4=-0.00002815)
MLC_MSD = ReconciliationModel("MLC-MSD", c1=0.9655, c2=0.0001507, c3=-0.04696, c4=-0.2238)


@dataclass(frozen=True)
class FiniteSizeParams:
    """Block-size and security parameters of the finite-size analysis."""

    repetition_rate_hz: float = 50e6
    discretisation: int = 5
    smoothing: float = 2e-10
    security: float = 1e-9
    total_symbols: float = 1e11

    def __post_init__(self) -> None:
        if self.repetition_rate_hz <= 0.0 or self.total_symbols <= 0.0:
            raise ValueError("repetition rate and symbol count must be positive")
        if self.discretisation <= 0:
            raise ValueError("discretisation parameter must be positive")
        if not 0.0 < self.smoothing < 1.0 or not 0.0 < self.security < 1.0:
            raise ValueError("smoothing and security parameters must be in (0, 1)")


def snr_db(alpha: float, transmittance: float, chi_total: float) -> float:
    """Signal-to-noise ratio in dB for coherent amplitude ``alpha``."""
    photons = abs(alpha) ** 2
    if photons <= 0.0:
        raise ValueError("signal amplitude must be non-zero")
    if not 0.0 < transmittance <= 1.0 or chi_total < 0.0:
        raise ValueError("need transmittance in (0, 1] and noise >= 0")
    return 10.0 * math.log10(
        transmittance * photons / (photons + (1.0 - transmittance) * chi_total)
    )


class BetaFit(NamedTuple):
    value: float
    valid: bool  # the fit only holds for values inside [0, 1]


class FerFit(NamedTuple):
    value: float  # clamped to [0, 1]
    raw: float
    clamped: bool


def beta(snr: float, model: ReconciliationModel, form: str = "two_exponential") -> BetaFit:
    """Reconciliation efficiency at the given SNR (dB).

    ``form="power"`` evaluates the fit as nested powers instead of the
    two-exponential shape; with negative coefficients this is undefined over
    the reals and surfaces as NaN (flagged invalid).  It exists for audit
    only.
    """
    if form == "two_exponential":
        value = model.c1 * math.exp(model.c2 * snr) + model.c3 * math.exp(model.c4 * snr)
    elif form == "power":
        with np.errstate(invalid="ignore"):
            value = float(
                np.power(model.c1, model.c2 * snr) - np.power(model.c3, model.c4 * snr)
            )
    else:
        raise ValueError(f"unknown beta form {form!r}")
    valid = math.isfinite(value) and 0.0 <= value <= 1.0
    return BetaFit(value=value, valid=valid)


def fer(snr: float, model: ReconciliationModel) -> FerFit:
    """Frame error rate at the given SNR (dB), clamped to [0, 1].

    The arctan fit saturates outside the transition region; the clamp flag
    is informational, clamped values remain usable.
    """
    raw = 0.5 * (1.0 + model.m1 * math.atan(model.m2 * snr + model.m3))
    value = min(max(raw, 0.0), 1.0)
    return FerFit(value=value, raw=raw, clamped=value != raw)


def privacy_penalty(params: FiniteSizeParams, final_term: str = "as_fitted") -> float:
    """Finite-size privacy penalty in bits per pulse.

    ``final_term="as_fitted"`` keeps the last term's double 1/sqrt(N)
    scaling (net 1/N); ``"single_sqrt"`` switches it to a lone 1/sqrt(N)
    for sensitivity runs.
    """
    d = float(params.discretisation)
    eps_s = params.smoothing
    eps = params.security
    sqrt_n = math.sqrt(params.total_symbols)

    first = (d + 1.0) ** 2 / sqrt_n
    second = 4.0 * (d + 1.0) * math.sqrt(math.log2(2.0 / eps_s)) / sqrt_n
    third = 2.0 * math.log2(2.0 / (eps**2 * eps_s)) / sqrt_n
    last = 4.0 * eps_s * d / (eps * sqrt_n)
    if final_term == "as_fitted":
        last /= sqrt_n
    elif final_term != "single_sqrt":
        raise ValueError(f"unknown final-term variant {final_term!r}")
    return first + second + third + last


def skr_finite(
    repetition_rate_hz: float,
    frame_error_rate: float,
    reconciliation_efficiency: float,
    mutual_information: float,
    holevo: float,
    privacy: float,
    variant: str = "amended",
    estimation_fraction: float | None = None,
) -> float:
    """Finite-size secret key rate in bits per second (may be negative).

    The amended form charges frame losses against the corrected information
    only; the legacy form additionally reserves a fraction of symbols for
    parameter estimation.
    """
    if not 0.0 <= frame_error_rate <= 1.0:
        raise ValueError("frame error rate must be in [0, 1]")
    if variant == "amended":
        return repetition_rate_hz * (
            (1.0 - frame_error_rate) * reconciliation_efficiency * mutual_information
            - holevo
            - privacy
        )
    if variant == "legacy":
        if estimation_fraction is None or not 0.0 <= estimation_fraction <= 1.0:
            raise ValueError("legacy variant needs an estimation fraction in [0, 1]")
        return (
            repetition_rate_hz
            * (1.0 - frame_error_rate)
            * (1.0 - estimation_fraction)
            * (
                reconciliation_efficiency * mutual_information
                - holevo
                - privacy
            )
        )
    raise ValueError(f"unknown finite-size variant {variant!r}")
