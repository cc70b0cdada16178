"""Gaussian-modulated CV-QKD security under collective attacks.

Mutual information and the Holevo bound are evaluated from the two-mode
covariance matrix in closed form; the symplectic eigenvalues come out of
the usual quadratic in A, B (channel) and C, D (after Bob's measurement).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import UnphysicalCovariance

# Eigenvalues may undershoot 1 by this much before the state is called unphysical.
_EIGENVALUE_TOL = 1e-9
_DISCRIMINANT_TOL = 1e-9


class Detection(str, enum.Enum):
    HOMODYNE = "homodyne"
    HETERODYNE = "heterodyne"


@dataclass(frozen=True)
class NoiseBudget:
    """Channel/detector excess noise (SNU) and detector efficiency."""

    channel_excess: float = 0.0
    detector_excess: float = 0.0
    detector_efficiency: float = 1.0

    def __post_init__(self) -> None:
        if self.channel_excess < 0.0 or self.detector_excess < 0.0:
            raise ValueError("excess noise must be >= 0 SNU")
        if not 0.0 < self.detector_efficiency <= 1.0:
            raise ValueError(
                f"detector efficiency must be in (0, 1], got {self.detector_efficiency}"
            )


# Daylight totals: sums of the individual channel and detection contributions
# (time-of-arrival 0.0060, LO atmospheric RIN 0.0100, LO RIN 0.0018, modulation
# 0.0005, background 0.0002, signal RIN 0.0001; electronics 0.0130, ADC 0.0002,
# detector overlap 0.0001, LO subtraction 0.0001, LO leakage 0.0001).
DAYLIGHT_CHANNEL_EXCESS = 0.0186
DAYLIGHT_DETECTOR_EXCESS = 0.0135
DAYLIGHT_NOISE = NoiseBudget(
    channel_excess=DAYLIGHT_CHANNEL_EXCESS,
    detector_excess=DAYLIGHT_DETECTOR_EXCESS,
    detector_efficiency=1.0,
)


@dataclass(frozen=True)
class ChannelNoiseState:
    """Channel-referred noise terms for one transmittance/detector pairing."""

    transmittance: float
    chi_line: float
    chi_detector: float
    chi_total: float


def gaussian_correlation(modulation_variance: float) -> float:
    """Alice-Bob correlation coefficient of the Gaussian ensemble."""
    if modulation_variance <= 0.0:
        raise ValueError("modulation variance must be positive")
    return math.sqrt(modulation_variance**2 + 2.0 * modulation_variance)


def channel_noise(
    transmittance: float, budget: NoiseBudget, kind: Detection
) -> ChannelNoiseState:
    """Line, detector and total added noise in shot-noise units."""
    if not 0.0 < transmittance <= 1.0:
        raise ValueError(
            f"transmittance must be in (0, 1], got {transmittance}; "
            "the line noise diverges for a fully blocked channel"
        )
    eta = budget.detector_efficiency
    chi_line = 1.0 / transmittance - 1.0 + budget.channel_excess
    if kind is Detection.HOMODYNE:
        chi_det = ((1.0 - eta) + budget.detector_excess) / eta
    else:
        chi_det = (1.0 + (1.0 - eta) + 2.0 * budget.detector_excess) / eta
    return ChannelNoiseState(
        transmittance=transmittance,
        chi_line=chi_line,
        chi_detector=chi_det,
        chi_total=chi_line + chi_det / transmittance,
    )


def g_function(x: float) -> float:
    """Bosonic entropy function (x+1)log2(x+1) - x log2 x, with G(0) = 0."""
    if x < 0.0:
        raise ValueError(f"entropy argument must be >= 0, got {x}")
    if x == 0.0:
        return 0.0
    return (x + 1.0) * math.log2(x + 1.0) - x * math.log2(x)


def mutual_information_gm(
    modulation_variance: float, chi_total: float, kind: Detection
) -> float:
    """Alice-Bob mutual information in bits per pulse."""
    if modulation_variance < 0.0 or chi_total < 0.0:
        raise ValueError("modulation variance and total noise must be >= 0")
    half = 0.5 * math.log2(
        (modulation_variance + 1.0 + chi_total) / (1.0 + chi_total)
    )
    return half if kind is Detection.HOMODYNE else 2.0 * half


def _sqrt_eigenvalue(mean: float, product_root: float, label: str) -> tuple[float, float]:
    """Eigenvalue pair from lam^2 quadratic with sum `mean`, product `product_root`^2.

    The smaller eigenvalue comes from the product identity
    lam+ * lam- = product_root instead of the subtractive discriminant,
    which loses half the digits near degeneracy.
    """
    if mean <= 0.0:
        raise UnphysicalCovariance(f"non-positive eigenvalue sum {mean} in {label}")
    disc = mean**2 - 4.0 * product_root**2
    if disc < -_DISCRIMINANT_TOL:
        raise UnphysicalCovariance(
            f"negative discriminant in {label} eigenvalues: {disc}"
        )
    if disc < 1e-13 * mean**2:
        # below the rounding floor of the discriminant the +/- split is
        # noise; the degenerate point is the faithful value
        lam = math.sqrt(mean / 2.0)
        lam_plus = lam_minus = lam
    else:
        lam_plus = math.sqrt((mean + math.sqrt(disc)) / 2.0)
        lam_minus = product_root / lam_plus
    for lam in (lam_plus, lam_minus):
        if lam < 1.0 - _EIGENVALUE_TOL:
            raise UnphysicalCovariance(
                f"symplectic eigenvalue {lam} < 1 in {label} "
                f"(sum {mean}, product {product_root**2})"
            )
    return lam_plus, lam_minus


def holevo_bound(
    modulation_variance: float,
    transmittance: float,
    chi_line: float,
    chi_detector: float,
    correlation: float,
    kind: Detection,
) -> tuple[float, tuple[float, float, float, float]]:
    """Holevo information bound S_BE and the four symplectic eigenvalues.

    ``correlation`` is the Z term of the covariance matrix: the Gaussian
    value sqrt(V_A^2 + 2 V_A) or a discrete-modulation Z_M.
    """
    v = modulation_variance + 1.0
    t = transmittance
    z_sq = correlation**2
    chi_tot = chi_line + chi_detector / t

    a_term = v**2 + t**2 * (v + chi_line) ** 2 - 2.0 * t * z_sq
    sqrt_b = abs(t * v**2 + t * v * chi_line - t * z_sq)
    b_term = sqrt_b**2
    lam1, lam2 = _sqrt_eigenvalue(a_term, sqrt_b, "channel")

    denom = t * (v + chi_tot)
    if kind is Detection.HOMODYNE:
        c_term = (a_term * chi_detector + v * sqrt_b + t * (v + chi_line)) / denom
        sqrt_d = math.sqrt(sqrt_b * (v + sqrt_b * chi_detector) / denom)
    else:
        c_term = (
            a_term * chi_detector**2
            + b_term
            + 1.0
            + 2.0 * t * z_sq
            + 2.0 * chi_detector * (v * sqrt_b + t * (v + chi_line))
        ) / denom**2
        sqrt_d = (v + sqrt_b * chi_detector) / denom
    lam3, lam4 = _sqrt_eigenvalue(c_term, sqrt_d, "conditional")

    s_be = (
        g_function(max(0.0, (lam1 - 1.0) / 2.0))
        + g_function(max(0.0, (lam2 - 1.0) / 2.0))
        - g_function(max(0.0, (lam3 - 1.0) / 2.0))
        - g_function(max(0.0, (lam4 - 1.0) / 2.0))
    )
    return s_be, (lam1, lam2, lam3, lam4)


def skr_asymptotic(
    reconciliation_efficiency: float, mutual_information: float, holevo: float
) -> float:
    """Asymptotic secret key rate in bits per pulse (may be negative)."""
    if not 0.0 <= reconciliation_efficiency <= 1.0:
        raise ValueError("reconciliation efficiency must be in [0, 1]")
    return reconciliation_efficiency * mutual_information - holevo


@dataclass(frozen=True)
class SecurityResult:
    """One protocol evaluation at a fixed channel transmittance."""

    mutual_information: float  # bits/pulse
    holevo: float  # bits/pulse
    skr_asymptotic: float  # bits/pulse, negative means no key
    symplectic_eigenvalues: tuple[float, ...]
    noise: ChannelNoiseState | None = None


def gm_security(
    modulation_variance: float,
    transmittance: float,
    budget: NoiseBudget,
    kind: Detection,
    reconciliation_efficiency: float,
) -> SecurityResult:
    """Full Gaussian-modulation pipeline at one link transmittance."""
    noise = channel_noise(transmittance, budget, kind)
    i_ab = mutual_information_gm(modulation_variance, noise.chi_total, kind)
    s_be, lambdas = holevo_bound(
        modulation_variance,
        transmittance,
        noise.chi_line,
        noise.chi_detector,
        gaussian_correlation(modulation_variance),
        kind,
    )
    return SecurityResult(
        mutual_information=i_ab,
        holevo=s_be,
        skr_asymptotic=skr_asymptotic(reconciliation_efficiency, i_ab, s_be),
        symplectic_eigenvalues=lambdas,
        noise=noise,
    )
