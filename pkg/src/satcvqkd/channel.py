"""Slant-path geometry and atmospheric link budget for a satellite downlink.

Three attenuation mechanisms are modelled: diffraction-limited geometric
loss, Mie scattering (Kruse/Kim visibility model) and scintillation with
aperture averaging.  Clouds and precipitation are intentionally absent:
they block the channel outright instead of attenuating it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from scipy.integrate import quad
from scipy.special import erfinv

from .errors import FarFieldViolation, GeometryError, NumericsError
from .quantities import db_to_transmittance

EARTH_RADIUS_M = 6_371_000.0

# Tolerated floating-point overshoot of |arcsin argument| beyond 1 (noise at
# zenith), and the eigen-angle at which the overshoot becomes a real error.
_ASIN_CLAMP_TOL = 1e-9


@dataclass(frozen=True)
class LinkGeometry:
    """Positions defining one satellite-to-ground line of sight.

    ``satellite_altitude_m`` is the orbit altitude at zenith; the elevation
    angle is measured at the ground station from the local horizon.
    """

    satellite_altitude_m: float
    elevation_deg: float
    ogs_altitude_m: float = 0.0
    atmosphere_thickness_m: float = 20_000.0
    earth_radius_m: float = EARTH_RADIUS_M

    def __post_init__(self) -> None:
        if not 0.0 < self.elevation_deg <= 90.0:
            raise GeometryError(
                f"elevation must be in (0, 90] degrees, got {self.elevation_deg}"
            )
        if not (
            self.satellite_altitude_m
            > self.atmosphere_thickness_m
            > self.ogs_altitude_m
            >= 0.0
        ):
            raise GeometryError(
                "altitudes must satisfy satellite > atmosphere thickness "
                f"> OGS >= 0, got {self.satellite_altitude_m}, "
                f"{self.atmosphere_thickness_m}, {self.ogs_altitude_m}"
            )
        if self.earth_radius_m <= 0.0:
            raise GeometryError("earth radius must be positive")


@dataclass(frozen=True)
class SlantPath:
    """Total line-of-sight distance and the portion inside the atmosphere."""

    total_distance_m: float
    effective_atmosphere_m: float


@dataclass(frozen=True)
class OpticalTerminals:
    """Transmitter/receiver optics entering the geometric-loss estimate."""

    wavelength_m: float = 1550e-9
    transmitter_aperture_m: float = 0.3
    receiver_aperture_m: float = 1.0
    transmitter_efficiency: float = 0.9
    receiver_efficiency: float = 0.9
    pointing_loss: float = 0.1

    def __post_init__(self) -> None:
        if self.wavelength_m <= 0.0 or self.transmitter_aperture_m <= 0.0 \
                or self.receiver_aperture_m <= 0.0:
            raise ValueError("wavelength and apertures must be positive")
        for name in ("transmitter_efficiency", "receiver_efficiency", "pointing_loss"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")


@dataclass(frozen=True)
class AtmosphericConditions:
    """Visibility, turbulence strength and the tolerated outage fraction."""

    visibility_km: float
    cn2: float  # refractive-index structure parameter, m^(-2/3)
    outage_probability: float = 1e-6

    def __post_init__(self) -> None:
        if self.visibility_km <= 0.0:
            raise ValueError(f"visibility must be positive, got {self.visibility_km}")
        if self.cn2 <= 0.0:
            raise ValueError(f"Cn^2 must be positive, got {self.cn2}")
        if not 0.0 < self.outage_probability < 0.5:
            raise ValueError(
                f"outage probability must be in (0, 0.5), got {self.outage_probability}"
            )


def _oblique_range(r_ogs_m: float, r_shell_m: float, elevation_deg: float) -> float:
    """Distance from the ground station to a spherical shell along the line of sight.

    Triangle (Earth centre, OGS, shell intersection): the angle at the shell
    follows from the sine rule; the central angle closes the triangle and the
    law of cosines yields the range.
    """
    theta = math.radians(elevation_deg)
    arg = math.cos(theta) * r_ogs_m / r_shell_m
    if abs(arg) > 1.0:
        if abs(arg) - 1.0 > _ASIN_CLAMP_TOL:
            raise GeometryError(
                f"arcsin argument {arg} outside [-1, 1]: line of sight does not "
                "reach the target shell"
            )
        arg = math.copysign(1.0, arg)
    central = (math.pi / 2.0 - theta) - math.asin(arg)
    return math.sqrt(
        r_shell_m**2 + r_ogs_m**2 - 2.0 * r_shell_m * r_ogs_m * math.cos(central)
    )


def slant_path(geometry: LinkGeometry) -> SlantPath:
    """Total link distance and effective atmosphere thickness along the path."""
    r_ogs = geometry.earth_radius_m + geometry.ogs_altitude_m
    total = _oblique_range(
        r_ogs,
        geometry.earth_radius_m + geometry.satellite_altitude_m,
        geometry.elevation_deg,
    )
    in_atmosphere = _oblique_range(
        r_ogs,
        geometry.earth_radius_m + geometry.atmosphere_thickness_m,
        geometry.elevation_deg,
    )
    return SlantPath(total_distance_m=total, effective_atmosphere_m=in_atmosphere)


def far_field_bound_m(terminals: OpticalTerminals) -> float:
    """Minimum link distance for which the diffraction-limited loss form holds."""
    return (
        terminals.receiver_aperture_m
        * terminals.transmitter_aperture_m
        / terminals.wavelength_m
    )


def geometric_loss_db(path: SlantPath, terminals: OpticalTerminals) -> float:
    """Diffraction-limited geometric loss of the link in dB.

    Raises :class:`FarFieldViolation` when the receiver is closer than
    D_r*D_t/wavelength; callers must skip such configurations.
    """
    bound = far_field_bound_m(terminals)
    if path.total_distance_m < bound:
        raise FarFieldViolation(path.total_distance_m, bound)
    spread = (
        path.total_distance_m
        * terminals.wavelength_m
        / (terminals.transmitter_aperture_m * terminals.receiver_aperture_m)
    ) ** 2
    optics = (
        terminals.transmitter_efficiency
        * (1.0 - terminals.pointing_loss)
        * terminals.receiver_efficiency
    )
    if optics <= 0.0:
        raise ValueError("terminal efficiencies leave no transmitted power")
    return 10.0 * math.log10(spread / optics)


def _kruse_kim_exponent(visibility_km: float) -> float:
    # Piecewise exponent of the (wavelength/550nm) term; the V = 50 km branch
    # boundary is discontinuous on purpose (1.3 vs 1.6).
    v = visibility_km
    if v >= 50.0:
        return 1.6
    if v >= 6.0:
        return 1.3
    if v >= 1.0:
        return 0.16 * v + 0.34
    if v >= 0.5:
        return v - 0.5
    return 0.0


def scattering_coefficient_db_per_km(wavelength_m: float, visibility_km: float) -> float:
    """Mie-scattering attenuation coefficient in dB/km (Kruse/Kim model)."""
    if wavelength_m <= 0.0:
        raise ValueError("wavelength must be positive")
    if visibility_km <= 0.0:
        raise ValueError("visibility must be positive")
    wavelength_nm = wavelength_m * 1e9
    p = _kruse_kim_exponent(visibility_km)
    return (
        10.0
        * math.log10(math.e)
        * (3.912 / visibility_km)
        * (wavelength_nm / 550.0) ** (-p)
    )


def rytov_variance(
    effective_atmosphere_m: float,
    cn2: float | Callable[[float], float],
    wavelength_m: float,
) -> float:
    """Rytov variance over the in-atmosphere path.

    ``cn2`` may be a constant or a callable profile Cn^2(z) with z the
    distance from the ground station in metres.  The path integral is done
    by adaptive quadrature.
    """
    if effective_atmosphere_m <= 0.0 or wavelength_m <= 0.0:
        raise ValueError("path length and wavelength must be positive")
    length = effective_atmosphere_m
    profile = cn2 if callable(cn2) else (lambda _z: cn2)
    k = 2.0 * math.pi / wavelength_m

    result, abserr = quad(
        lambda z: profile(z) * (length - z) ** (5.0 / 6.0),
        0.0,
        length,
        epsabs=0.0,
        epsrel=1e-12,
        limit=200,
    )
    if result != 0.0 and abserr > 1e-9 * abs(result):
        raise NumericsError(
            f"turbulence path integral did not converge: value {result}, "
            f"estimated error {abserr}"
        )
    return 2.25 * k ** (7.0 / 6.0) * result


def scintillation_index(
    receiver_aperture_m: float,
    wavelength_m: float,
    effective_atmosphere_m: float,
    rytov_var: float,
) -> float:
    """Aperture-averaged scintillation index for a spherical wave."""
    if receiver_aperture_m <= 0.0 or wavelength_m <= 0.0 or effective_atmosphere_m <= 0.0:
        raise ValueError("aperture, wavelength and path length must be positive")
    if rytov_var < 0.0:
        raise ValueError("Rytov variance must be >= 0")
    if rytov_var == 0.0:
        return 0.0
    d_sq = receiver_aperture_m**2 * math.pi / (2.0 * wavelength_m * effective_atmosphere_m)
    s65 = rytov_var ** (6.0 / 5.0)
    first = 0.20 * rytov_var / (1.0 + 0.18 * d_sq + 0.20 * s65) ** (7.0 / 6.0)
    second = (
        0.21 * rytov_var * (1.0 + 0.24 * s65) ** (-5.0 / 6.0)
        / (1.0 + 0.90 * d_sq + 0.21 * d_sq * s65)
    )
    return math.expm1(first + second)


def scintillation_loss_db(scint_index: float, outage_probability: float) -> float:
    """Scintillation fade in dB at the given outage probability.

    The value is negative for small outage probabilities (a fade margin);
    the link budget applies its magnitude as attenuation.
    """
    if scint_index < 0.0:
        raise ValueError("scintillation index must be >= 0")
    if not 0.0 < outage_probability < 0.5:
        raise ValueError(
            f"outage probability must be in (0, 0.5), got {outage_probability}"
        )
    log_term = math.log1p(scint_index)
    return 4.343 * (
        float(erfinv(2.0 * outage_probability - 1.0)) * math.sqrt(2.0 * log_term)
        - 0.5 * log_term
    )


@dataclass(frozen=True)
class LinkBudget:
    """Per-mechanism attenuations (dB) and the resulting transmittance."""

    slant: SlantPath
    geometric_db: float
    scattering_db: float  # per-km coefficient multiplied by the in-atmosphere path
    scintillation_db: float  # magnitude of the scintillation fade, applied as loss

    @property
    def total_db(self) -> float:
        return self.geometric_db + self.scattering_db + self.scintillation_db

    @property
    def transmittance(self) -> float:
        return db_to_transmittance(self.total_db)


def link_budget(
    geometry: LinkGeometry,
    terminals: OpticalTerminals,
    conditions: AtmosphericConditions,
) -> LinkBudget:
    """Full attenuation budget for one line of sight."""
    path = slant_path(geometry)
    a_geo = geometric_loss_db(path, terminals)
    a_scat = (
        scattering_coefficient_db_per_km(terminals.wavelength_m, conditions.visibility_km)
        * path.effective_atmosphere_m
        / 1000.0
    )
    sigma_r2 = rytov_variance(
        path.effective_atmosphere_m, conditions.cn2, terminals.wavelength_m
    )
    sigma_i2 = scintillation_index(
        terminals.receiver_aperture_m,
        terminals.wavelength_m,
        path.effective_atmosphere_m,
        sigma_r2,
    )
    a_sci = abs(scintillation_loss_db(sigma_i2, conditions.outage_probability))
    return LinkBudget(
        slant=path,
        geometric_db=a_geo,
        scattering_db=a_scat,
        scintillation_db=a_sci,
    )


def total_transmittance(
    geometry: LinkGeometry,
    terminals: OpticalTerminals,
    conditions: AtmosphericConditions,
) -> float:
    """Overall power transmittance of the link."""
    return link_budget(geometry, terminals, conditions).transmittance
