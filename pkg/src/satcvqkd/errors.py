"""Exception types shared across the package."""


class SatCvqkdError(Exception):
    """Base class for all errors raised by this package."""


class GeometryError(SatCvqkdError, ValueError):
    """Link geometry is inconsistent (elevation, altitudes, arcsin domain)."""


class FarFieldViolation(SatCvqkdError):
    """The receiver is not in the far field of the transmitter.

    The diffraction-limited loss formula does not apply; callers are
    expected to skip the configuration rather than extrapolate.
    """

    def __init__(self, link_distance_m: float, bound_m: float):
        self.link_distance_m = link_distance_m
        self.bound_m = bound_m
        super().__init__(
            f"far-field condition violated: link distance {link_distance_m:.1f} m "
            f"is below D_r*D_t/wavelength = {bound_m:.1f} m"
        )


class UnphysicalCovariance(SatCvqkdError):
    """A symplectic eigenvalue dropped below 1 or a discriminant went negative."""


class CutoffTooSmall(SatCvqkdError):
    """A Fock-space cutoff is too small to represent the requested state."""

    def __init__(self, message: str, required_cutoff: int | None = None):
        self.required_cutoff = required_cutoff
        super().__init__(message)


class ConvergenceError(SatCvqkdError):
    """An iterative numerical procedure failed to converge."""


class NumericsError(SatCvqkdError):
    """A numerical result violated a sanity bound (quadrature, negative variance)."""


class ProfileError(SatCvqkdError, ValueError):
    """A pass-profile stream could not be parsed or validated."""


class ConfigError(SatCvqkdError, ValueError):
    """A run configuration is invalid."""
