"""Exception types raised across the package."""


class ConfigurationError(ValueError):
    """Inconsistent parameters, array dimensions, or scenario fields."""


class DegenerateGeometryError(ValueError):
    """A target coincides with a phase center or lies outside the range gate."""


class MainLobeUnresolved(ValueError):
    """No half-power crossing was found on one side of the peak."""

    def __init__(self, message="main lobe unresolved at grid extent"):
        super().__init__(message)


class NoSidelobeError(ValueError):
    """The profile has no local maximum outside the main lobe."""


class GridRangeError(ValueError):
    """Grid points map outside the calibrated range axis."""
