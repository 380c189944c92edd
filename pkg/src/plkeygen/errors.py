"""Exception types shared across the package."""


class PlkeygenError(Exception):
    """Base class for all package-specific errors."""


class GridMismatchError(PlkeygenError, ValueError):
    """Spectra combined in one expression do not share the same frequency grid."""


class ReciprocityError(PlkeygenError, ValueError):
    """A two-port violates the unit-determinant reciprocity condition."""


class DegenerateDenominatorError(PlkeygenError, ZeroDivisionError):
    """A denominator magnitude fell below the representable floor (1e-30)."""


class ZeroEnergyError(PlkeygenError, ValueError):
    """A correlation was requested for a zero-energy sequence."""


class AllBinsMaskedError(PlkeygenError, ValueError):
    """Every frequency bin of a spectrum is flagged invalid."""


class TopologyError(PlkeygenError, ValueError):
    """Invalid network topology, port pair, or synthesis parameters."""


class ConfigError(PlkeygenError, ValueError):
    """Invalid experiment configuration."""


class RealizationError(PlkeygenError, RuntimeError):
    """A single ensemble realization failed; carries the failing indices."""
