"""Exception and warning types shared across the package."""


class GridError(ValueError):
    """Invalid grid construction parameters."""


class CorruptFieldError(ValueError):
    """A field contains NaN or Inf samples."""


class RegimeError(ValueError):
    """Parameters outside the admissible regime (e.g. |Omega| >= gamma)."""


class ConvergenceError(RuntimeError):
    """An iterative solver failed to converge within its budget."""


class AliasingError(RuntimeError):
    """A dilation or rescaling pushed significant mass outside the grid."""


class CertificationError(RuntimeError):
    """A computed object failed its self-consistency checks."""


class ConfigError(ValueError):
    """Invalid experiment configuration."""


class ResolutionWarning(UserWarning):
    """A field's spectral tail exceeds the configured resolution threshold."""
