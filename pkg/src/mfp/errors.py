"""Exception and warning types shared across the package."""


class MfpError(Exception):
    """Base class for all package-specific errors."""


class ShapeError(MfpError, ValueError):
    """An array argument has the wrong shape or incompatible dimensions."""


class NonFiniteError(MfpError, ArithmeticError):
    """An operation produced NaN or Inf values."""


class DecodeError(MfpError):
    """An image file could not be decoded (unsupported format or corrupt)."""


class ConfigError(MfpError, ValueError):
    """Invalid configuration value or mismatched backbone configurations."""


class WeightError(MfpError):
    """Base class for weight-archive problems."""


class ArchiveReadError(WeightError):
    """The weight archive could not be read (missing file, corrupt data)."""


class MissingTensorError(WeightError):
    """A required canonical tensor is absent from the weight archive."""


class WeightShapeError(WeightError):
    """A tensor in the weight archive has an unexpected shape."""


class NoPairsError(MfpError):
    """Directory pairing produced an empty manifest."""


class DegenerateInputWarning(UserWarning):
    """Numerically degenerate input (zero vectors, rank-deficient PCA)."""
