class LfdfnetError(Exception):
    """Base class of every error raised on purpose by the lfdfnet package."""


class LightFieldShapeError(LfdfnetError, ValueError):
    """A tensor or light field violates a shape, parity, divisibility or channel constraint."""


class ColorSpaceError(LfdfnetError, ValueError):
    """An operation received a light field tagged with the wrong color space."""


class ConfigError(LfdfnetError, ValueError):
    """Unknown configuration keys, malformed overrides or invalid hyperparameter values."""


class DatasetError(LfdfnetError):
    """A dataset directory is incomplete or malformed (missing views, meta.json or ground truth)."""


class NonFiniteLossError(LfdfnetError, RuntimeError):
    """The training loss became NaN or infinite."""
