"""Exception hierarchy. Every error carries a short machine-readable ``category``."""


class SigcnError(Exception):
    category = "error"


class ShapeError(SigcnError, ValueError):
    category = "shape"


class LineageError(SigcnError):
    """Gradient requested for a tensor that is not a leaf of the loss's tape."""

    category = "lineage"


class ForegroundEmptyError(SigcnError, ValueError):
    category = "foreground_empty"


class ConfigError(SigcnError, ValueError):
    category = "config"


class InputError(SigcnError, ValueError):
    category = "input"


class TensorIOError(SigcnError, OSError):
    category = "io"


class MissingFileError(TensorIOError, FileNotFoundError):
    category = "io.missing_file"


class BadMagicError(TensorIOError):
    category = "io.bad_magic"


class DimMismatchError(TensorIOError):
    """Payload size or episode tensor dims disagree with the header / manifest."""

    category = "io.dim_mismatch"
