"""Errors raised by the imaging operations."""


class ImagingError(ValueError):
    """A raster did not satisfy an operation's contract."""


class BlankImageError(ImagingError):
    """Thresholding left no foreground pixel to crop to."""

    def __init__(self, message: str = "blank image"):
        super().__init__(message)


class PreprocessError(ImagingError):
    """A preprocessing stage failed; `stage` names the failing stage."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"{stage}: {cause}")
