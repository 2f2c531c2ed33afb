"""Exception and warning types shared across the package."""


class OrigamiError(Exception):
    """Base class for all errors raised by this package."""


class ModelError(OrigamiError, ValueError):
    """The creased-paper description is malformed or inconsistent."""


class AnalysisError(OrigamiError, RuntimeError):
    """A numerical analysis step could not be carried out."""


class GeometryWarning(UserWarning):
    """Non-fatal geometric oddity (non-planar panel, skipped check, ...)."""
