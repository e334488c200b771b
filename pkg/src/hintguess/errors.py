"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Shapes, widths, or config combinations that can never work."""


class ProtocolError(RuntimeError):
    """Game or session protocol violated (wrong phase, illegal action, ...)."""


class StateError(RuntimeError):
    """Operation invoked in an invalid lifecycle state (e.g. double backward)."""


class CorruptionError(RuntimeError):
    """Persisted artifact failed its integrity check."""


class UnsupportedFormatError(RuntimeError):
    """Persisted artifact has an unknown format version."""
