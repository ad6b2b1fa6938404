"""Exception types shared across the simulator."""


class ConfigurationError(ValueError):
    """A configuration value violates a contract (bandwidth, block sizes, ...)."""


class SyncError(RuntimeError):
    """Correlation peak too weak to establish frame alignment."""


class EqualizerDivergence(RuntimeError):
    """LMS error grew instead of converging, usually a too-large step size."""
