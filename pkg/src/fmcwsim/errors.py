"""Exception types shared across the simulator.

Every error carries a short machine-parsable category so the CLI can emit
one-line diagnostics of the form ``error:<category>:<message>``.
"""


class SimulationError(ValueError):
    """Base class for simulator errors."""

    category = "simulation"


class ConfigError(SimulationError):
    """Invalid or inconsistent configuration values."""

    category = "config"


class BoundsError(SimulationError):
    """Geometry outside the permitted region (room, tap capacity, ...)."""

    category = "bounds"


class FormatError(SimulationError):
    """Malformed file content (manifest, look-up table, headers, ...)."""

    category = "format"


def error_category(exc: BaseException) -> str:
    if isinstance(exc, SimulationError):
        return exc.category
    if isinstance(exc, (OSError, IOError)):
        return "io"
    if isinstance(exc, ValueError):
        return "invalid-input"
    return "internal"
