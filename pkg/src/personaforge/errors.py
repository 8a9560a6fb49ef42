"""Shared exception types."""


class PersonaForgeError(Exception):
    """Base class for all platform errors."""


class DimensionError(PersonaForgeError, ValueError):
    """Tensor shapes are incompatible with the requested operation."""


class InsufficientDataError(PersonaForgeError):
    """A profile has neither text nor images to encode."""


class TrainingError(PersonaForgeError):
    """Training diverged or was misconfigured; message carries diagnostics."""


class NotTrainedError(PersonaForgeError):
    """No published checkpoint exists for the requested model."""


class StoreError(PersonaForgeError):
    """Persistence-layer failure (corrupt file, unknown version, ...)."""


class NotFoundError(PersonaForgeError):
    """A referenced entity does not exist in the store."""


class ColdStartError(PersonaForgeError):
    """Retrieval found neither cohort preferences nor industry fallback."""
