"""Exception types shared across the package."""


class SchemaError(ValueError):
    """A config or input document violates its schema. CLI exit code 2."""

    def __init__(self, message, pointer=None):
        self.pointer = pointer
        super().__init__(message if pointer is None else f"{message} (at {pointer})")


class ResourceCapError(RuntimeError):
    """A ball enumeration or coordinate magnitude exceeded its cap. CLI exit code 3."""


class CensoringError(RuntimeError):
    """Too many walk samples were censored at max_steps. CLI exit code 4."""


class CertificationError(RuntimeError):
    """A constant could not be certified within the configured search radius."""


class StatisticalCheckError(AssertionError):
    """A statistical acceptance check failed after retry. CLI exit code 5."""
