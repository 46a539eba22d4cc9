"""
Error types shared by the services, the CLI and the HTTP layer
"""


class BellError(Exception):
    """Base class for all workbench errors"""


class CatalogError(BellError, KeyError):
    """Unknown inequality identifier"""

    def __init__(self, name: str, valid_names):
        self.name = name
        self.valid_names = sorted(valid_names)
        super().__init__(
            f"Unknown inequality '{name}'. Valid names: {', '.join(self.valid_names)}"
        )

    def __str__(self) -> str:
        return self.args[0]


class DimensionMismatchError(BellError, ValueError):
    """Outcome dimensions of two operands disagree"""


class ParameterRangeError(BellError, ValueError):
    """A parameter lies outside its admissible range"""


class ResourceGuardError(BellError, ValueError):
    """Requested computation exceeds the configured resource limits"""


class InconsistencyError(BellError, ValueError):
    """Input violates normalization or no-signaling"""


class FormatError(BellError, ValueError):
    """Malformed serialized input"""
