"""Error types raised across the toolkit.

Data problems subclass `ValueError` so callers that only know the standard
exception keep working; the CLI maps the whole `City3DQAError` family to a
data/validation exit code.
"""


class City3DQAError(Exception):
    """Base class for every error raised by the toolkit."""


class DataValidationError(City3DQAError, ValueError):
    """Input data violates a type invariant or a file contract."""


class PointParseError(DataValidationError):
    """A point record could not be parsed."""

    def __init__(self, message: str, line_number: int | None = None, field: int | None = None):
        """Build the error.

        Args:
            message (str): Human readable reason.
            line_number (int | None): 1-based line (or record) number in the source.
            field (int | None): 1-based field index that failed, if known.
        """
        self.line_number = line_number
        self.field = field
        where = []
        if line_number is not None:
            where.append(f"line {line_number}")
        if field is not None:
            where.append(f"field {field}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(f"{prefix}{message}")


class InstanceClassConflictError(DataValidationError):
    """One instance id was observed with two different class ids."""


class ManifestFormatError(DataValidationError):
    """A manifest, scene graph, lexicon or region map document is malformed."""


class DegenerateGeometryError(DataValidationError):
    """Two centroids coincide in the xy-plane, so no bearing exists."""


class InstanceReferenceError(DataValidationError):
    """An instance reference is unknown or ambiguous in the scene."""


class InstantiationError(DataValidationError):
    """A template slot has no bound value."""


class DatasetFormatError(DataValidationError):
    """A QA line-record file is malformed."""


class PredictionFormatError(DataValidationError):
    """A prediction line-record file is malformed."""


class ConfigurationError(City3DQAError, ValueError):
    """A configuration input (class map, lexicon, ratios, city lists) is incomplete or invalid."""


class RegistryError(City3DQAError, KeyError):
    """A template id is not registered."""

    def __str__(self) -> str:
        """Return the plain message instead of the KeyError repr."""
        return str(self.args[0]) if self.args else "unknown template"


class ExternalServiceError(City3DQAError):
    """The LLM endpoint failed or returned an unusable payload."""


def describe_validation_error(exc) -> str:
    """Render the first pydantic error as "field.path: message"."""
    errors = exc.errors()
    if not errors:
        return str(exc)
    first = errors[0]
    loc = ".".join(str(part) for part in first.get("loc", ())) or "<document>"
    return f"{loc}: {first.get('msg', 'invalid value')}"


class UsageError(Exception):
    """Command-line arguments are missing, unknown or out of range."""
