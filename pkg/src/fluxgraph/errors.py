"""Exception types shared across the package."""


class FluxGraphError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(FluxGraphError):
    """A configuration value or file is invalid."""


class MalformedRecordError(FluxGraphError):
    """A ledger record line could not be parsed.

    Carries the 1-based line number (None when parsing a bare string)
    and a human-readable reason.
    """

    def __init__(self, reason: str, line_no=None):
        self.reason = reason
        self.line_no = line_no
        where = f"line {line_no}: " if line_no is not None else ""
        super().__init__(f"{where}{reason}")


class MissingFieldError(MalformedRecordError):
    """A mandatory record field is absent."""

    def __init__(self, field: str, line_no=None):
        self.field = field
        super().__init__(f"missing mandatory field '{field}'", line_no=line_no)


class UnknownAccountError(FluxGraphError):
    """An account id was referenced that does not exist in the graph."""


class LabelFileError(FluxGraphError):
    """The address/label CSV could not be read."""


class ClusterOverlapError(FluxGraphError):
    """Two clusters claim the same account."""


class PartialColoringError(FluxGraphError):
    """A node of the graph has no assigned color."""


class ConsistencyError(FluxGraphError):
    """Aggregate accounting does not add up; the run must not be trusted."""


class VerificationError(FluxGraphError):
    """The independent contraction check disagreed with the result."""
