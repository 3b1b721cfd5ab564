"""Exception hierarchy shared across the package.

The CLI maps these onto stable exit codes: usage errors are 1, I/O and
format errors are 2, scorer/protocol errors are 3, validation errors are 4.
"""


class VidcurateError(Exception):
    """Base class for all package errors."""


class ValidationError(VidcurateError):
    """A record, config, or argument violates a documented invariant."""


class ManifestError(VidcurateError):
    """A manifest file could not be read or written."""


class FramePackError(VidcurateError):
    """A frame container file is malformed or inconsistent."""


class ExternalToolError(VidcurateError):
    """An external decoder command failed; carries its captured stderr."""

    def __init__(self, message: str, stderr: str = ""):
        super().__init__(message)
        self.stderr = stderr


class ScorerError(VidcurateError):
    """Scoring failed: transport failure after retries, or a server-reported error."""

    def __init__(self, message: str, code: str = "transport"):
        super().__init__(message)
        self.code = code


class ProtocolError(ScorerError):
    """A scorer response violated the wire schema."""

    def __init__(self, message: str):
        super().__init__(message, code="protocol")


class PipelineError(VidcurateError):
    """The filter pipeline aborted; carries the item that triggered the abort."""

    def __init__(self, message: str, item_id: str = ""):
        super().__init__(message)
        self.item_id = item_id


class ConfigError(ValidationError):
    """A run configuration file is malformed or violates an invariant."""
