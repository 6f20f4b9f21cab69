"""Exception hierarchy shared across the pipeline."""

from __future__ import annotations


class CodemendError(Exception):
    """Base class for every error raised by this package."""


class ReportParseError(CodemendError):
    """An issue report could not be parsed or validated."""


class ScanError(CodemendError):
    """A filesystem scan failed (unreadable file, missing root)."""


class PlanError(CodemendError):
    """A revision plan could not be built from its inputs."""


class QueryError(CodemendError):
    """An issue could not be turned into a search query."""


class PromptError(CodemendError):
    """A prompt could not be assembled."""


class ProviderError(CodemendError):
    """A model provider call failed."""

    def __init__(self, message: str, transient: bool = False):
        super().__init__(message)
        self.transient = transient


class GatewayError(CodemendError):
    """A submission failed after exhausting its retry budget."""

    def __init__(self, message: str, tier: str = "", file_location: str = ""):
        super().__init__(message)
        self.tier = tier
        self.file_location = file_location


class UnusableResponseError(GatewayError):
    """The provider replied, but the reply cannot be used as file content."""


class RegressionError(CodemendError):
    """A re-scan reported more open issues than before the revision."""


class OrchestrationError(CodemendError):
    """A pipeline tier aborted (for example the analyzer failed)."""


class ReviewError(CodemendError):
    """Base class for review-store failures."""


class NotFoundError(ReviewError):
    """Unknown run or file."""


class DecisionValidationError(ReviewError):
    """A review decision violates its own rules (EDIT without content, ...)."""


class ConflictError(ReviewError):
    """The operation conflicts with run state (decision after apply, ...)."""


class GateError(ReviewError):
    """Apply was requested while flagged files are still undecided."""

    def __init__(self, message: str, undecided: list[str] | None = None):
        super().__init__(message)
        self.undecided = undecided or []


class ConfigError(CodemendError):
    """A run configuration failed validation; message lists every problem."""
