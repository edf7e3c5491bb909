"""Exception types shared across the package.

Everything raised deliberately by kgcollab derives from KgCollabError so
callers can catch one base class at the boundary.
"""

from __future__ import annotations


class KgCollabError(Exception):
    """Base class for all errors raised by this package."""


# --- schema ---------------------------------------------------------------


class SchemaFormatError(KgCollabError):
    """Schema document is structurally invalid (bad version, wrong keys)."""


class DuplicateType(KgCollabError):
    """A type list contains the same name twice."""


class EmptySchema(KgCollabError):
    """The type list relevant to the task is empty."""


class UnknownTask(KgCollabError):
    """Task name is not one of the supported extraction tasks."""


class TaskMismatch(KgCollabError):
    """An item or result was checked against a schema for a different task."""


# --- records --------------------------------------------------------------


class MixedItems(KgCollabError):
    """An item list mixes item kinds or does not match the stated task."""


# --- prompt ---------------------------------------------------------------


class DimensionError(KgCollabError):
    """Embedding dimensions disagree."""


class TemplateError(KgCollabError):
    """A prompt template references or leaves an unknown placeholder."""


# --- backend --------------------------------------------------------------


class BackendError(KgCollabError):
    """Completion request failed. ``attempts`` counts requests actually sent."""

    def __init__(self, message: str, attempts: int = 1):
        super().__init__(message)
        self.attempts = attempts


class AuthError(BackendError):
    """Authentication failed. Never retried."""


class RateLimited(BackendError):
    """The endpoint kept rate-limiting after all retries."""


class Timeout(BackendError):
    """The endpoint kept timing out after all retries."""


class MalformedResponse(BackendError):
    """The endpoint answered with an undecodable payload after all retries."""


class MissingScript(BackendError):
    """A scripted backend has no response for the requested key."""


# --- network --------------------------------------------------------------


class UnknownEndpoint(KgCollabError):
    """An edge or transfer references an agent id that is not in the network."""


class DuplicateAgentId(KgCollabError):
    """Two agents share one id."""


class SelfLoop(KgCollabError):
    """An edge connects an agent to itself."""


class IncompleteRound(KgCollabError):
    """A replica expected from a connected sender is missing."""


class EmptyInput(KgCollabError):
    """The input text is empty."""


# --- evaluation -----------------------------------------------------------


class DatasetParseError(KgCollabError):
    """A dataset line could not be parsed. ``line_number`` is 1-based."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class EmptyDataset(KgCollabError):
    """The dataset contains no records."""


class BenchmarkError(KgCollabError):
    """A benchmark run failed on a specific record."""


# --- configuration --------------------------------------------------------


class ConfigError(KgCollabError):
    """A run or team configuration is invalid."""
