"""Exception types shared across the pipeline.

Everything derives from PipelineError so callers can catch the whole family;
the argument/state errors also subclass the matching builtins so generic
callers (and pytest.raises(ValueError)) keep working.
"""

from __future__ import annotations


class PipelineError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(PipelineError, ValueError):
    """A caller-supplied value violates an operation's preconditions."""


class InvalidStateError(PipelineError, RuntimeError):
    """An operation was invoked on an object in the wrong state."""


class EmptyCaseError(InvalidArgumentError):
    """A case body produced zero usable sentences."""


class TooShortError(InvalidArgumentError):
    """A sentence set is too short for the requested operation (M == 0)."""


class VocabularyTooSmallError(InvalidArgumentError):
    """A case's vocabulary is too small to train a generator."""


class EmptyCorpusError(InvalidArgumentError):
    """Ingestion found no usable case files."""


class ConvergenceError(PipelineError):
    """An iterative solver failed to converge within its iteration budget."""

    def __init__(self, message: str, iterations: int):
        super().__init__(message)
        self.iterations = iterations


class ParseError(PipelineError):
    """A persisted index file is malformed. Carries the 1-based line number."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class BackendError(PipelineError):
    """A model backend (local or remote) failed. Carries the cause string."""

    def __init__(self, message: str, backend: str = "", cause: str = ""):
        super().__init__(message)
        self.backend = backend
        self.cause = cause


class GenerationError(BackendError):
    """A generator backend returned unusable candidates."""


class IndexBuildError(BackendError):
    """Embedding a case's sentences failed. Names the offending sentence."""

    def __init__(self, message: str, sentence_index: int | None = None, backend: str = ""):
        super().__init__(message, backend=backend)
        self.sentence_index = sentence_index


class CompatibilityError(PipelineError):
    """An embedding index and a backend disagree on name or dimension."""
