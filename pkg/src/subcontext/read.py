"""Subcontext retrieval: locate the case sentence most similar to a query.

The case's sentences are embedded once into an index; each incoming query
is embedded, scored against every sentence by cosine similarity, and the
neighborhood around the best-matching sentence becomes the generation seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from .corpus import SentenceSet
from .errors import CompatibilityError, IndexBuildError, InvalidArgumentError, PipelineError
from .textnum import cosine_similarity

DEFAULT_WINDOW = 2


@runtime_checkable
class EmbeddingBackend(Protocol):
    """Text-to-vector encoder bound to one case.

    Implementations must be deterministic per (name, case) and emit a fixed
    dimension for every input.
    """

    name: str
    case_id: str | None

    @property
    def dimension(self) -> int: ...

    def embed(self, text: str) -> np.ndarray: ...

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]: ...


@dataclass
class SentenceEmbeddingIndex:
    """Per-case sentence vectors, row-aligned with the sentence set."""

    case_id: str
    vectors: np.ndarray
    backend_name: str
    dimension: int

    def __post_init__(self):
        if self.vectors.ndim != 2 or self.vectors.shape[1] != self.dimension:
            raise InvalidArgumentError("vectors must be (M+1) x dimension")


@dataclass
class Subcontext:
    """Contiguous sentence window centered on the best-matching sentence."""

    center: int
    window: int
    sentence_indices: list[int]
    sentences: list[str]

    @property
    def text(self) -> str:
        return " ".join(self.sentences)


def build_index(sentence_set: SentenceSet, backend: EmbeddingBackend) -> SentenceEmbeddingIndex:
    """Embed every sentence of a case, in order.

    A failure while embedding sentence j surfaces as IndexBuildError naming j.
    """
    vectors: list[np.ndarray] = []
    for j, sentence in enumerate(sentence_set.sentences):
        try:
            vec = np.asarray(backend.embed(sentence), dtype=np.float64)
        except PipelineError as exc:
            raise IndexBuildError(
                f"backend {backend.name!r} failed on sentence {j}: {exc}",
                sentence_index=j,
                backend=backend.name,
            ) from exc
        if vec.ndim != 1 or not np.all(np.isfinite(vec)):
            raise IndexBuildError(
                f"backend {backend.name!r} returned an invalid vector for sentence {j}",
                sentence_index=j,
                backend=backend.name,
            )
        vectors.append(vec)
    dims = {v.shape[0] for v in vectors}
    if len(dims) != 1:
        raise IndexBuildError(
            f"backend {backend.name!r} returned mixed dimensions {sorted(dims)}",
            backend=backend.name,
        )
    return SentenceEmbeddingIndex(
        case_id=sentence_set.case_id,
        vectors=np.vstack(vectors),
        backend_name=backend.name,
        dimension=dims.pop(),
    )


def similarity_array(
    query: str, index: SentenceEmbeddingIndex, backend: EmbeddingBackend
) -> np.ndarray:
    """Cosine similarity of the query against every indexed sentence."""
    if backend.name != index.backend_name:
        raise CompatibilityError(
            f"index built with backend {index.backend_name!r}, "
            f"queried with {backend.name!r}"
        )
    query_vec = backend.embed(query)
    if query_vec.shape[0] != index.dimension:
        raise CompatibilityError(
            f"backend emits dimension {query_vec.shape[0]}, "
            f"index holds dimension {index.dimension}"
        )
    return np.array([cosine_similarity(query_vec, row) for row in index.vectors])


def locate(similarities) -> int:
    """Index of the maximum similarity; ties resolve to the lowest index."""
    values = np.asarray(similarities, dtype=np.float64)
    if values.ndim != 1 or values.shape[0] == 0:
        raise InvalidArgumentError("similarity array must be non-empty and 1-D")
    return int(np.argmax(values))


def subcontext(sentence_set: SentenceSet, j_star: int, window: int = DEFAULT_WINDOW) -> Subcontext:
    """The sentences within `window` of sentence j_star, clipped to the case."""
    if not 0 <= j_star <= sentence_set.m:
        raise InvalidArgumentError(
            f"j_star must be in [0, {sentence_set.m}], got {j_star}"
        )
    if window < 0:
        raise InvalidArgumentError(f"window must be >= 0, got {window}")
    start = max(0, j_star - window)
    end = min(sentence_set.m, j_star + window)
    indices = list(range(start, end + 1))
    return Subcontext(
        center=j_star,
        window=window,
        sentence_indices=indices,
        sentences=[sentence_set.sentences[i] for i in indices],
    )
