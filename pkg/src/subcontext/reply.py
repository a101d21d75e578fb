"""Reply selection: generate candidates, score them against the history.

The history cache keeps the last R utterances of the conversation. Each
generated candidate is scored by its average cosine similarity to every
cached utterance, and the highest-scoring candidate becomes the reply.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

import numpy as np

from .errors import GenerationError, InvalidArgumentError, InvalidStateError, PipelineError
from .textnum import cosine_similarity


@runtime_checkable
class GeneratorBackend(Protocol):
    """Produces p candidate continuations from a seed text.

    Deterministic implementations must reproduce their output for a fixed
    configured seed.
    """

    name: str

    def generate(self, seed_text: str, p: int) -> list[str]: ...


@dataclass(frozen=True)
class Utterance:
    """One conversation turn entry: text, who said it, and its embedding."""

    text: str
    speaker: str  # "human" | "agent"
    embedding: np.ndarray
    turn_index: int


class HistoryCache:
    """FIFO store of the last R utterances.

    Pushing beyond capacity evicts the oldest entry; turn indices must be
    strictly increasing so replays are unambiguous.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise InvalidArgumentError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._entries: list[Utterance] = []

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def entries(self) -> tuple[Utterance, ...]:
        return tuple(self._entries)

    def texts(self) -> list[str]:
        return [e.text for e in self._entries]

    def push(self, utterance: Utterance) -> None:
        if self._entries and utterance.turn_index <= self._entries[-1].turn_index:
            raise InvalidArgumentError(
                f"turn_index {utterance.turn_index} not after "
                f"{self._entries[-1].turn_index}"
            )
        self._entries.append(utterance)
        if len(self._entries) > self.capacity:
            del self._entries[0]

    def copy(self) -> "HistoryCache":
        """Shallow copy; entries are immutable so sharing them is safe."""
        dup = HistoryCache(self.capacity)
        dup._entries = list(self._entries)
        return dup


def history_push(history: HistoryCache, utterance: Utterance) -> HistoryCache:
    """Functional push: returns a new cache, leaving the original untouched."""
    dup = history.copy()
    dup.push(utterance)
    return dup


@dataclass
class CandidateSet:
    """Generated candidates with their embeddings and (once scored) rhos."""

    texts: list[str]
    embeddings: list[np.ndarray]
    rho: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if len(self.texts) != len(self.embeddings):
            raise InvalidArgumentError("texts and embeddings must align")
        if not self.texts:
            raise InvalidArgumentError("candidate set must be non-empty")

    @property
    def has_duplicates(self) -> bool:
        return len(set(self.texts)) != len(self.texts)


def generate_candidates(backend: GeneratorBackend, seed_text: str, p: int) -> list[str]:
    """Exactly p trimmed, non-empty candidates from the backend."""
    if p < 1:
        raise InvalidArgumentError(f"p must be >= 1, got {p}")
    if not seed_text or not seed_text.strip():
        raise InvalidArgumentError("seed text must be non-empty")
    try:
        raw = backend.generate(seed_text, p)
    except PipelineError:
        raise
    except Exception as exc:
        raise GenerationError(
            f"backend {backend.name!r} failed: {exc}", backend=backend.name
        ) from exc
    candidates = [c.strip() for c in raw]
    if len(candidates) != p:
        raise GenerationError(
            f"backend {backend.name!r} returned {len(candidates)} candidates, wanted {p}",
            backend=backend.name,
        )
    if any(not c for c in candidates):
        raise GenerationError(
            f"backend {backend.name!r} returned an empty candidate",
            backend=backend.name,
        )
    return candidates


def avg_historical_correlation(history: HistoryCache, candidate_embedding) -> float:
    """Mean cosine similarity between a candidate and every cached utterance.

    The divisor is the actual number of cached entries, not the nominal
    capacity, so early-conversation scores stay on the same scale.
    """
    if len(history) == 0:
        raise InvalidStateError("history is empty; push the opening query first")
    total = 0.0
    for entry in history.entries:
        total += cosine_similarity(entry.embedding, candidate_embedding)
    return total / len(history)


def rerank(candidates: CandidateSet, history: HistoryCache) -> tuple[int, np.ndarray]:
    """Score every candidate and pick the argmax (ties -> lowest index).

    Returns (selected index, full rho vector) and stores the rho vector on
    the candidate set for transparency.
    """
    rho = np.array(
        [avg_historical_correlation(history, emb) for emb in candidates.embeddings]
    )
    candidates.rho = rho
    return int(np.argmax(rho)), rho
