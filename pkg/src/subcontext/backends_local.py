"""Deterministic offline backends: latent-semantic embedder, n-gram generator.

These stand in for the hosted encoder and generator services so the whole
pipeline runs reproducibly on a desk machine. They implement the same
interfaces as the remote clients and are seeded end to end.
"""

from __future__ import annotations

import numpy as np

from .corpus import SentenceSet
from .errors import InvalidArgumentError, VocabularyTooSmallError
from .textnum import LsaModel, build_lsa, lsa_project, tokenize

DEFAULT_EMBEDDER_RANK_CAP = 24
DEFAULT_MAX_TOKENS = 40
DEFAULT_ORDER = 2


class LsaEmbedder:
    """Embeds text via latent-semantic projection over one case's sentences.

    Trained on the case's sentence set (each sentence is one document).
    Out-of-vocabulary queries project to the zero vector, which downstream
    cosine scoring treats as similarity 0 everywhere.
    """

    name = "lsa-embedder"

    def __init__(self, sentence_set: SentenceSet, rank: int | None = None):
        docs = [tokenize(s) for s in sentence_set.sentences]
        vocab_size = len({t for d in docs for t in d})
        limit = min(len(docs), vocab_size)
        if rank is None:
            rank = min(limit, DEFAULT_EMBEDDER_RANK_CAP)
        if not 1 <= rank <= limit:
            raise InvalidArgumentError(f"rank must be in [1, {limit}], got {rank}")
        self.case_id: str | None = sentence_set.case_id
        self._model: LsaModel = build_lsa(docs, rank)

    @property
    def dimension(self) -> int:
        return self._model.rank

    def embed(self, text: str) -> np.ndarray:
        return lsa_project(self._model, tokenize(text))

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        return [self.embed(t) for t in texts]


class NgramGenerator:
    """Order-n Markov babbler trained on one case's token stream.

    Transitions are counted over the concatenated sentence stream; an
    unseen state falls back to the unigram distribution. Candidate l of a
    call draws from its own RNG stream derived from (seed, l), so the
    candidate list for p=1 is a prefix of the list for any larger p.
    """

    name = "ngram-generator"

    def __init__(
        self,
        sentence_set: SentenceSet,
        seed: int,
        max_tokens: int = DEFAULT_MAX_TOKENS,
        order: int = DEFAULT_ORDER,
    ):
        if order < 1:
            raise InvalidArgumentError(f"order must be >= 1, got {order}")
        if max_tokens < 1:
            raise InvalidArgumentError(f"max_tokens must be >= 1, got {max_tokens}")
        stream: list[str] = []
        for sentence in sentence_set.sentences:
            stream.extend(tokenize(sentence))
        vocabulary = sorted(set(stream))
        if len(vocabulary) < 3:
            raise VocabularyTooSmallError(
                f"case {sentence_set.case_id!r} has {len(vocabulary)} distinct "
                "tokens; the generator needs at least 3"
            )
        self.case_id = sentence_set.case_id
        self.seed = seed
        self.max_tokens = max_tokens
        self.order = order
        self.vocabulary = vocabulary
        # (token_{i-order} .. token_{i-1}) -> successor counts, first-seen order.
        self._table: dict[tuple[str, ...], dict[str, int]] = {}
        for i in range(order, len(stream)):
            state = tuple(stream[i - order : i])
            successors = self._table.setdefault(state, {})
            successors[stream[i]] = successors.get(stream[i], 0) + 1
        self._unigram: dict[str, int] = {}
        for tok in stream:
            self._unigram[tok] = self._unigram.get(tok, 0) + 1

    def transition_distribution(self, state: tuple[str, ...]) -> dict[str, float]:
        """Successor probabilities for a state (unigram fallback if unseen)."""
        counts = self._table.get(tuple(state), self._unigram)
        total = sum(counts.values())
        return {tok: c / total for tok, c in counts.items()}

    @staticmethod
    def _sample(counts: dict[str, int], rng: np.random.Generator) -> str:
        total = sum(counts.values())
        mark = rng.random() * total
        acc = 0.0
        for tok, count in counts.items():
            acc += count
            if mark < acc:
                return tok
        return next(reversed(counts))

    def _walk(self, start: tuple[str, ...], rng: np.random.Generator) -> list[str]:
        state = start
        out: list[str] = []
        for _ in range(self.max_tokens):
            counts = self._table.get(state) or self._unigram
            tok = self._sample(counts, rng)
            out.append(tok)
            state = (*state, tok)[-self.order :]
        return out

    def generate(self, seed_text: str, p: int) -> list[str]:
        """p continuations of the seed text's final state, one RNG stream each."""
        if p < 1:
            raise InvalidArgumentError(f"p must be >= 1, got {p}")
        seed_tokens = tokenize(seed_text)
        start = tuple(seed_tokens[-self.order :])
        candidates = []
        for l in range(1, p + 1):
            rng = np.random.default_rng([self.seed, l])
            candidates.append(" ".join(self._walk(start, rng)))
        return candidates


def train_ngram(
    sentence_set: SentenceSet,
    seed: int,
    max_tokens: int = DEFAULT_MAX_TOKENS,
    order: int = DEFAULT_ORDER,
) -> NgramGenerator:
    """Fit the deterministic generator on a case's sentences."""
    return NgramGenerator(sentence_set, seed=seed, max_tokens=max_tokens, order=order)
