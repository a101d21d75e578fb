"""Case routing: map an initial query to one case id via classifier logits.

A classifier returns one logit per corpus case (aligned with corpus
ordering); routing takes the argmax. The local baseline scores a query by
cosine similarity between its latent-semantic projection and each case
body's projection.
"""

from __future__ import annotations

import numpy as np

from .corpus import Corpus, CorpusIndex, SentenceSet
from .errors import InvalidArgumentError
from .textnum import LsaModel, as_vector, build_lsa, cosine_similarity, lsa_project, tokenize

# Baseline logits are cosine similarities; below this argmax value a route
# is still produced but flagged as low-confidence.
DEFAULT_LOW_CONFIDENCE_THRESHOLD = 0.05


def select_case(logits, corpus: Corpus) -> str:
    """Case id at the largest logit; ties resolve to the lowest index."""
    vec = as_vector(logits, "logits")
    if vec.shape[0] != corpus.k:
        raise InvalidArgumentError(
            f"expected {corpus.k} logits for this corpus, got {vec.shape[0]}"
        )
    return corpus.cases[int(np.argmax(vec))].case_id


class LsaCaseClassifier:
    """K-way case scorer built from latent-semantic projections of case bodies.

    classify() returns per-case cosine similarities as the logit vector;
    only the argmax is consumed downstream so no calibration is applied.
    """

    name = "lsa-classifier"

    def __init__(self, corpus: Corpus, model: LsaModel):
        self._corpus = corpus
        self._model = model
        self.k = corpus.k

    def classify(self, query: str) -> np.ndarray:
        projected = lsa_project(self._model, tokenize(query))
        return np.array(
            [cosine_similarity(projected, doc) for doc in self._model.doc_vectors]
        )


def train_baseline_classifier(
    corpus: Corpus,
    sentence_sets: dict[str, SentenceSet] | CorpusIndex | None = None,
    k_lsa: int | None = None,
) -> LsaCaseClassifier:
    """Fit the TF-IDF + truncated-SVD baseline over the case bodies.

    sentence_sets (when given) is only used to check corpus/index alignment;
    training consumes the full bodies. k_lsa defaults to full usable rank,
    min(K, vocabulary size).
    """
    if corpus.k < 1:
        raise InvalidArgumentError("corpus must contain at least one case")
    if isinstance(sentence_sets, CorpusIndex):
        sentence_sets = sentence_sets.sentence_sets
    if sentence_sets is not None:
        missing = [c.case_id for c in corpus.cases if c.case_id not in sentence_sets]
        if missing:
            raise InvalidArgumentError(f"sentence sets missing for cases: {missing}")
    docs = [tokenize(case.body) for case in corpus.cases]
    vocab_size = len({t for d in docs for t in d})
    limit = min(corpus.k, vocab_size)
    if k_lsa is None:
        k_lsa = limit
    if not 1 <= k_lsa <= limit:
        raise InvalidArgumentError(f"k_lsa must be in [1, {limit}], got {k_lsa}")
    model = build_lsa(docs, k_lsa)
    return LsaCaseClassifier(corpus, model)
