"""Dense numeric kernels shared by every pipeline stage.

Cosine similarity, row-wise softmax, the attention product, TF-IDF
construction and a truncated SVD. All functions are pure: they validate
their inputs, never mutate them, and reject non-finite values at the
boundary so NaN/Inf cannot propagate through the pipeline.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, InvalidArgumentError

_TOKEN_RE = re.compile(r"[a-z0-9]+")

# Default solver knobs for truncated_svd.
DEFAULT_SVD_TOL = 1e-10
DEFAULT_SVD_MAX_ITER = 1000


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric runs, dropping empties."""
    return _TOKEN_RE.findall(text.lower())


def as_vector(values, name: str = "vector") -> np.ndarray:
    """Coerce to a finite 1-D float64 array or raise InvalidArgumentError."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidArgumentError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains non-finite entries")
    return arr


def as_matrix(values, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D float64 array or raise InvalidArgumentError."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidArgumentError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size == 0:
        raise InvalidArgumentError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains non-finite entries")
    return arr


def cosine_similarity(a, b) -> float:
    """Cosine similarity in [-1, 1]; exactly 0.0 when either norm is zero.

    Computed as dot(a,b) / sqrt(dot(a,a) * dot(b,b)). With IEEE-754
    correctly-rounded * and sqrt, sqrt(x*x) == x exactly, so bit-identical
    vectors score exactly 1.0 (self-similarity is exact, not approximate).
    """
    va = as_vector(a, "a")
    vb = as_vector(b, "b")
    if va.shape[0] != vb.shape[0]:
        raise InvalidArgumentError(
            f"dimension mismatch: {va.shape[0]} vs {vb.shape[0]}"
        )
    if va.shape[0] == 0:
        raise InvalidArgumentError("vectors must be non-empty")
    na2 = float(np.dot(va, va))
    nb2 = float(np.dot(vb, vb))
    if na2 == 0.0 or nb2 == 0.0:
        return 0.0
    value = float(np.dot(va, vb)) / math.sqrt(na2 * nb2)
    return min(1.0, max(-1.0, value))


def softmax_rows(m) -> np.ndarray:
    """Row-wise softmax with max-subtraction so large entries cannot overflow."""
    mat = as_matrix(m, "m")
    shifted = mat - mat.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def attention(q, k, v, scale: bool = False) -> np.ndarray:
    """softmax(q kᵀ) v. Each output row is a convex combination of v's rows.

    The raw product is used by default; scale=True divides scores by
    sqrt(key dimension) for callers who want the conventional variant.
    """
    qm = as_matrix(q, "q")
    km = as_matrix(k, "k")
    vm = as_matrix(v, "v")
    if qm.shape[1] != km.shape[1]:
        raise InvalidArgumentError(
            f"q cols ({qm.shape[1]}) must equal k cols ({km.shape[1]})"
        )
    if km.shape[0] != vm.shape[0]:
        raise InvalidArgumentError(
            f"k rows ({km.shape[0]}) must equal v rows ({vm.shape[0]})"
        )
    scores = qm @ km.T
    if scale:
        scores = scores / math.sqrt(km.shape[1])
    return softmax_rows(scores) @ vm


@dataclass
class TfidfModel:
    """TF-IDF weighting over a fixed corpus of token lists.

    vocabulary maps token -> column index (sorted order, deterministic);
    idf[i] = ln(N / df_i); doc_matrix rows are per-document tf*idf vectors
    with tf = raw count / document length.
    """

    vocabulary: dict[str, int]
    idf: np.ndarray
    doc_matrix: np.ndarray

    def vectorize(self, tokens: list[str]) -> np.ndarray:
        """TF-IDF vector for a token list; unknown tokens are ignored.

        Uses the same arithmetic as build_tfidf, so feeding back a training
        document's tokens reproduces its doc_matrix row bit-for-bit.
        """
        return _tfidf_row(tokens, self.vocabulary, self.idf)


def _tfidf_row(tokens: list[str], vocabulary: dict[str, int], idf: np.ndarray) -> np.ndarray:
    row = np.zeros(len(vocabulary), dtype=np.float64)
    if not tokens:
        return row
    for tok in tokens:
        col = vocabulary.get(tok)
        if col is not None:
            row[col] += 1.0
    row /= float(len(tokens))
    row *= idf
    return row


def build_tfidf(docs: list[list[str]]) -> TfidfModel:
    """Build a TF-IDF model from tokenized documents.

    tf(i, j) = count of token i in doc j / length of doc j;
    idf(i) = ln(N / df_i) where df_i counts documents containing token i.
    A token present in every document therefore contributes 0 everywhere.
    """
    if not docs:
        raise InvalidArgumentError("corpus must contain at least one document")
    if not any(docs):
        raise InvalidArgumentError("corpus must contain at least one token")
    vocabulary = {tok: i for i, tok in enumerate(sorted({t for d in docs for t in d}))}
    df = np.zeros(len(vocabulary), dtype=np.float64)
    for doc in docs:
        for tok in set(doc):
            df[vocabulary[tok]] += 1.0
    idf = np.log(len(docs) / df)
    matrix = np.vstack([_tfidf_row(doc, vocabulary, idf) for doc in docs])
    return TfidfModel(vocabulary=vocabulary, idf=idf, doc_matrix=matrix)


@dataclass
class SvdFactors:
    """Rank-k factors: left (m×k), singular (k, non-increasing), right (n×k)."""

    k: int
    left: np.ndarray
    singular: np.ndarray
    right: np.ndarray

    def reconstruct(self) -> np.ndarray:
        """The rank-k approximation left · diag(singular) · rightᵀ."""
        return (self.left * self.singular) @ self.right.T


def _orthonormal_complement(basis: np.ndarray, index: int) -> np.ndarray:
    """A deterministic unit vector orthogonal to the first `index` columns."""
    n = basis.shape[0]
    for i in range(n):
        cand = np.zeros(n)
        cand[i] = 1.0
        cand -= basis[:, :index] @ (basis[:, :index].T @ cand)
        norm = np.linalg.norm(cand)
        if norm > 1e-8:
            return cand / norm
    raise InvalidArgumentError("no orthogonal direction left")


# Extra subspace columns iterated beyond k; clusters that straddle the
# requested rank stay inside the block and resolve in the Ritz step.
_SVD_OVERSAMPLE = 4


def truncated_svd(
    m,
    k: int,
    tol: float = DEFAULT_SVD_TOL,
    max_iter: int = DEFAULT_SVD_MAX_ITER,
) -> SvdFactors:
    """Top-k singular triplets via block orthogonal iteration.

    An oversampled subspace is driven by repeated application of AᵀA with a
    Rayleigh-Ritz step per sweep; iteration stops when every one of the k
    leading Ritz pairs has residual ||AᵀA z - θ z|| <= tol·θ. The Ritz step
    solves the small projected eigenproblem exactly, so clustered singular
    values inside the block do not stall the iteration.
    """
    mat = as_matrix(m, "m")
    rows, cols = mat.shape
    if not 1 <= k <= min(rows, cols):
        raise InvalidArgumentError(f"k must be in [1, {min(rows, cols)}], got {k}")
    if not tol > 0:
        raise InvalidArgumentError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise InvalidArgumentError(f"max_iter must be >= 1, got {max_iter}")

    # Scale below which a singular value is treated as exactly zero.
    zero_floor = np.finfo(np.float64).eps * max(rows, cols) * (np.abs(mat).max() + 1.0)
    block = min(k + _SVD_OVERSAMPLE, min(rows, cols))
    rng = np.random.default_rng(0x5EED)
    basis, _ = np.linalg.qr(rng.standard_normal((cols, block)))

    theta = np.zeros(block)
    ritz = basis
    converged = False
    for _ in range(max_iter):
        image = mat.T @ (mat @ basis)
        projected = basis.T @ image
        eigvals, eigvecs = np.linalg.eigh((projected + projected.T) / 2.0)
        order = np.argsort(eigvals)[::-1]
        theta = eigvals[order]
        ritz = basis @ eigvecs[:, order]
        residuals = image @ eigvecs[:, order[:k]] - ritz[:, :k] * theta[:k]
        # Residuals are computed through AᵀA, so their floor is rounding
        # noise relative to the dominant eigenvalue, not each pair's own.
        limit = tol * max(theta[0], zero_floor**2)
        if np.all(np.linalg.norm(residuals, axis=0) <= limit):
            converged = True
            break
        basis, _ = np.linalg.qr(image)
    if not converged:
        raise ConvergenceError(
            f"subspace did not converge in {max_iter} iterations", iterations=max_iter
        )

    singular = np.sqrt(np.maximum(theta[:k], 0.0))
    right = ritz[:, :k].copy()
    left = np.zeros((rows, k))
    for i in range(k):
        if singular[i] <= zero_floor:
            singular[i] = 0.0
            right[:, i] = _orthonormal_complement(right, i)
            left[:, i] = _orthonormal_complement(left, i)
        else:
            u = mat @ right[:, i] / singular[i]
            u -= left[:, :i] @ (left[:, :i].T @ u)
            left[:, i] = u / np.linalg.norm(u)
    return SvdFactors(k=k, left=left, singular=singular, right=right)


@dataclass
class LsaModel:
    """TF-IDF model plus its rank-k factorization, used for projection.

    doc_vectors holds the k-dimensional representation of each training
    document, computed through the same project() path queries go through
    so a query repeating a document's tokens lands exactly on its vector.
    """

    tfidf: TfidfModel
    factors: SvdFactors
    doc_vectors: np.ndarray

    @property
    def rank(self) -> int:
        return self.factors.k

    def project(self, vec: np.ndarray) -> np.ndarray:
        """Project a vocabulary-space vector onto the right singular basis."""
        return vec @ self.factors.right


def build_lsa(
    docs: list[list[str]],
    k: int,
    tol: float = DEFAULT_SVD_TOL,
    max_iter: int = DEFAULT_SVD_MAX_ITER,
) -> LsaModel:
    """TF-IDF + truncated SVD over tokenized documents."""
    tfidf = build_tfidf(docs)
    factors = truncated_svd(tfidf.doc_matrix, k, tol=tol, max_iter=max_iter)
    doc_vectors = np.vstack([row @ factors.right for row in tfidf.doc_matrix])
    return LsaModel(tfidf=tfidf, factors=factors, doc_vectors=doc_vectors)


def lsa_project(model: LsaModel, tokens: list[str]) -> np.ndarray:
    """k-dimensional projection of a query's TF-IDF vector.

    Unknown tokens are ignored; an all-unknown query projects to the zero
    vector (downstream cosine treats that as similarity 0 everywhere).
    """
    return model.project(model.tfidf.vectorize(tokens))
