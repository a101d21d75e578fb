"""
Vector math building blocks
===========================

Cosine similarity, row softmax, the attention product, TF-IDF and the
truncated SVD that powers the latent-semantic embedder.
"""

import numpy as np

from subcontext.textnum import (
    attention,
    build_tfidf,
    cosine_similarity,
    softmax_rows,
    tokenize,
    truncated_svd,
)

# Cosine similarity measures the angle between two vectors, in [-1, 1].
print("cos([1,2,3],[4,5,6]) =", cosine_similarity([1, 2, 3], [4, 5, 6]))
print("orthogonal           =", cosine_similarity([1, 0], [0, 1]))
print("zero vector (neutral)=", cosine_similarity([0, 0], [1, 1]))

# Row softmax turns scores into weights; large scores are safe.
print("\nsoftmax([[0, ln 3]])    =", softmax_rows([[0.0, np.log(3.0)]]))
print("softmax([[1000]*3])     =", softmax_rows([[1000.0, 1000.0, 1000.0]]))

# The attention product mixes the value rows by query/key agreement.
q = [[1.0, 0.0]]
k = [[1.0, 0.0], [0.0, 1.0]]
v = [[2.0, 0.0], [0.0, 2.0]]
print("\nattention(q, k, v) =", attention(q, k, v))

# TF-IDF: a token appearing in every document carries no information.
docs = [tokenize("rice paddy godown rice"), tokenize("cashewnut export rice")]
model = build_tfidf(docs)
print("\nvocabulary:", model.vocabulary)
print("doc matrix:\n", model.doc_matrix.round(4))

# Truncated SVD keeps the best rank-k approximation (Eckart-Young):
# the squared reconstruction error equals the discarded spectrum.
matrix = np.diag([3.0, 2.0, 1.0])
factors = truncated_svd(matrix, k=2)
error2 = np.sum((matrix - factors.reconstruct()) ** 2)
print("\nsingular values kept:", factors.singular)
print("reconstruction error^2:", round(float(error2), 12), "(= 1^2 discarded)")
