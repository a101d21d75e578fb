"""
Routing a query and locating its subcontext
===========================================

The first stage routes a query to one case via classifier logits; the
second embeds the case's sentences, scores them against the query by
cosine similarity and extracts the neighborhood of the best match.
"""

from pathlib import Path

from subcontext.backends_local import LsaEmbedder
from subcontext.corpus import ingest
from subcontext.read import build_index, locate, similarity_array, subcontext
from subcontext.seek import select_case, train_baseline_classifier

HERE = Path(__file__).parent

index = ingest(HERE / "corpus")
classifier = train_baseline_classifier(index.corpus, index.sentence_sets)

query = "case involving an unjustified amount of paddy in a godown"
logits = classifier.classify(query)
case_id = select_case(logits, index.corpus)
print("query :", query)
print("logits:", [f"{c}={v:.4f}" for c, v in zip(index.corpus.case_ids, logits)])
print("routed to:", case_id)

# Embed the routed case's sentences once; the index is reused per turn.
sset = index.sentence_set(case_id)
embedder = LsaEmbedder(sset)
sentence_index = build_index(sset, embedder)
print(f"\nsentence index: {sset.m + 1} vectors of dimension {embedder.dimension}")

# Score the query against every sentence and find the best match.
similarities = similarity_array(query, sentence_index, embedder)
j_star = locate(similarities)
print("similarities:", [round(float(x), 3) for x in similarities])
print(f"best match j* = {j_star}: {sset.sentences[j_star]}")

# The subcontext is the clipped window around j*; it seeds generation.
window = subcontext(sset, j_star, window=2)
print(f"\nsubcontext sentences {window.sentence_indices}:")
for j, sentence in zip(window.sentence_indices, window.sentences):
    marker = "*" if j == j_star else " "
    print(f" {marker} S_{j}: {sentence}")
