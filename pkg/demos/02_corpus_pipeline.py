"""
From raw case files to a persisted index
========================================

Ingestion splits each case into ordered sentences, derives the
consecutive-sentence entailment pairs, and round-trips everything
through the newline-JSON index format.
"""

import tempfile
from pathlib import Path

from subcontext.corpus import (
    build_entailment_pairs,
    ingest,
    load_index,
    save_entailment_pairs,
    save_index,
    split_sentences,
)

HERE = Path(__file__).parent

# Sentence segmentation is rule-based and deterministic; abbreviations
# such as "Dr." or "No." do not end a sentence.
sample = "He saw Dr. Smith at the godown. The stock was weighed. No. 45 was seized."
print("segmented sentences:")
for j, sentence in enumerate(split_sentences(sample).sentences):
    print(f"  S_{j}: {sentence}")

# Ingest the bundled three-case corpus.
index = ingest(HERE / "corpus")
print("\ncases:", index.corpus.case_ids)
for case_id, sset in index.sentence_sets.items():
    print(f"  {case_id}: {sset.m + 1} sentences (M = {sset.m})")

# Every case with M+1 sentences yields exactly M entailment pairs.
sset = index.sentence_set("paddy_godown")
pairs = build_entailment_pairs(sset)
print(f"\n{sset.case_id}: {len(pairs)} entailment pairs, first one:")
print("  premise   :", sset.sentences[pairs[0].premise_index])
print("  hypothesis:", sset.sentences[pairs[0].hypothesis_index])

# Persist and reload: the round trip is lossless.
with tempfile.TemporaryDirectory() as tmp:
    index_path = Path(tmp) / "corpus.ndjson"
    save_index(index.corpus, index.sentence_sets, index_path)
    reloaded = load_index(index_path)
    print("\nround-trip lossless:", reloaded.corpus == index.corpus)

    pairs_path = Path(tmp) / "pairs.ndjson"
    count = save_entailment_pairs(index.sentence_sets, pairs_path)
    print("entailment pairs exported for encoder fine-tuning:", count)
