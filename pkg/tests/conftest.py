"""Shared fixtures: toy corpora and a loaded corpus index."""

from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from subcontext.corpus import CorpusIndex, ingest

GOLDEN_CORPUS_DIR = Path(__file__).parent / "data" / "golden_corpus"
GOLDEN_TRANSCRIPT = Path(__file__).parent / "golden" / "transcript.json"

# Three toy cases with deliberately disjoint vocabulary, used by tests that
# need predictable routing without caring about the full golden corpus.
TOY_CASES = {
    "grain_hoarding": (
        "Grain hoarding appeal.\n"
        "The petitioner stored paddy and rice inside a private godown without a permit. "
        "Inspectors weighed the paddy stock and recorded the godown ledger. "
        "The court held that hoarding rice for profit violated the control order. "
        "The appeal against the seizure of the godown stock was dismissed."
    ),
    "nut_export": (
        "Nut export dispute.\n"
        "The exporter shipped cashewnut consignments declared as foodstuff. "
        "Customs argued the cashewnut cargo needed an export licence. "
        "The tribunal examined whether roasted cashewnut remains a foodstuff. "
        "The export licence condition was upheld for every consignment."
    ),
    "land_compensation": (
        "Land compensation reference.\n"
        "The collector acquired farmland for a public irrigation canal. "
        "The owners claimed higher compensation plus solatium for the farmland. "
        "The reference court fixed compensation using nearby sale deeds. "
        "Interest on the enhanced compensation accrued from the acquisition date."
    ),
}


def write_corpus(directory: Path, cases: dict[str, str]) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    for case_id, body in cases.items():
        (directory / f"{case_id}.txt").write_text(body, encoding="utf-8")
    return directory


@pytest.fixture()
def toy_corpus_dir(tmp_path) -> Path:
    return write_corpus(tmp_path / "corpus", TOY_CASES)


@pytest.fixture()
def toy_index(toy_corpus_dir) -> CorpusIndex:
    return ingest(toy_corpus_dir)


@pytest.fixture(scope="session")
def golden_index() -> CorpusIndex:
    return ingest(GOLDEN_CORPUS_DIR)
