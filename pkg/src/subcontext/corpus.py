"""Case ingestion, sentence segmentation and index persistence.

A corpus is a set of case files; each case is split into an ordered
sentence set whose consecutive pairs form the entailment dataset used to
fine-tune remote sentence encoders. Everything here is deterministic:
same bytes in, same structures out.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    EmptyCaseError,
    EmptyCorpusError,
    InvalidArgumentError,
    ParseError,
    TooShortError,
)
from .textnum import tokenize

logger = logging.getLogger(__name__)

INDEX_VERSION = 1

# Words that commonly precede a period without ending a sentence.
# Matched case-sensitively so e.g. the word "no" is not mistaken for "No.".
DEFAULT_ABBREVIATIONS = frozenset(
    {
        "Dr", "Mr", "Mrs", "Ms", "Prof", "Hon", "Rev", "St", "Jr", "Sr",
        "No", "Nos", "vs", "v", "etc", "viz", "cf", "al", "Co", "Ltd",
        "Inc", "Art", "Sec", "cl", "p", "pp", "Vol",
    }
)

DEFAULT_MIN_SENTENCE_TOKENS = 3

_TERMINALS = ".!?"


@dataclass(frozen=True)
class CaseFile:
    """One case document: stable identifier, display title, raw body."""

    case_id: str
    title: str
    body: str


@dataclass
class Corpus:
    """Ordered collection of case files; ordering defines classifier logits."""

    cases: list[CaseFile]

    @property
    def k(self) -> int:
        return len(self.cases)

    @property
    def case_ids(self) -> list[str]:
        return [c.case_id for c in self.cases]

    def get(self, case_id: str) -> CaseFile:
        for case in self.cases:
            if case.case_id == case_id:
                return case
        raise KeyError(case_id)


@dataclass
class SentenceSet:
    """A case's sentences S_0..S_M in document order."""

    case_id: str
    sentences: list[str]

    @property
    def m(self) -> int:
        """Index of the last sentence (the set holds m + 1 sentences)."""
        return len(self.sentences) - 1

    def truncated(self, m_limit: int) -> "SentenceSet":
        """First m_limit + 1 sentences; experimental control for sweeps."""
        if m_limit < 0:
            raise InvalidArgumentError(f"m_limit must be >= 0, got {m_limit}")
        return SentenceSet(self.case_id, self.sentences[: m_limit + 1])


@dataclass(frozen=True)
class EntailmentPair:
    """Consecutive-sentence pair: sentence j is taken to entail sentence j+1."""

    premise_index: int
    hypothesis_index: int


@dataclass
class CorpusIndex:
    """A corpus together with the sentence set of every case."""

    corpus: Corpus
    sentence_sets: dict[str, SentenceSet] = field(default_factory=dict)

    def sentence_set(self, case_id: str) -> SentenceSet:
        try:
            return self.sentence_sets[case_id]
        except KeyError:
            raise KeyError(f"no sentence set for case {case_id!r}") from None


def _is_boundary(body: str, i: int, abbreviations: frozenset[str]) -> bool:
    """True when the terminal at position i ends a sentence.

    Rule: terminal punctuation followed by whitespace and an uppercase
    letter or digit. A period additionally requires that the preceding
    word is not a known abbreviation.
    """
    n = len(body)
    j = i + 1
    if j >= n or not body[j].isspace():
        return False
    while j < n and body[j].isspace():
        j += 1
    if j >= n or not (body[j].isupper() or body[j].isdigit()):
        return False
    if body[i] != ".":
        return True
    # Walk back over the word immediately before the period.
    w = i - 1
    while w >= 0 and (body[w].isalnum() or body[w] == "."):
        w -= 1
    word = body[w + 1 : i].rstrip(".")
    return word not in abbreviations


def split_sentences(
    body: str,
    case_id: str = "",
    min_tokens: int = DEFAULT_MIN_SENTENCE_TOKENS,
    abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS,
) -> SentenceSet:
    """Deterministic rule-based segmentation of a case body.

    Sentences shorter than min_tokens (by the shared tokenizer) are
    dropped. Raises EmptyCaseError when nothing usable remains.
    """
    if not body or not body.strip():
        raise InvalidArgumentError("body must be non-empty")
    pieces: list[str] = []
    start = 0
    for i, ch in enumerate(body):
        if ch in _TERMINALS and _is_boundary(body, i, abbreviations):
            pieces.append(body[start : i + 1])
            start = i + 1
    pieces.append(body[start:])
    sentences = []
    for piece in pieces:
        text = " ".join(piece.split())
        if text and len(tokenize(text)) >= min_tokens:
            sentences.append(text)
    if not sentences:
        raise EmptyCaseError(
            f"case {case_id or '<unnamed>'}: no sentence with >= {min_tokens} tokens"
        )
    return SentenceSet(case_id=case_id, sentences=sentences)


def build_entailment_pairs(sentence_set: SentenceSet) -> list[EntailmentPair]:
    """The M ordered pairs (j, j+1) for a set of M+1 sentences."""
    if sentence_set.m < 1:
        raise TooShortError(
            f"case {sentence_set.case_id!r} has a single sentence; "
            "entailment pairs need at least two"
        )
    return [EntailmentPair(j, j + 1) for j in range(sentence_set.m)]


def ingest(
    source_dir: str | Path,
    min_tokens: int = DEFAULT_MIN_SENTENCE_TOKENS,
    abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS,
) -> CorpusIndex:
    """Read every *.txt file in a directory into a corpus index.

    case_id is the file stem; the title is the first non-empty line.
    Files that cannot be read or segmented are skipped with a warning;
    an empty result is fatal. Cases are ordered lexicographically by id.
    """
    directory = Path(source_dir)
    if not directory.is_dir():
        raise InvalidArgumentError(f"not a directory: {directory}")
    cases: list[CaseFile] = []
    sets: dict[str, SentenceSet] = {}
    for path in sorted(directory.glob("*.txt"), key=lambda p: p.stem):
        try:
            body = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            logger.warning("skipping unreadable file %s: %s", path, exc)
            continue
        try:
            sentence_set = split_sentences(
                body, case_id=path.stem, min_tokens=min_tokens, abbreviations=abbreviations
            )
        except InvalidArgumentError as exc:
            logger.warning("skipping %s: %s", path, exc)
            continue
        title = next((ln.strip() for ln in body.splitlines() if ln.strip()), path.stem)
        cases.append(CaseFile(case_id=path.stem, title=title[:120], body=body))
        sets[path.stem] = sentence_set
    if not cases:
        raise EmptyCorpusError(f"no usable case files in {directory}")
    return CorpusIndex(corpus=Corpus(cases=cases), sentence_sets=sets)


def save_index(corpus: Corpus, sentence_sets: dict[str, SentenceSet], path: str | Path) -> None:
    """Persist corpus + sentence sets as newline-delimited JSON (UTF-8).

    Record kinds: one header, one case record per case (including the body,
    which the classifier needs after reload), one sentence record per
    sentence. Round-trips losslessly through load_index.
    """
    records: list[dict] = [{"kind": "header", "version": INDEX_VERSION, "k": corpus.k}]
    for case in corpus.cases:
        records.append(
            {"kind": "case", "case_id": case.case_id, "title": case.title, "body": case.body}
        )
    for case in corpus.cases:
        sset = sentence_sets[case.case_id]
        for j, text in enumerate(sset.sentences):
            records.append(
                {"kind": "sentence", "case_id": case.case_id, "index": j, "text": text}
            )
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_index(path: str | Path) -> CorpusIndex:
    """Load an index written by save_index, validating structure line by line."""
    cases: list[CaseFile] = []
    sets: dict[str, list[tuple[int, str]]] = {}
    header: dict | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", lineno) from exc
            if not isinstance(record, dict) or "kind" not in record:
                raise ParseError("record must be an object with a 'kind'", lineno)
            kind = record["kind"]
            if kind == "header":
                if header is not None:
                    raise ParseError("duplicate header", lineno)
                if record.get("version") != INDEX_VERSION:
                    raise ParseError(
                        f"unsupported version {record.get('version')!r}", lineno
                    )
                header = record
            elif kind == "case":
                if header is None:
                    raise ParseError("case record before header", lineno)
                try:
                    case = CaseFile(record["case_id"], record["title"], record["body"])
                except KeyError as exc:
                    raise ParseError(f"case record missing {exc}", lineno) from exc
                cases.append(case)
                sets[case.case_id] = []
            elif kind == "sentence":
                if header is None:
                    raise ParseError("sentence record before header", lineno)
                try:
                    case_id, idx, text = record["case_id"], record["index"], record["text"]
                except KeyError as exc:
                    raise ParseError(f"sentence record missing {exc}", lineno) from exc
                if case_id not in sets:
                    raise ParseError(f"sentence for unknown case {case_id!r}", lineno)
                sets[case_id].append((idx, text))
            else:
                raise ParseError(f"unknown record kind {kind!r}", lineno)
    if header is None:
        raise ParseError("missing header record", 1)
    if header.get("k") != len(cases):
        raise ParseError(
            f"header announces {header.get('k')} cases, found {len(cases)}",
            1,
        )
    sentence_sets: dict[str, SentenceSet] = {}
    for case_id, indexed in sets.items():
        if not indexed:
            raise ParseError(f"case {case_id!r} has no sentence records", 1)
        indices = [i for i, _ in indexed]
        if indices != list(range(len(indexed))):
            raise ParseError(f"case {case_id!r} sentence indices not contiguous", 1)
        sentence_sets[case_id] = SentenceSet(case_id, [t for _, t in indexed])
    return CorpusIndex(corpus=Corpus(cases=cases), sentence_sets=sentence_sets)


def save_entailment_pairs(
    sentence_sets: dict[str, SentenceSet], path: str | Path
) -> int:
    """Write the consecutive-sentence training pairs as JSON lines.

    This is the fine-tuning dataset handed to remote sentence encoders;
    local backends do not consume it. Returns the number of pairs written.
    """
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for case_id in sorted(sentence_sets):
            sset = sentence_sets[case_id]
            if sset.m < 1:
                continue
            for pair in build_entailment_pairs(sset):
                fh.write(
                    json.dumps(
                        {
                            "case_id": case_id,
                            "premise_index": pair.premise_index,
                            "hypothesis_index": pair.hypothesis_index,
                            "premise": sset.sentences[pair.premise_index],
                            "hypothesis": sset.sentences[pair.hypothesis_index],
                        },
                        ensure_ascii=False,
                    )
                    + "\n"
                )
                count += 1
    return count
