"""Session orchestration: route once, then read/generate/rerank per turn.

One session is pinned to one case for its whole lifetime. Every turn runs
the same five updates, in order: push the human utterance into history,
locate the best-matching sentence, generate candidates from its
neighborhood, pick the candidate with the highest average historical
correlation, push the reply. A failed turn leaves the session untouched.
"""

from __future__ import annotations

import csv
import io
import logging
import time
import uuid
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import backends_local, read, remote, reply, seek
from .corpus import CorpusIndex, SentenceSet
from .errors import BackendError, InvalidArgumentError, InvalidStateError
from .read import EmbeddingBackend, SentenceEmbeddingIndex
from .reply import CandidateSet, GeneratorBackend, HistoryCache, Utterance
from .textnum import tokenize

logger = logging.getLogger(__name__)

LOCAL = "local"
REMOTE = "remote"


@dataclass
class EngineConfig:
    """Tunables for a conversation engine.

    p: candidates generated per turn; r: history capacity; w: subcontext
    window radius. Backends select the local deterministic suite or remote
    services; with fallback enabled, a failing remote backend degrades to
    its local equivalent (flagged on the affected turn).
    """

    p: int = 5
    r: int = 6
    w: int = 2
    seed: int = 0
    classifier: str = LOCAL
    embedder: str = LOCAL
    generator: str = LOCAL
    classifier_url: str | None = None
    embedder_url: str | None = None
    generator_url: str | None = None
    fallback_to_local: bool = False
    low_confidence_threshold: float = seek.DEFAULT_LOW_CONFIDENCE_THRESHOLD
    classifier_rank: int | None = None
    embedder_rank: int | None = None
    generator_order: int = backends_local.DEFAULT_ORDER
    max_reply_tokens: int = backends_local.DEFAULT_MAX_TOKENS
    m_limit: int | None = None
    classifier_timeout: float = remote.DEFAULT_CLASSIFY_TIMEOUT
    embedder_timeout: float = remote.DEFAULT_EMBED_TIMEOUT
    generator_timeout: float = remote.DEFAULT_GENERATE_TIMEOUT

    def __post_init__(self):
        if self.p < 1:
            raise InvalidArgumentError(f"p must be >= 1, got {self.p}")
        if self.r < 1:
            raise InvalidArgumentError(f"r must be >= 1, got {self.r}")
        if self.w < 0:
            raise InvalidArgumentError(f"w must be >= 0, got {self.w}")
        for kind, url in (
            (self.classifier, self.classifier_url),
            (self.embedder, self.embedder_url),
            (self.generator, self.generator_url),
        ):
            if kind not in (LOCAL, REMOTE):
                raise InvalidArgumentError(f"backend must be 'local' or 'remote', got {kind!r}")
            if kind == REMOTE and not url:
                raise InvalidArgumentError("remote backend selected without an endpoint URL")


@dataclass
class TurnRecord:
    """Everything the engine decided during one turn, for transparency."""

    k: int
    human_text: str
    j_star: int
    subcontext_indices: list[int]
    subcontext_sentences: list[str]
    candidates: list[str]
    rho: list[float]
    selected_index: int
    reply: str
    low_confidence: bool = False
    used_fallback: bool = False
    duplicate_candidates: bool = False
    timing_ms: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SessionState:
    """One conversation: fixed case, bounded history, append-only turn log."""

    session_id: str
    case_id: str
    m: int
    config: EngineConfig
    history: HistoryCache
    turn_log: list[TurnRecord] = field(default_factory=list)
    next_sequence: int = 0

    @property
    def started(self) -> bool:
        return bool(self.turn_log)


@dataclass
class _CaseResources:
    """Per-case artifacts cached across sessions: embedder, index, generator."""

    sentence_set: SentenceSet
    embedder: EmbeddingBackend
    index: SentenceEmbeddingIndex
    generator: GeneratorBackend
    used_fallback: bool = False


class Engine:
    """Conversation engine over a loaded corpus index.

    Case-level resources (embedder, sentence index, generator) are built on
    first use and reused by every later session routed to the same case.
    The optional factory arguments exist for tests to inject fakes.
    """

    def __init__(
        self,
        index: CorpusIndex,
        config: EngineConfig | None = None,
        classifier=None,
        embedder_factory=None,
        generator_factory=None,
    ):
        self.index = index
        self.config = config or EngineConfig()
        self._classifier = classifier
        self._baseline_classifier = None
        self._classifier_fallback = False
        self._embedder_factory = embedder_factory
        self._generator_factory = generator_factory
        self._resources: dict[str, _CaseResources] = {}

    # -- backend wiring ----------------------------------------------------

    def _baseline(self):
        if self._baseline_classifier is None:
            self._baseline_classifier = seek.train_baseline_classifier(
                self.index.corpus, self.index.sentence_sets, self.config.classifier_rank
            )
        return self._baseline_classifier

    def _get_classifier(self):
        if self._classifier is not None:
            return self._classifier
        if self.config.classifier == REMOTE:
            return remote.RemoteClassifier(
                self.config.classifier_url,
                expected_k=self.index.corpus.k,
                timeout=self.config.classifier_timeout,
            )
        return self._baseline()

    def _classify(self, query: str) -> tuple[np.ndarray, bool]:
        """Logits for the routing query, falling back to local if allowed."""
        classifier = self._get_classifier()
        try:
            return classifier.classify(query), False
        except BackendError:
            if not (self.config.fallback_to_local and classifier is not self._baseline_classifier):
                raise
            logger.warning("classifier backend failed; falling back to local baseline")
            return self._baseline().classify(query), True

    def route(self, query: str) -> tuple[str, np.ndarray, bool, bool]:
        """Resolve a query to (case_id, logits, low_confidence, used_fallback)."""
        if not query or not query.strip():
            raise InvalidArgumentError("query must be non-empty")
        logits, used_fallback = self._classify(query)
        case_id = seek.select_case(logits, self.index.corpus)
        low_confidence = float(np.max(logits)) < self.config.low_confidence_threshold
        return case_id, logits, low_confidence, used_fallback

    def _build_embedder(self, sentence_set: SentenceSet) -> tuple[EmbeddingBackend, bool]:
        if self._embedder_factory is not None:
            return self._embedder_factory(sentence_set), False
        if self.config.embedder == REMOTE:
            embedder = remote.RemoteEmbedder(
                self.config.embedder_url,
                case_id=sentence_set.case_id,
                timeout=self.config.embedder_timeout,
            )
            if remote.ping(self.config.embedder_url):
                return embedder, False
            if not self.config.fallback_to_local:
                raise BackendError(
                    f"embedder endpoint {self.config.embedder_url} is unreachable",
                    backend=embedder.name,
                    cause="unreachable",
                )
            logger.warning("embedder endpoint unreachable; using local embedder")
        return (
            backends_local.LsaEmbedder(sentence_set, rank=self.config.embedder_rank),
            self.config.embedder == REMOTE,
        )

    def _build_generator(self, sentence_set: SentenceSet) -> tuple[GeneratorBackend, bool]:
        if self._generator_factory is not None:
            return self._generator_factory(sentence_set), False
        if self.config.generator == REMOTE:
            generator = remote.RemoteGenerator(
                self.config.generator_url,
                max_tokens=self.config.max_reply_tokens,
                rng_seed=self.config.seed,
                timeout=self.config.generator_timeout,
            )
            if remote.ping(self.config.generator_url):
                return generator, False
            if not self.config.fallback_to_local:
                raise BackendError(
                    f"generator endpoint {self.config.generator_url} is unreachable",
                    backend=generator.name,
                    cause="unreachable",
                )
            logger.warning("generator endpoint unreachable; using local generator")
        return (
            backends_local.train_ngram(
                sentence_set,
                seed=self.config.seed,
                max_tokens=self.config.max_reply_tokens,
                order=self.config.generator_order,
            ),
            self.config.generator == REMOTE,
        )

    def _case_resources(self, case_id: str) -> _CaseResources:
        cached = self._resources.get(case_id)
        if cached is not None:
            return cached
        sentence_set = self.index.sentence_set(case_id)
        if self.config.m_limit is not None:
            sentence_set = sentence_set.truncated(self.config.m_limit)
        embedder, emb_fallback = self._build_embedder(sentence_set)
        generator, gen_fallback = self._build_generator(sentence_set)
        resources = _CaseResources(
            sentence_set=sentence_set,
            embedder=embedder,
            index=read.build_index(sentence_set, embedder),
            generator=generator,
            used_fallback=emb_fallback or gen_fallback,
        )
        self._resources[case_id] = resources
        return resources

    # -- conversation ------------------------------------------------------

    def _run_turn(
        self,
        resources: _CaseResources,
        history: HistoryCache,
        human_text: str,
        turn_k: int,
        next_sequence: int,
    ) -> tuple[TurnRecord, HistoryCache, int]:
        """The five per-turn updates, applied to a scratch history.

        The caller commits the returned history only on success, which is
        what makes turns atomic.
        """
        started = time.perf_counter()
        scratch = history.copy()
        human_embedding = resources.embedder.embed(human_text)
        scratch.push(
            Utterance(human_text, "human", human_embedding, turn_index=next_sequence)
        )
        next_sequence += 1

        similarities = read.similarity_array(human_text, resources.index, resources.embedder)
        j_star = read.locate(similarities)
        neighborhood = read.subcontext(resources.sentence_set, j_star, self.config.w)

        texts = reply.generate_candidates(
            resources.generator, neighborhood.text, self.config.p
        )
        candidates = CandidateSet(
            texts=texts, embeddings=resources.embedder.embed_batch(texts)
        )
        selected, rho = reply.rerank(candidates, scratch)

        reply_text = texts[selected]
        scratch.push(
            Utterance(
                reply_text,
                "agent",
                candidates.embeddings[selected],
                turn_index=next_sequence,
            )
        )
        next_sequence += 1

        record = TurnRecord(
            k=turn_k,
            human_text=human_text,
            j_star=j_star,
            subcontext_indices=neighborhood.sentence_indices,
            subcontext_sentences=neighborhood.sentences,
            candidates=texts,
            rho=[float(x) for x in rho],
            selected_index=selected,
            reply=reply_text,
            duplicate_candidates=candidates.has_duplicates,
            timing_ms=(time.perf_counter() - started) * 1000.0,
        )
        return record, scratch, next_sequence

    def start_session(self, q0: str) -> tuple[SessionState, str]:
        """Route the opening query to a case and produce the first reply.

        On return the history is exactly [q0, q1]. Nothing is persisted if
        any stage fails.
        """
        case_id, _, low_confidence, route_fallback = self.route(q0)
        resources = self._case_resources(case_id)

        record, history, next_sequence = self._run_turn(
            resources,
            HistoryCache(self.config.r),
            q0,
            turn_k=1,
            next_sequence=0,
        )
        record.low_confidence = low_confidence
        record.used_fallback = route_fallback or resources.used_fallback
        session = SessionState(
            session_id=uuid.uuid4().hex,
            case_id=case_id,
            m=resources.sentence_set.m,
            config=replace(self.config),
            history=history,
            turn_log=[record],
            next_sequence=next_sequence,
        )
        return session, record.reply

    def step(self, session: SessionState, human_text: str) -> str:
        """One conversation turn. Atomic: failure leaves the session unchanged."""
        if not session.started:
            raise InvalidStateError("session has no opening turn; call start_session")
        if not human_text or not human_text.strip():
            raise InvalidArgumentError("turn text must be non-empty")
        resources = self._case_resources(session.case_id)
        record, history, next_sequence = self._run_turn(
            resources,
            session.history,
            human_text,
            turn_k=len(session.turn_log) + 1,
            next_sequence=session.next_sequence,
        )
        record.used_fallback = resources.used_fallback
        session.history = history
        session.next_sequence = next_sequence
        session.turn_log.append(record)
        return record.reply


# -- parameter sweeps -------------------------------------------------------

SWEEP_FIELDS = [
    "P",
    "R",
    "w",
    "M",
    "mean_rho",
    "std_rho",
    "mean_jstar_shift",
    "dup_rate",
    "mean_reply_tokens",
]


def parse_grid(spec: str) -> list[tuple[int, int, int]]:
    """Parse "P=1,5;R=2,6;w=0,2" into the cross-product of grid points."""
    values: dict[str, list[int]] = {}
    for part in spec.split(";"):
        part = part.strip()
        if not part:
            continue
        try:
            key, raw = part.split("=", 1)
            values[key.strip()] = [int(v) for v in raw.split(",") if v.strip()]
        except ValueError as exc:
            raise InvalidArgumentError(f"bad grid component {part!r}") from exc
    unknown = set(values) - {"P", "R", "w"}
    if unknown:
        raise InvalidArgumentError(f"unknown grid keys: {sorted(unknown)}")
    ps = values.get("P", [EngineConfig().p])
    rs = values.get("R", [EngineConfig().r])
    ws = values.get("w", [EngineConfig().w])
    if not (ps and rs and ws):
        raise InvalidArgumentError("grid must contain at least one point per axis")
    return [(p, r, w) for p in ps for r in rs for w in ws]


def sweep(
    index: CorpusIndex,
    script: list[str],
    grid: list[tuple[int, int, int]],
    base_config: EngineConfig | None = None,
) -> tuple[list[dict], list[dict]]:
    """Run the scripted conversation at every grid point and collect metrics.

    Returns (rows, failures). A grid point that errors is recorded in
    failures and the sweep continues.
    """
    if not grid:
        raise InvalidArgumentError("grid must be non-empty")
    if not script:
        raise InvalidArgumentError("script must contain at least one turn")
    base = base_config or EngineConfig()
    rows: list[dict] = []
    failures: list[dict] = []
    for p, r, w in grid:
        try:
            config = replace(base, p=p, r=r, w=w)
            engine = Engine(index, config)
            session, _ = engine.start_session(script[0])
            for line in script[1:]:
                engine.step(session, line)
            rows.append(_metrics_row(session))
        except Exception as exc:  # record and continue; sweeps are batch jobs
            logger.warning("grid point P=%d R=%d w=%d failed: %s", p, r, w, exc)
            failures.append({"P": p, "R": r, "w": w, "error": str(exc)})
    return rows, failures


def _metrics_row(session: SessionState) -> dict:
    selected_rho = [t.rho[t.selected_index] for t in session.turn_log]
    j_stars = [t.j_star for t in session.turn_log]
    shifts = [abs(b - a) for a, b in zip(j_stars, j_stars[1:])]
    total_candidates = sum(len(t.candidates) for t in session.turn_log)
    duplicates = sum(
        len(t.candidates) - len(set(t.candidates)) for t in session.turn_log
    )
    reply_tokens = [len(tokenize(t.reply)) for t in session.turn_log]
    return {
        "P": session.config.p,
        "R": session.config.r,
        "w": session.config.w,
        "M": session.m,
        "mean_rho": float(np.mean(selected_rho)),
        "std_rho": float(np.std(selected_rho)),
        "mean_jstar_shift": float(np.mean(shifts)) if shifts else 0.0,
        "dup_rate": duplicates / total_candidates if total_candidates else 0.0,
        "mean_reply_tokens": float(np.mean(reply_tokens)),
    }


def write_sweep_csv(rows: list[dict], path_or_buffer) -> None:
    """Write sweep rows with the fixed header column order."""

    def _write(fh) -> None:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_FIELDS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)

    if isinstance(path_or_buffer, io.IOBase) or hasattr(path_or_buffer, "write"):
        _write(path_or_buffer)
    else:
        with open(path_or_buffer, "w", newline="", encoding="utf-8") as fh:
            _write(fh)
