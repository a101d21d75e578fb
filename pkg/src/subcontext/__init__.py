"""Deterministic subcontext-retrieval dialog engine.

Pipeline: route an opening query to one case of a corpus, locate the case
sentence most similar to each turn, generate candidate replies from that
sentence's neighborhood, and answer with the candidate best correlated
with the recent conversation history.
"""

from .corpus import Corpus, CorpusIndex, SentenceSet, ingest, load_index, save_index
from .engine import Engine, EngineConfig, SessionState, TurnRecord, sweep
from .errors import PipelineError

__all__ = [
    "Corpus",
    "CorpusIndex",
    "SentenceSet",
    "ingest",
    "load_index",
    "save_index",
    "Engine",
    "EngineConfig",
    "SessionState",
    "TurnRecord",
    "sweep",
    "PipelineError",
]

__version__ = "0.1.0"
