"""
A full deterministic conversation
=================================

One session: route once on the opening query, then per turn locate the
subcontext, generate candidate replies, and answer with the candidate
best correlated with the recent history. Fixed seed, reproducible output.
"""

from pathlib import Path

from subcontext.corpus import ingest
from subcontext.engine import Engine, EngineConfig

HERE = Path(__file__).parent

index = ingest(HERE / "corpus")
engine = Engine(index, EngineConfig(seed=42, p=4, r=4, w=2))

script = [
    "case involving an unjustified amount of paddy in a godown",
    "where was this paddy and rice being smuggled to?",
    "which grounds were vague or false in the detention order?",
    "what did the court finally order for the petitioner?",
]

session, reply = engine.start_session(script[0])
print(f"routed to case {session.case_id!r} (M = {session.m})\n")

for line in script[1:]:
    engine.step(session, line)

for turn in session.turn_log:
    print(f"human> {turn.human_text}")
    print(f"agent> {turn.reply}")
    picked = turn.rho[turn.selected_index]
    print(
        f"       [j* = {turn.j_star}, window = {turn.subcontext_indices}, "
        f"picked candidate {turn.selected_index + 1}/{len(turn.candidates)} "
        f"with rho = {picked:.4f}]"
    )
    print()

# The history cache holds at most R utterances, oldest evicted first.
print("history cache (last R utterances):")
for entry in session.history.entries:
    print(f"  [{entry.speaker}] {entry.text[:70]}")
