"""Session orchestration: iteration order, atomicity, replay, sweeps."""

import copy
import csv
import io

import numpy as np
import pytest

from subcontext.engine import (
    Engine,
    EngineConfig,
    SWEEP_FIELDS,
    SessionState,
    parse_grid,
    sweep,
    write_sweep_csv,
)
from subcontext.errors import (
    GenerationError,
    InvalidArgumentError,
    InvalidStateError,
    PipelineError,
)
from subcontext.reply import HistoryCache


class TestEngineConfig:
    def test_defaults(self):
        config = EngineConfig()
        assert (config.p, config.r, config.w) == (5, 6, 2)

    def test_validation(self):
        with pytest.raises(InvalidArgumentError):
            EngineConfig(p=0)
        with pytest.raises(InvalidArgumentError):
            EngineConfig(r=0)
        with pytest.raises(InvalidArgumentError):
            EngineConfig(w=-1)
        with pytest.raises(InvalidArgumentError):
            EngineConfig(classifier="remote")  # no URL
        with pytest.raises(InvalidArgumentError):
            EngineConfig(classifier="weird")


class TestStartSession:
    def test_routes_and_replies(self, toy_index):
        engine = Engine(toy_index, EngineConfig(seed=1))
        session, reply = engine.start_session("where was the paddy hoarded in the godown")
        assert session.case_id == "grain_hoarding"
        assert reply == session.turn_log[0].reply
        assert session.turn_log[0].k == 1

    def test_history_is_q0_then_q1(self, toy_index):
        engine = Engine(toy_index, EngineConfig(seed=1))
        q0 = "who stored rice in the godown"
        session, reply = engine.start_session(q0)
        assert session.history.texts() == [q0, reply]
        speakers = [e.speaker for e in session.history.entries]
        assert speakers == ["human", "agent"]

    def test_empty_query_rejected(self, toy_index):
        engine = Engine(toy_index)
        with pytest.raises(InvalidArgumentError):
            engine.start_session("   ")

    def test_selected_reply_consistent_with_rho(self, toy_index):
        engine = Engine(toy_index, EngineConfig(seed=4))
        session, reply = engine.start_session("was the cashewnut a foodstuff")
        record = session.turn_log[0]
        assert record.reply == record.candidates[record.selected_index]
        assert record.selected_index == int(np.argmax(record.rho))

    def test_low_confidence_flag_on_oov_query(self, toy_index):
        engine = Engine(toy_index, EngineConfig(seed=1))
        session, _ = engine.start_session("zzzz qqqq completely unrelated")
        assert session.turn_log[0].low_confidence
        assert session.case_id == toy_index.corpus.case_ids[0]

    def test_fresh_sessions_do_not_share_history(self, toy_index):
        engine = Engine(toy_index, EngineConfig(seed=1))
        s1, _ = engine.start_session("rice hoarding in the godown")
        s2, _ = engine.start_session("rice hoarding in the godown")
        assert s1.history.texts() == s2.history.texts()
        assert s1.session_id != s2.session_id


class TestStep:
    def test_newest_entries_are_sk_then_qk(self, toy_index):
        engine = Engine(toy_index, EngineConfig(seed=1))
        session, _ = engine.start_session("rice hoarding in the godown")
        s2 = "what did the inspectors record exactly"
        reply2 = engine.step(session, s2)
        assert session.history.texts()[-2:] == [s2, reply2]

    def test_history_respects_capacity(self, toy_index):
        engine = Engine(toy_index, EngineConfig(seed=1, r=2))
        session, _ = engine.start_session("rice hoarding in the godown")
        reply2 = engine.step(session, "what about the seized truck")
        assert len(session.history) == 2
        assert session.history.texts() == ["what about the seized truck", reply2]

    def test_case_fixed_for_session_lifetime(self, toy_index):
        engine = Engine(toy_index, EngineConfig(seed=1))
        session, _ = engine.start_session("rice hoarding in the godown")
        engine.step(session, "is a cashewnut consignment a foodstuff export")
        assert session.case_id == "grain_hoarding"  # no re-routing mid-session

    def test_unstarted_session_rejected(self, toy_index):
        engine = Engine(toy_index)
        blank = SessionState(
            session_id="x",
            case_id="grain_hoarding",
            m=3,
            config=EngineConfig(),
            history=HistoryCache(2),
        )
        with pytest.raises(InvalidStateError):
            engine.step(blank, "hello there friend")

    def test_empty_text_rejected(self, toy_index):
        engine = Engine(toy_index, EngineConfig(seed=1))
        session, _ = engine.start_session("rice hoarding in the godown")
        with pytest.raises(InvalidArgumentError):
            engine.step(session, "")

    def test_turn_record_fields(self, toy_index):
        engine = Engine(toy_index, EngineConfig(seed=1, p=3, w=1))
        session, _ = engine.start_session("rice hoarding in the godown")
        engine.step(session, "what did the court hold about hoarding")
        record = session.turn_log[-1]
        assert record.k == 2
        assert len(record.candidates) == 3 == len(record.rho)
        assert record.j_star in record.subcontext_indices
        assert len(record.subcontext_sentences) == len(record.subcontext_indices)
        assert record.timing_ms >= 0.0


class FaultyGenerator:
    """Generator that fails on demand to exercise turn atomicity."""

    name = "faulty"

    def __init__(self, inner, fail_after):
        self.inner = inner
        self.calls = 0
        self.fail_after = fail_after

    def generate(self, seed_text, p):
        self.calls += 1
        if self.calls > self.fail_after:
            raise GenerationError("injected fault", backend=self.name)
        return self.inner.generate(seed_text, p)


class TestAtomicity:
    def test_failed_step_leaves_session_bitwise_unchanged(self, toy_index):
        from subcontext.backends_local import train_ngram

        faulty = {}

        def generator_factory(sentence_set):
            gen = FaultyGenerator(train_ngram(sentence_set, seed=1), fail_after=1)
            faulty[sentence_set.case_id] = gen
            return gen

        engine = Engine(
            toy_index, EngineConfig(seed=1), generator_factory=generator_factory
        )
        session, _ = engine.start_session("rice hoarding in the godown")
        before_texts = session.history.texts()
        before_embeddings = [e.embedding.copy() for e in session.history.entries]
        before_log = copy.deepcopy(session.turn_log)
        before_sequence = session.next_sequence

        with pytest.raises(GenerationError):
            engine.step(session, "and what happened to the truck driver")

        assert session.history.texts() == before_texts
        for now, before in zip(session.history.entries, before_embeddings):
            np.testing.assert_array_equal(now.embedding, before)
        assert session.turn_log == before_log
        assert session.next_sequence == before_sequence

    def test_failed_start_persists_nothing(self, toy_index):
        def generator_factory(sentence_set):
            raise GenerationError("cannot build", backend="faulty")

        engine = Engine(
            toy_index, EngineConfig(seed=1), generator_factory=generator_factory
        )
        with pytest.raises(PipelineError):
            engine.start_session("rice hoarding in the godown")


class TestReplayDeterminism:
    def test_full_replay_reproduces_replies(self, golden_index):
        config = EngineConfig(seed=9, p=4, r=3, w=1)
        engine = Engine(golden_index, config)
        script = [
            "unjustified amount of paddy in a godown",
            "where was the rice being smuggled to",
            "which grounds were vague or false",
            "what did the court finally order",
        ]
        session, _ = engine.start_session(script[0])
        for line in script[1:]:
            engine.step(session, line)
        replies = [t.reply for t in session.turn_log]
        j_stars = [t.j_star for t in session.turn_log]

        fresh = Engine(golden_index, EngineConfig(seed=9, p=4, r=3, w=1))
        session2, _ = fresh.start_session(script[0])
        for line in script[1:]:
            fresh.step(session2, line)
        assert [t.reply for t in session2.turn_log] == replies
        assert [t.j_star for t in session2.turn_log] == j_stars
        assert [t.rho for t in session2.turn_log] == [t.rho for t in session.turn_log]


class TestParseGrid:
    def test_full_spec(self):
        grid = parse_grid("P=1,5;R=2,6;w=0,2")
        assert len(grid) == 8
        assert (1, 2, 0) in grid and (5, 6, 2) in grid

    def test_defaults_fill_missing_axes(self):
        grid = parse_grid("P=2")
        assert grid == [(2, EngineConfig().r, EngineConfig().w)]

    def test_bad_specs(self):
        with pytest.raises(InvalidArgumentError):
            parse_grid("P=a,b")
        with pytest.raises(InvalidArgumentError):
            parse_grid("Q=1")


class TestSweep:
    def test_single_point_matches_direct_run(self, toy_index):
        config = EngineConfig(seed=2)
        script = ["rice hoarding in the godown", "what did the court hold"]
        rows, failures = sweep(toy_index, script, [(2, 3, 1)], config)
        assert failures == []
        assert len(rows) == 1

        from dataclasses import replace

        engine = Engine(toy_index, replace(config, p=2, r=3, w=1))
        session, _ = engine.start_session(script[0])
        engine.step(session, script[1])
        expected = [t.rho[t.selected_index] for t in session.turn_log]
        assert rows[0]["mean_rho"] == pytest.approx(float(np.mean(expected)))
        assert rows[0]["M"] == session.m
        assert rows[0]["P"] == 2 and rows[0]["R"] == 3 and rows[0]["w"] == 1

    def test_eight_point_grid(self, toy_index):
        rows, failures = sweep(
            toy_index,
            ["rice hoarding in the godown"],
            parse_grid("P=1,2;R=1,2;w=0,1"),
            EngineConfig(seed=2),
        )
        assert len(rows) == 8
        assert failures == []

    def test_mean_selected_rho_nondecreasing_in_p(self, golden_index):
        # With R=1 the scoring history holds only the current human turn, so
        # candidate scores are identical across P runs and the argmax over a
        # superset can only improve the per-turn selected rho.
        script = [
            "unjustified amount of paddy in a godown",
            "where was the rice being smuggled to",
            "what did the court finally order",
        ]
        rows, failures = sweep(
            golden_index,
            script,
            [(p, 1, 2) for p in (1, 2, 5, 8)],
            EngineConfig(seed=5),
        )
        assert failures == []
        means = [row["mean_rho"] for row in rows]
        assert all(b >= a - 1e-12 for a, b in zip(means, means[1:]))

    def test_grid_point_failure_recorded_and_sweep_continues(self, toy_index):
        rows, failures = sweep(
            toy_index,
            ["rice hoarding in the godown"],
            [(1, 0, 0), (1, 1, 0)],  # R=0 is invalid and must fail in isolation
            EngineConfig(seed=2),
        )
        assert len(rows) == 1
        assert len(failures) == 1
        assert failures[0]["R"] == 0

    def test_csv_output(self, toy_index, tmp_path):
        rows, _ = sweep(
            toy_index, ["rice hoarding in the godown"], [(1, 1, 0)], EngineConfig(seed=2)
        )
        buffer = io.StringIO()
        write_sweep_csv(rows, buffer)
        lines = buffer.getvalue().strip().splitlines()
        assert lines[0] == ",".join(SWEEP_FIELDS)
        assert len(lines) == 2
        parsed = next(csv.DictReader(io.StringIO(buffer.getvalue())))
        assert parsed["P"] == "1"

        path = tmp_path / "sweep.csv"
        write_sweep_csv(rows, path)
        assert path.read_text().splitlines()[0] == ",".join(SWEEP_FIELDS)
