"""Contract tests for the remote backend clients against a mock server."""

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from subcontext.engine import Engine, EngineConfig
from subcontext.errors import BackendError, GenerationError
from subcontext.remote import RemoteClassifier, RemoteEmbedder, RemoteGenerator, ping
from subcontext.reply import generate_candidates
from subcontext.seek import select_case


class MockInferenceServer:
    """Scriptable classify/embed/generate endpoints plus /healthz."""

    def __init__(self):
        self.behavior = {}
        self.requests = []
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_GET(self):
                if self.path == "/healthz" and not outer.behavior.get("unhealthy"):
                    self._reply(200, {"status": "ok"})
                else:
                    self._reply(404, {})

            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                payload = json.loads(self.rfile.read(length) or b"{}")
                outer.requests.append((self.path, payload))
                plan = outer.behavior.get(self.path.lstrip("/"), {})
                delay = plan.get("delay", 0.0)
                if delay:
                    time.sleep(delay)
                if plan.get("raw") is not None:
                    self.send_response(plan.get("status", 200))
                    self.send_header("Content-Type", "application/json")
                    self.end_headers()
                    self.wfile.write(plan["raw"])
                    return
                body = plan.get("body")
                if callable(body):
                    body = body(payload)
                self._reply(plan.get("status", 200), body if body is not None else {})

            def _reply(self, status, body):
                data = json.dumps(body).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    @property
    def url(self) -> str:
        return f"http://127.0.0.1:{self.server.server_port}"

    def stop(self):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture()
def mock_server():
    server = MockInferenceServer()
    yield server
    server.stop()


class TestRemoteClassifier:
    def test_fixed_logits_route(self, mock_server, toy_index):
        mock_server.behavior["classify"] = {"body": {"logits": [0.0, 1.0, 0.2], "k": 3}}
        classifier = RemoteClassifier(mock_server.url, expected_k=3)
        logits = classifier.classify("pick the second case")
        assert select_case(logits, toy_index.corpus) == toy_index.corpus.case_ids[1]
        assert mock_server.requests[0] == ("/classify", {"text": "pick the second case"})

    def test_wrong_k_is_backend_error(self, mock_server):
        mock_server.behavior["classify"] = {"body": {"logits": [0.0, 1.0, 0.2], "k": 3}}
        classifier = RemoteClassifier(mock_server.url, expected_k=2)
        with pytest.raises(BackendError) as excinfo:
            classifier.classify("query")
        assert excinfo.value.cause == "wrong_k"

    def test_timeout_is_backend_error(self, mock_server):
        mock_server.behavior["classify"] = {
            "body": {"logits": [1.0], "k": 1},
            "delay": 1.0,
        }
        classifier = RemoteClassifier(mock_server.url, expected_k=1, timeout=0.2)
        with pytest.raises(BackendError) as excinfo:
            classifier.classify("query")
        assert excinfo.value.cause == "timeout"

    def test_malformed_json_is_backend_error(self, mock_server):
        mock_server.behavior["classify"] = {"raw": b"not json"}
        classifier = RemoteClassifier(mock_server.url, expected_k=1)
        with pytest.raises(BackendError) as excinfo:
            classifier.classify("query")
        assert excinfo.value.cause == "malformed"

    def test_http_error_is_backend_error(self, mock_server):
        mock_server.behavior["classify"] = {"status": 500, "body": {}}
        classifier = RemoteClassifier(mock_server.url, expected_k=1)
        with pytest.raises(BackendError) as excinfo:
            classifier.classify("query")
        assert excinfo.value.cause == "http_status"

    def test_connection_refused(self):
        classifier = RemoteClassifier("http://127.0.0.1:1", expected_k=1, timeout=0.5)
        with pytest.raises(BackendError) as excinfo:
            classifier.classify("query")
        assert excinfo.value.cause == "connection"

    def test_non_finite_logits_rejected(self, mock_server):
        mock_server.behavior["classify"] = {
            "raw": json.dumps({"logits": [1.0, None], "k": 2}).encode()
        }
        classifier = RemoteClassifier(mock_server.url, expected_k=2)
        with pytest.raises(BackendError):
            classifier.classify("query")


class TestRemoteEmbedder:
    def test_batched_embedding(self, mock_server):
        mock_server.behavior["embed"] = {
            "body": lambda req: {
                "vectors": [[float(len(t)), 1.0] for t in req["texts"]],
                "dim": 2,
            }
        }
        embedder = RemoteEmbedder(mock_server.url, case_id="case_x")
        vectors = embedder.embed_batch(["ab", "abcd"])
        np.testing.assert_array_equal(vectors[0], [2.0, 1.0])
        np.testing.assert_array_equal(vectors[1], [4.0, 1.0])
        assert embedder.dimension == 2
        assert mock_server.requests[0][1]["case_id"] == "case_x"

    def test_wrong_vector_count(self, mock_server):
        mock_server.behavior["embed"] = {"body": {"vectors": [[1.0]], "dim": 1}}
        embedder = RemoteEmbedder(mock_server.url, case_id="c")
        with pytest.raises(BackendError) as excinfo:
            embedder.embed_batch(["a", "b"])
        assert excinfo.value.cause == "malformed"

    def test_dimension_drift_rejected(self, mock_server):
        state = {"dim": 2}

        def body(req):
            dim = state["dim"]
            state["dim"] = 3
            return {"vectors": [[0.0] * dim for _ in req["texts"]], "dim": dim}

        mock_server.behavior["embed"] = {"body": body}
        embedder = RemoteEmbedder(mock_server.url, case_id="c")
        embedder.embed("first")
        with pytest.raises(BackendError) as excinfo:
            embedder.embed("second")
        assert excinfo.value.cause == "dimension_drift"

    def test_dimension_unknown_before_first_call(self, mock_server):
        embedder = RemoteEmbedder(mock_server.url, case_id="c")
        with pytest.raises(BackendError):
            _ = embedder.dimension


class TestRemoteGenerator:
    def test_candidates_and_payload(self, mock_server):
        mock_server.behavior["generate"] = {"body": {"candidates": ["x", "y", "z"]}}
        generator = RemoteGenerator(mock_server.url, max_tokens=13, rng_seed=7)
        assert generator.generate("seed text", 3) == ["x", "y", "z"]
        path, payload = mock_server.requests[0]
        assert path == "/generate"
        assert payload == {"seed": "seed text", "n": 3, "max_tokens": 13, "rng_seed": 7}

    def test_short_list_is_generation_error(self, mock_server):
        mock_server.behavior["generate"] = {"body": {"candidates": ["x"]}}
        generator = RemoteGenerator(mock_server.url)
        with pytest.raises(GenerationError) as excinfo:
            generator.generate("seed", 3)
        assert excinfo.value.cause == "short_list"

    def test_empty_candidate_rejected_by_pipeline(self, mock_server):
        mock_server.behavior["generate"] = {"body": {"candidates": ["x", "", "y"]}}
        generator = RemoteGenerator(mock_server.url)
        with pytest.raises(GenerationError):
            generate_candidates(generator, "seed text", 3)


class TestPing:
    def test_healthy(self, mock_server):
        assert ping(mock_server.url) is True

    def test_unhealthy(self, mock_server):
        mock_server.behavior["unhealthy"] = True
        assert ping(mock_server.url) is False

    def test_unreachable(self):
        assert ping("http://127.0.0.1:1", timeout=0.3) is False


class TestEngineFallback:
    def test_classifier_timeout_with_fallback_uses_baseline(self, mock_server, toy_index):
        mock_server.behavior["classify"] = {
            "body": {"logits": [9.0, 0.0, 0.0], "k": 3},
            "delay": 1.0,
        }
        config = EngineConfig(
            seed=1,
            classifier="remote",
            classifier_url=mock_server.url,
            classifier_timeout=0.2,
            fallback_to_local=True,
        )
        engine = Engine(toy_index, config)
        session, _ = engine.start_session("cashewnut export licence for foodstuff")
        assert session.case_id == "nut_export"  # baseline routing, not the mock
        assert session.turn_log[0].used_fallback

    def test_classifier_failure_without_fallback_raises(self, mock_server, toy_index):
        mock_server.behavior["classify"] = {"status": 500, "body": {}}
        config = EngineConfig(
            seed=1, classifier="remote", classifier_url=mock_server.url
        )
        engine = Engine(toy_index, config)
        with pytest.raises(BackendError):
            engine.start_session("cashewnut export licence")

    def test_remote_classifier_route_without_fallback(self, mock_server, toy_index):
        mock_server.behavior["classify"] = {"body": {"logits": [0.0, 0.0, 5.0], "k": 3}}
        config = EngineConfig(
            seed=1, classifier="remote", classifier_url=mock_server.url
        )
        engine = Engine(toy_index, config)
        session, _ = engine.start_session("anything at all really")
        assert session.case_id == toy_index.corpus.case_ids[2]
        assert not session.turn_log[0].used_fallback

    def test_unreachable_embedder_with_fallback_uses_local(self, toy_index):
        config = EngineConfig(
            seed=1,
            embedder="remote",
            embedder_url="http://127.0.0.1:1",
            fallback_to_local=True,
        )
        engine = Engine(toy_index, config)
        session, _ = engine.start_session("rice hoarding in the godown")
        assert session.turn_log[0].used_fallback
        assert len(session.turn_log[0].candidates) == config.p

    def test_unreachable_embedder_without_fallback_raises(self, toy_index):
        config = EngineConfig(
            seed=1, embedder="remote", embedder_url="http://127.0.0.1:1"
        )
        engine = Engine(toy_index, config)
        with pytest.raises(BackendError) as excinfo:
            engine.start_session("rice hoarding in the godown")
        assert excinfo.value.cause == "unreachable"

    def test_unreachable_generator_with_fallback_uses_local(self, toy_index):
        config = EngineConfig(
            seed=1,
            generator="remote",
            generator_url="http://127.0.0.1:1",
            fallback_to_local=True,
        )
        engine = Engine(toy_index, config)
        session, _ = engine.start_session("rice hoarding in the godown")
        assert session.turn_log[0].used_fallback

    def test_service_maps_backend_failure_to_502(self, toy_index):
        from fastapi.testclient import TestClient

        from subcontext.service import ServiceConfig, create_app

        config = ServiceConfig(
            engine=EngineConfig(
                seed=1, classifier="remote", classifier_url="http://127.0.0.1:1",
                classifier_timeout=0.3,
            )
        )
        client = TestClient(create_app(toy_index, config))
        response = client.post("/sessions", json={"query": "rice hoarding"})
        assert response.status_code == 502
        assert response.json()["code"] == "backend_unavailable"
