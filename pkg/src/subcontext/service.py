"""HTTP facade over the engine: session lifecycle, messages, transcripts.

Every non-2xx response body is a structured error object with a
machine-readable code. Message responses carry the full turn record so
clients can show why a reply was chosen without recomputing anything.
"""

from __future__ import annotations

import json
import logging
import threading
from contextlib import asynccontextmanager
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .corpus import CorpusIndex, load_index
from .engine import Engine, EngineConfig, SessionState
from .errors import BackendError, InvalidArgumentError, InvalidStateError, PipelineError

logger = logging.getLogger(__name__)

ENV_PREFIX = "HUMBERT_"

_OVERRIDABLE = {"P": "p", "R": "r", "w": "w", "seed": "seed"}


@dataclass
class ServiceConfig:
    """Service-level settings plus the engine defaults they wrap."""

    host: str = "127.0.0.1"
    port: int = 8040
    index_path: str = "corpus.ndjson"
    cors_origins: list[str] = field(default_factory=lambda: ["*"])
    snapshot_path: str | None = None
    engine: EngineConfig = field(default_factory=EngineConfig)


def load_service_config(path: str | Path | None = None, env: dict | None = None) -> ServiceConfig:
    """Build a ServiceConfig from an optional TOML/JSON file plus env vars.

    File keys mirror the dataclass fields; engine settings live under an
    "engine" table. Environment variables override both layers with the
    HUMBERT_ prefix (e.g. HUMBERT_PORT, HUMBERT_P, HUMBERT_CLASSIFIER_URL).
    """
    raw: dict = {}
    if path is not None:
        text = Path(path).read_bytes()
        if str(path).endswith(".toml"):
            try:
                import tomllib  # Python >= 3.11
            except ModuleNotFoundError:
                import tomli as tomllib
            raw = tomllib.loads(text.decode("utf-8"))
        else:
            raw = json.loads(text.decode("utf-8"))
        if not isinstance(raw, dict):
            raise InvalidArgumentError("config file must contain an object/table")

    engine_raw = dict(raw.pop("engine", {}))
    service_fields = {f.name: f for f in fields(ServiceConfig) if f.name != "engine"}
    engine_fields = {f.name for f in fields(EngineConfig)}
    unknown = [k for k in raw if k not in service_fields]
    if unknown:
        raise InvalidArgumentError(f"unknown config keys: {sorted(unknown)}")
    unknown = [k for k in engine_raw if k not in engine_fields]
    if unknown:
        raise InvalidArgumentError(f"unknown engine config keys: {sorted(unknown)}")

    if env is None:
        import os

        env = dict(os.environ)
    for key, value in env.items():
        if not key.startswith(ENV_PREFIX):
            continue
        name = key[len(ENV_PREFIX) :].lower()
        if name in service_fields:
            raw[name] = _coerce(value, name)
        elif name in engine_fields:
            engine_raw[name] = _coerce(value, name)

    engine_config = EngineConfig(**engine_raw)
    return ServiceConfig(engine=engine_config, **raw)


def _coerce(value: str, name: str):
    """Best-effort typing for environment-variable overrides."""
    if name == "cors_origins":
        return [v.strip() for v in value.split(",") if v.strip()]
    lowered = value.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        pass
    return value


class SessionNotFoundError(PipelineError):
    """No session with the requested id."""

    def __init__(self, session_id: str):
        super().__init__(f"no session {session_id!r}")


class CreateSessionRequest(BaseModel):
    query: str
    config_overrides: dict | None = None


class MessageRequest(BaseModel):
    text: str


_ERROR_STATUS = {
    "invalid_argument": 400,
    "not_found": 404,
    "invalid_state": 409,
    "backend_unavailable": 502,
    "internal": 500,
}


def _error_response(code: str, message: str, detail: str | None = None) -> JSONResponse:
    body = {"code": code, "message": message}
    if detail:
        body["detail"] = detail
    return JSONResponse(status_code=_ERROR_STATUS[code], content=body)


@dataclass
class _SessionSlot:
    state: SessionState
    lock: threading.Lock = field(default_factory=threading.Lock)


def _session_overrides(base: EngineConfig, overrides: dict | None) -> EngineConfig:
    if not overrides:
        return base
    unknown = set(overrides) - set(_OVERRIDABLE)
    if unknown:
        raise InvalidArgumentError(
            f"unsupported config_overrides: {sorted(unknown)}; "
            f"allowed: {sorted(_OVERRIDABLE)}"
        )
    mapped = {}
    for key, value in overrides.items():
        if not isinstance(value, int) or isinstance(value, bool):
            raise InvalidArgumentError(f"config_overrides[{key!r}] must be an integer")
        mapped[_OVERRIDABLE[key]] = value
    return replace(base, **mapped)


def _turn_payload(record) -> dict:
    return record.to_dict()


def create_app(index: CorpusIndex, config: ServiceConfig | None = None) -> FastAPI:
    """Assemble the service around an already-loaded corpus index."""
    config = config or ServiceConfig()
    sessions: dict[str, _SessionSlot] = {}
    # Engines are cached per config so sessions with the same overrides share
    # case resources; the default engine covers sessions without overrides.
    engines: dict[tuple, Engine] = {}

    def engine_for(engine_config: EngineConfig) -> Engine:
        key = (engine_config.p, engine_config.r, engine_config.w, engine_config.seed)
        if key not in engines:
            engines[key] = Engine(index, engine_config)
        return engines[key]

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        if config.snapshot_path:
            _write_snapshot(sessions, config.snapshot_path)

    app = FastAPI(title="subcontext dialog service", lifespan=lifespan)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=config.cors_origins,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        return _error_response("invalid_argument", "invalid request body", str(exc.errors()))

    @app.exception_handler(PipelineError)
    async def on_pipeline_error(request: Request, exc: PipelineError):
        if isinstance(exc, SessionNotFoundError):
            return _error_response("not_found", str(exc))
        if isinstance(exc, BackendError):
            return _error_response("backend_unavailable", str(exc), exc.cause)
        if isinstance(exc, InvalidStateError):
            return _error_response("invalid_state", str(exc))
        if isinstance(exc, InvalidArgumentError):
            return _error_response("invalid_argument", str(exc))
        return _error_response("internal", str(exc))

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "cases": index.corpus.k}

    @app.get("/corpus/cases")
    async def corpus_cases():
        return {
            "cases": [
                {
                    "case_id": case.case_id,
                    "title": case.title,
                    "m": index.sentence_set(case.case_id).m,
                }
                for case in index.corpus.cases
            ]
        }

    @app.post("/sessions", status_code=201)
    async def create_session(body: CreateSessionRequest):
        engine_config = _session_overrides(config.engine, body.config_overrides)
        engine = engine_for(engine_config)
        state, reply = engine.start_session(body.query)
        sessions[state.session_id] = _SessionSlot(state=state)
        return {
            "session_id": state.session_id,
            "case_id": state.case_id,
            "m": state.m,
            "reply": reply,
            "turn": _turn_payload(state.turn_log[-1]),
        }

    def _slot(session_id: str) -> _SessionSlot:
        slot = sessions.get(session_id)
        if slot is None:
            raise SessionNotFoundError(session_id)
        return slot

    @app.post("/sessions/{session_id}/messages")
    async def post_message(session_id: str, body: MessageRequest):
        slot = _slot(session_id)
        with slot.lock:
            engine = engine_for(slot.state.config)
            reply = engine.step(slot.state, body.text)
            return {"reply": reply, "turn": _turn_payload(slot.state.turn_log[-1])}

    @app.get("/sessions/{session_id}/history")
    async def session_history(session_id: str):
        slot = _slot(session_id)
        return {
            "session_id": slot.state.session_id,
            "case_id": slot.state.case_id,
            "m": slot.state.m,
            "config": {
                "P": slot.state.config.p,
                "R": slot.state.config.r,
                "w": slot.state.config.w,
                "seed": slot.state.config.seed,
            },
            "turns": [_turn_payload(t) for t in slot.state.turn_log],
        }

    return app


def _write_snapshot(sessions: dict[str, _SessionSlot], path: str) -> None:
    """Dump every session's turn log as newline-JSON on shutdown."""
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for slot in sessions.values():
                fh.write(
                    json.dumps(
                        {
                            "session_id": slot.state.session_id,
                            "case_id": slot.state.case_id,
                            "turns": [t.to_dict() for t in slot.state.turn_log],
                        },
                        ensure_ascii=False,
                    )
                    + "\n"
                )
        logger.info("wrote %d session snapshots to %s", len(sessions), path)
    except OSError:
        logger.warning("failed to write session snapshot to %s", path, exc_info=True)


def run_service(config: ServiceConfig) -> None:
    """Load the corpus index and serve until interrupted."""
    import uvicorn

    index = load_index(config.index_path)
    app = create_app(index, config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
