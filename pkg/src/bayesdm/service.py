"""HTTP session API for live consultations.

Sessions are held in memory with TTL expiry. The dialogue manager always
runs greedy here, so consultations are deterministic and reproducible.
Every error is a uniform {code, message, details} envelope. Each answer
must name the turn it replies to, so concurrent answers to one session
serialize: exactly one wins, the rest get 409.
"""

from __future__ import annotations

import difflib
import threading
import time
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .checkpoint import Checkpoint, catalog_hash
from .dialogue import GREEDY, DialogueConfig, Model, SymptomState, TurnTrace, UNKNOWN, POSITIVE, NEGATIVE, apply_answer, explain, step
from .evaluation import report
from .inquiry import ExhaustionError

DEFAULT_TTL_SECONDS = 30 * 60

AWAITING = "awaiting_answer"
DIAGNOSED = "diagnosed"
EXPIRED = "expired"


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, details: dict | None = None):
        self.status = status
        self.code = code
        self.message = message
        self.details = details or {}


class CreateSessionBody(BaseModel):
    symptoms: dict[str, bool]


class AnswerBody(BaseModel):
    answer: bool
    turn: int | None = None  # guards against answering a stale question


@dataclass
class Session:
    id: str
    state: SymptomState
    traces: list[TurnTrace] = field(default_factory=list)
    status: str = AWAITING
    pending: int | None = None
    report: dict | None = None
    created_at: float = field(default_factory=time.time)
    last_active: float = field(default_factory=time.time)
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionStore:
    def __init__(self, ttl_seconds: float = DEFAULT_TTL_SECONDS):
        self.ttl = ttl_seconds
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def add(self, session: Session) -> None:
        with self._lock:
            self._sessions[session.id] = session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise ApiError(404, "session_not_found", f"no session {session_id}")
        if session.status != EXPIRED and time.time() - session.last_active > self.ttl:
            session.status = EXPIRED
        return session

    def sweep(self) -> None:
        now = time.time()
        with self._lock:
            for s in self._sessions.values():
                if s.status != EXPIRED and now - s.last_active > self.ttl:
                    s.status = EXPIRED


def create_app(checkpoint: Checkpoint | None, static_dir: str | None = None,
               ttl_seconds: float = DEFAULT_TTL_SECONDS) -> FastAPI:
    app = FastAPI(title="bayesdm consultation service")
    store = SessionStore(ttl_seconds)
    model: Model | None = checkpoint.model if checkpoint else None
    config: DialogueConfig = checkpoint.dialogue_config if checkpoint else DialogueConfig()

    @app.exception_handler(ApiError)
    async def on_api_error(_req: Request, err: ApiError):
        return JSONResponse(status_code=err.status, content={
            "code": err.code, "message": err.message, "details": err.details})

    def require_model() -> Model:
        if model is None:
            raise ApiError(503, "no_model", "no model checkpoint is loaded")
        return model

    def advance(session: Session) -> None:
        """Run one manager step; leaves a pending question or a diagnosis."""
        try:
            res = step(session.state, model, config, mode=GREEDY)
        except ExhaustionError:
            # cannot occur: the stop rule diagnoses before exhaustion
            raise ApiError(500, "internal", "no queryable symptom left")
        session.traces.append(res.trace)
        if res.action.kind == "diagnose":
            rep = report(res.trace, session.state, model.graph)
            session.status = DIAGNOSED
            session.pending = None
            session.report = {
                "disease": model.catalog.diseases[rep.disease],
                "confidence": rep.confidence,
                "supporting_symptoms": [model.catalog.symptoms[j]
                                        for j in rep.supporting_symptoms],
                "stop_reason": res.trace.stop_reason,
            }
        else:
            session.pending = res.action.index
            session.status = AWAITING

    def snapshot(session: Session) -> dict:
        m = require_model()
        return {
            "id": session.id,
            "status": session.status,
            "turn": session.state.turn,
            "question": (None if session.pending is None else {
                "symptom": m.catalog.symptoms[session.pending],
                "turn": session.state.turn,
            }),
            "report": session.report,
            "trace_history": [explain(t, m.catalog, m.graph) for t in session.traces],
            "created_at": session.created_at,
            "last_active": session.last_active,
        }

    @app.post("/api/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        m = require_model()
        if not body.symptoms:
            raise ApiError(422, "empty_symptoms", "at least one initial symptom is required")
        values = [UNKNOWN] * m.catalog.n
        for name, positive in body.symptoms.items():
            try:
                j = m.catalog.symptom_id(name)
            except Exception:
                candidates = difflib.get_close_matches(name, m.catalog.symptoms, n=3)
                raise ApiError(422, "unknown_symptom",
                               f"unknown symptom {name!r}",
                               {"candidates": candidates}) from None
            values[j] = POSITIVE if positive else NEGATIVE
        session = Session(id=uuid.uuid4().hex, state=SymptomState(values=values, turn=1))
        with session.lock:
            advance(session)
        store.add(session)
        store.sweep()
        return snapshot(session)

    @app.post("/api/sessions/{session_id}/answer")
    def answer(session_id: str, body: AnswerBody):
        require_model()
        session = store.get(session_id)
        with session.lock:
            if session.status == DIAGNOSED:
                raise ApiError(409, "already_diagnosed", "session already produced a diagnosis")
            if session.status == EXPIRED:
                raise ApiError(409, "expired", "session expired")
            if session.pending is None:
                raise ApiError(409, "no_pending_question", "nothing to answer")
            if body.turn is not None and body.turn != session.state.turn:
                raise ApiError(409, "stale_answer",
                               "answer does not match the pending question",
                               {"expected_turn": session.state.turn})
            session.state = apply_answer(session.state, session.pending, body.answer)
            session.pending = None
            session.last_active = time.time()
            advance(session)
            return snapshot(session)

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        require_model()
        return snapshot(store.get(session_id))

    @app.get("/api/sessions/{session_id}/explain")
    def explain_session(session_id: str):
        m = require_model()
        session = store.get(session_id)
        return {"id": session.id,
                "turns": [explain(t, m.catalog, m.graph) for t in session.traces]}

    @app.get("/api/catalog")
    def get_catalog():
        m = require_model()
        return {"diseases": list(m.catalog.diseases), "symptoms": list(m.catalog.symptoms)}

    @app.get("/api/model/meta")
    def model_meta():
        m = require_model()
        return {
            "catalog_hash": catalog_hash(m.catalog),
            "epsilon_d": config.epsilon_d,
            "t_max": config.t_max,
            "n_diseases": m.catalog.m,
            "n_symptoms": m.catalog.n,
        }

    if static_dir:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="console")

    return app
