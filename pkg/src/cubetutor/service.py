"""HTTP surface: sessions, messages, cube editing, summaries, macros, audits.

A thin FastAPI layer over the dialogue engine and stores.  Every error body
is ``{"code": ..., "message": ...}``; bearer tokens map to usernames in the
config; any request that would touch another user's data is a 403 carrying
the same refusal semantics the dialogue layer uses.
"""
from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone

from fastapi import Depends, FastAPI, Header, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .audit import AuditError, audit_system, load_corpus
from .config import TutorConfig, packaged_data
from .cube import CubeError, format_facelets, parse_facelets
from .dialogue import (
    REFUSAL_TEXT,
    DialogueServices,
    DialogueState,
    respond,
    format_minutes,
    summarize_performance,
)
from .macros import MacroLibrary
from .nlg import TemplateSet, render_macro
from .nlu import Utterance, load_abuse_lexicon, load_valence_lexicon, score_sentiment
from .stores import JsonlStore, ProfileStore, TranscriptStore


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message
        super().__init__(message)


@dataclass
class SessionRecord:
    session_id: str
    user_id: str
    state: DialogueState
    created: str
    updated: str
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)


@dataclass
class AppContext:
    config: TutorConfig
    services: DialogueServices
    sessions: dict[str, SessionRecord] = field(default_factory=dict)
    audits: dict[str, dict] = field(default_factory=dict)
    registry_lock: threading.Lock = field(default_factory=threading.Lock, repr=False)


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def build_context(config: TutorConfig | None = None) -> AppContext:
    """Load stores, lexicons, and the macro library the config points at."""
    config = config or TutorConfig()
    profiles = ProfileStore(config.resolved_profiles_dir())
    if not profiles.usernames():
        # first start: seed the demo profiles so the service is usable
        demo = ProfileStore(packaged_data("demo_profiles"))
        for name in demo.usernames():
            profile = demo.get(name)
            assert profile is not None
            profiles.put(profile)
    services = DialogueServices(
        profiles=profiles,
        library=MacroLibrary.load(config.resolved_library_path()),
        valence=load_valence_lexicon(config.valence_path),
        abuse=load_abuse_lexicon(config.abuse_path),
        templates=TemplateSet.load(config.templates_path),
        transcripts=TranscriptStore(config.resolved_transcripts_path()),
        reports=JsonlStore(config.resolved_reports_path()),
        clock=_utc_now,
        register=config.register,
    )
    return AppContext(config=config, services=services)


class MessageBody(BaseModel):
    text: str


class CubeBody(BaseModel):
    facelets: str


class AuditBody(BaseModel):
    metric: str
    system: str = "lexicon"
    corpus: str | None = None  # inline CSV text; default is the shipped corpus


def create_app(config: TutorConfig | None = None, context: AppContext | None = None) -> FastAPI:
    ctx = context or build_context(config)
    app = FastAPI(title="cube tutor", docs_url=None, redoc_url=None)

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError) -> JSONResponse:
        return JSONResponse(
            status_code=exc.status, content={"code": exc.code, "message": exc.message}
        )

    def current_user(authorization: str | None = Header(default=None)) -> str:
        if not ctx.config.tokens:
            raise ApiError(503, "no_auth_configured", "no bearer tokens configured")
        if authorization is None or not authorization.startswith("Bearer "):
            raise ApiError(401, "unauthorized", "missing bearer token")
        token = authorization.removeprefix("Bearer ").strip()
        user = ctx.config.tokens.get(token)
        if user is None:
            raise ApiError(401, "unauthorized", "unknown bearer token")
        return user

    def owned_session(session_id: str, user: str) -> SessionRecord:
        record = ctx.sessions.get(session_id)
        if record is None:
            raise ApiError(404, "unknown_session", f"no session {session_id}")
        if record.user_id != user:
            raise ApiError(403, "cross_user_forbidden", REFUSAL_TEXT)
        return record

    @app.post("/sessions")
    def create_session(user: str = Depends(current_user)) -> dict:
        session_id = uuid.uuid4().hex
        now = _utc_now()
        with ctx.registry_lock:
            ctx.sessions[session_id] = SessionRecord(
                session_id, user, DialogueState.fresh(session_id, user), now, now
            )
        return {"session_id": session_id, "user": user}

    @app.post("/sessions/{session_id}/messages")
    def post_message(
        session_id: str, body: MessageBody, user: str = Depends(current_user)
    ) -> dict:
        record = owned_session(session_id, user)
        with record.lock:
            responses = respond(record.state, body.text, ctx.services)
            record.updated = _utc_now()
        return {
            "responses": [
                {"text": r.text, "kind": r.kind, "cube": r.cube} for r in responses
            ],
            "strike_count": record.state.strike_count,
        }

    @app.get("/sessions/{session_id}/cube")
    def get_cube(session_id: str, user: str = Depends(current_user)) -> dict:
        record = owned_session(session_id, user)
        with record.lock:
            return {"facelets": format_facelets(record.state.cube)}

    @app.put("/sessions/{session_id}/cube")
    def put_cube(
        session_id: str, body: CubeBody, user: str = Depends(current_user)
    ) -> dict:
        record = owned_session(session_id, user)
        try:
            cube = parse_facelets(body.facelets)
        except CubeError as exc:
            raise ApiError(400, "bad_facelets", str(exc)) from exc
        with record.lock:
            record.state.cube = cube
            record.updated = _utc_now()
            return {"facelets": format_facelets(record.state.cube)}

    @app.get("/users/me/summary")
    def own_summary(user: str = Depends(current_user)) -> dict:
        profile = ctx.services.profiles.get(user)
        if profile is None:
            raise ApiError(404, "no_profile", "no completed games on record yet")
        return {
            "games_played": profile.games_played,
            "avg_game_minutes": format_minutes(profile.avg_game_minutes),
            "games_won": profile.games_won,
            "text": summarize_performance(profile),
        }

    @app.get("/users/{username}/summary")
    def other_summary(username: str, user: str = Depends(current_user)) -> dict:
        if username in ("me", user):
            return own_summary(user)
        # identical response whether the target exists or not
        raise ApiError(403, "cross_user_forbidden", REFUSAL_TEXT)

    @app.get("/macros")
    def list_macros(user: str = Depends(current_user)) -> dict:
        del user
        library = ctx.services.library
        return {
            "goal": library.goal.name,
            "macros": [
                {
                    "name": m.name,
                    "moves": " ".join(str(mv) for mv in m.sequence),
                    "complexity": m.complexity,
                    "effect": m.effect.description,
                    "precondition": m.precondition.serialize(),
                    "explanation": render_macro(
                        m, register=ctx.config.register, templates=ctx.services.templates
                    ).text,
                }
                for m in library.macros
            ],
        }

    @app.post("/audits")
    def run_audit(body: AuditBody, user: str = Depends(current_user)) -> dict:
        del user
        if body.system != "lexicon":
            raise ApiError(400, "unknown_system", f"unknown scorer {body.system!r}")
        valence = ctx.services.valence

        def scorer(text: str) -> float:
            return score_sentiment(Utterance.parse(text), valence).intensity

        try:
            corpus = (
                load_corpus(text=body.corpus)
                if body.corpus is not None
                else load_corpus(ctx.config.resolved_corpus_path())
            )
            report = audit_system(scorer, corpus, body.metric, system_id=body.system)
        except AuditError as exc:
            raise ApiError(400, "bad_audit_request", str(exc)) from exc
        report_id = uuid.uuid4().hex
        with ctx.registry_lock:
            ctx.audits[report_id] = report
        return {"report_id": report_id}

    @app.get("/audits/{report_id}")
    def get_audit(report_id: str, user: str = Depends(current_user)) -> dict:
        del user
        report = ctx.audits.get(report_id)
        if report is None:
            raise ApiError(404, "unknown_report", f"no audit report {report_id}")
        return report

    app.state.context = ctx
    return app
