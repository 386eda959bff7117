"""JSON-over-HTTP service wrapping the game engine, with event-sourced persistence.

The engine is the single authority: every endpoint delegates to it and every
state change lands in the append-only event log before it is applied, so a
restart replays the log and resumes mid-round. Timing is server-side; client
timestamps are never trusted.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from fastapi import FastAPI, Header, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import __version__
from .corpus import CorpusError, CorpusStore
from .events import EventLog, EventLogError, EventRecord, read_events
from .game import (
    GameConfig,
    GameEngine,
    GameError,
    RoundExpiredError,
    ScoreEvent,
)
from .retrieval import PassageRetriever, SparseIndex

ENV_PREFIX = "CLAIMARENA_"


@dataclass(frozen=True)
class ApiSession:
    """One issued interaction handle: an authoring session or a voting round.

    Player ids are opaque tokens carrying no personal data; expired handles
    are rejected by the engine.
    """

    player_id: str
    role: str  # "author" | "voter"
    expiry: float


def api_session(engine: GameEngine, handle_id: str) -> ApiSession:
    """Resolve a session or round id to its ApiSession view."""
    session = engine.sessions.get(handle_id)
    if session is not None:
        return ApiSession(
            session.player_id,
            "author",
            session.created_at + engine.config.session_ttl_seconds,
        )
    round_ = engine.rounds.get(handle_id)
    if round_ is not None:
        return ApiSession(round_.voter_id, "voter", round_.started_at + round_.pot)
    raise KeyError(f"unknown handle {handle_id!r}")


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    corpus_dir: str = "corpus"
    sparse_index_path: str = "sparse.idx"
    event_log_path: str = "events.jsonl"
    pot: int = 120
    hint_cost: int = 30
    like_bonus: int = 10
    flag_threshold: int = 1
    author_split: str = "equal"
    session_ttl_seconds: int = 7200
    seed: int = 0

    @classmethod
    def from_file(cls, path: Optional[str | Path] = None, env: Optional[dict] = None) -> "ServiceConfig":
        """Config file values overridden by CLAIMARENA_* environment variables."""
        values: dict = {}
        if path is not None:
            values.update(json.loads(Path(path).read_text(encoding="utf-8")))
        env = os.environ if env is None else env
        for name, f in cls.__dataclass_fields__.items():
            raw = env.get(ENV_PREFIX + name.upper())
            if raw is None:
                continue
            kind = f.type if isinstance(f.type, type) else type(f.default)
            values[name] = int(raw) if kind is int else raw
        known = set(cls.__dataclass_fields__)
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**values)

    def game_config(self) -> GameConfig:
        return GameConfig(
            pot=self.pot,
            hint_cost=self.hint_cost,
            like_bonus=self.like_bonus,
            flag_threshold=self.flag_threshold,
            author_split=self.author_split,
            session_ttl_seconds=self.session_ttl_seconds,
            seed=self.seed,
        )


def replay(records, corpus: CorpusStore, retriever: PassageRetriever,
           config: Optional[GameConfig] = None,
           clock: Callable[[], float] = time.time) -> GameEngine:
    """Rebuild engine state from an event stream (a path or an iterable of records)."""
    if isinstance(records, (str, Path)):
        records = read_events(records)
    engine = GameEngine(corpus, retriever, config, event_log=None, clock=clock)
    for record in records:
        engine.apply_record(record)
    return engine


def build_engine(config: ServiceConfig, clock: Callable[[], float] = time.time) -> GameEngine:
    """Open the corpus and index, replay any existing event log, and resume appending to it."""
    corpus = CorpusStore(config.corpus_dir)
    if len(corpus) == 0:
        raise CorpusError(f"corpus at {config.corpus_dir} is empty; ingest first")
    index_path = Path(config.sparse_index_path)
    if not index_path.exists():
        raise CorpusError(f"sparse index not found at {index_path}; build it first")
    retriever = PassageRetriever(corpus, SparseIndex.load(index_path))
    log_path = Path(config.event_log_path)
    engine = None
    if log_path.exists():
        engine = replay(log_path, corpus, retriever, config.game_config(), clock=clock)
    log = EventLog(log_path, clock=clock)
    if engine is None:
        engine = GameEngine(corpus, retriever, config.game_config(), event_log=log, clock=clock)
    else:
        engine.event_log = log
    return engine


# ----------------------------------------------------------------------
# request bodies
# ----------------------------------------------------------------------


class AuthorStartBody(BaseModel):
    category: Optional[str] = None


class AuthorRetrieveBody(BaseModel):
    session_id: str
    draft: str
    gold_passage_id: Optional[str] = None


class AuthorSubmitBody(BaseModel):
    session_id: str
    text: str
    label: str
    spans: list[str]
    strategy_tags: list[str] = []


class VoteStartBody(BaseModel):
    category: Optional[str] = None


class RoundBody(BaseModel):
    round_id: str


class AnswerBody(BaseModel):
    round_id: str
    claim_id: Optional[str] = None  # null resolves an expired round as unanswered


class LikeBody(BaseModel):
    round_id: str
    claim_id: str


class FlagBody(BaseModel):
    claim_id: str
    reason: str


def _score_view(event: ScoreEvent) -> dict:
    return {
        "round_id": event.round_id,
        "voter_points": event.voter_points,
        "author_points": event.author_points_map(),
        "claim_ids": list(event.claim_ids),
        "liked": event.liked,
    }


def create_app(engine: GameEngine, version: str = __version__) -> FastAPI:
    app = FastAPI(title="claimarena", version=version)
    app.state.engine = engine

    @app.exception_handler(GameError)
    async def game_error_handler(request: Request, exc: GameError):
        if isinstance(exc, RoundExpiredError):
            return JSONResponse(
                status_code=200,
                content={"expired": True, "score": _score_view(exc.score_event)},
            )
        return JSONResponse(status_code=409, content={"error": str(exc)})

    @app.exception_handler(CorpusError)
    async def corpus_error_handler(request: Request, exc: CorpusError):
        return JSONResponse(status_code=404, content={"error": str(exc)})

    @app.get("/health")
    def health():
        stats = engine.corpus.stats()
        return {
            "status": "ok",
            "version": version,
            "passage_count": stats.passage_count,
            "page_count": stats.page_count,
            "token_total": stats.token_total,
        }

    @app.get("/categories")
    def categories():
        return {"categories": engine.corpus.categories()}

    @app.post("/author/start")
    def author_start(body: AuthorStartBody, x_player_id: str = Header(default="anon")):
        session = engine.start_authoring(x_player_id, body.category)
        passages = [engine.corpus.get_passage(pid) for pid in session.page.passage_ids]
        return {
            "session_id": session.session_id,
            "page": {
                "title": session.page.title,
                "category": session.page.category,
                "passages": [{"id": p.id, "text": p.text} for p in passages],
            },
        }

    @app.post("/author/retrieve")
    def author_retrieve(body: AuthorRetrieveBody):
        result = engine.live_retrieve(
            body.session_id, body.draft, gold_passage_id=body.gold_passage_id
        )
        return {
            "hits": [
                {
                    "passage_id": h.passage_id,
                    "page_title": h.page_title,
                    "text": h.text,
                    "score": h.score,
                    "rank": h.rank,
                    "highlights": [list(pair) for pair in h.highlights],
                }
                for h in result.hits
            ],
            "gold_rank": result.gold_rank,
        }

    @app.post("/author/submit")
    def author_submit(body: AuthorSubmitBody):
        claim = engine.submit_claim(
            body.session_id,
            body.text,
            body.label,
            body.spans,
            strategy_tags=tuple(body.strategy_tags),
        )
        return {
            "claim_id": claim.id,
            "label": claim.label,
            "gold_evidence": [
                {
                    "page": s.page_title,
                    "text": s.text,
                    "passage_id": s.passage_id,
                    "precision": s.precision,
                }
                for s in claim.gold_evidence
            ],
        }

    @app.post("/vote/start")
    def vote_start(body: VoteStartBody, x_player_id: str = Header(default="anon")):
        round_ = engine.start_vote(x_player_id, body.category)
        claims = [engine.claims[cid] for cid in round_.display_order]
        return {
            "round_id": round_.round_id,
            "pot": round_.pot,
            "remaining": engine.remaining_pot(round_.round_id),
            "claims": [{"id": c.id, "text": c.text} for c in claims],
        }

    @app.post("/vote/hint")
    def vote_hint(body: RoundBody):
        passage = engine.request_hint(body.round_id)
        round_ = engine.rounds[body.round_id]
        return {
            "passage": {"id": passage.id, "title": passage.page_title, "text": passage.text},
            "hints_taken": round_.hints_taken,
            "remaining": engine.remaining_pot(body.round_id),
        }

    @app.post("/vote/answer")
    def vote_answer(body: AnswerBody):
        event = engine.score_vote(body.round_id, body.claim_id)
        round_ = engine.rounds[body.round_id]
        outcome = round_.outcome
        return {
            "correct": outcome.correct,
            "unanswered": outcome.unanswered,
            "refuted_claim_id": round_.refuted_claim_id,
            "score": _score_view(event),
        }

    @app.post("/vote/like")
    def vote_like(body: LikeBody):
        event = engine.record_like(body.round_id, body.claim_id)
        return {"score": _score_view(event), "bonus": engine.config.like_bonus}

    @app.post("/flag")
    def flag(body: FlagBody, x_player_id: str = Header(default="anon")):
        claim = engine.flag_claim(body.claim_id, x_player_id, body.reason)
        return {
            "claim_id": claim.id,
            "flags": [{"flagger_id": f, "reason": r} for f, r in claim.flags],
        }

    @app.get("/leaderboard")
    def leaderboard():
        return {
            "players": [
                {"player_id": pid, "points": pts} for pid, pts in engine.leaderboard()
            ]
        }

    @app.get("/stats")
    def stats():
        corpus_stats = engine.corpus.stats()
        resolved = sum(1 for r in engine.rounds.values() if r.outcome is not None)
        return {
            "passage_count": corpus_stats.passage_count,
            "page_count": corpus_stats.page_count,
            "claims": len(engine.claims),
            "rounds_started": len(engine.rounds),
            "rounds_resolved": resolved,
            "events": engine.event_log.last_seq if engine.event_log else 0,
        }

    return app


def serve(config: ServiceConfig) -> None:
    """Build the engine from config and run the HTTP service until shutdown."""
    import uvicorn

    engine = build_engine(config)
    app = create_app(engine)
    uvicorn.run(app, host=config.host, port=config.port)
