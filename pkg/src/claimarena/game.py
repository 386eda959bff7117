"""The two-phase claim game: authoring with live retrieval, timed voting, and the point economy.

Every round carries a pot of 120 points. A point corresponds to a second of
the two-minute timer; each hint costs 30 of them. A correct voter keeps what
is left and the authors take the rest, so correct rounds are exactly zero-sum.
Incorrect voters get nothing and award nothing.

All state changes flow through a decide/apply split: a mutating call first
validates and computes a full event payload, appends it to the event log, and
only then applies it. Replaying a log therefore reconstructs identical state.
Authoring sessions are ephemeral and are not evented.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

from . import alignment
from .corpus import CorpusStore, Page
from .events import EventLog, EventRecord
from .retrieval import PassageRetriever, RankedHit, highlight_overlap

LABELS = ("entailed", "refuted")

DEFAULT_POT = 120
DEFAULT_HINT_COST = 30


class GameError(Exception):
    pass


class UnknownClaimError(GameError):
    pass


class UnknownRoundError(GameError):
    pass


class UnknownSessionError(GameError):
    pass


class SessionClosedError(GameError):
    pass


class SpanError(GameError):
    def __init__(self, message: str, span_index: Optional[int] = None):
        super().__init__(message)
        self.span_index = span_index


class InsufficientClaimsError(GameError):
    pass


class RoundClosedError(GameError):
    pass


class RoundExpiredError(GameError):
    """Raised when a timed-out round is auto-resolved; carries the resolution."""

    def __init__(self, score_event: "ScoreEvent"):
        super().__init__("round expired: pot awarded to authors")
        self.score_event = score_event


class HintRefusedError(GameError):
    pass


class LikeError(GameError):
    pass


@dataclass
class GameConfig:
    pot: int = DEFAULT_POT
    hint_cost: int = DEFAULT_HINT_COST
    like_bonus: int = 10
    flag_threshold: int = 1
    author_split: str = "equal"  # or "refuted_only"
    hint_pool_k: int = 8
    live_k: int = 5
    session_ttl_seconds: float = 7200.0
    seed: int = 0


@dataclass(frozen=True)
class EvidenceSpan:
    page_title: str
    text: str
    passage_id: Optional[str]
    precision: float = 0.0


@dataclass(frozen=True)
class Claim:
    id: str
    author_id: str
    text: str
    label: str
    gold_evidence: tuple[EvidenceSpan, ...]
    category: str
    created_at: float
    flags: tuple[tuple[str, str], ...] = ()  # (flagger_id, reason)
    strategy_tags: tuple[str, ...] = ()


@dataclass(frozen=True)
class HitView:
    passage_id: str
    page_title: str
    text: str
    score: float
    rank: int
    highlights: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class LiveRetrieval:
    hits: tuple[HitView, ...]
    gold_rank: Optional[int]


@dataclass
class AuthoringSession:
    session_id: str
    player_id: str
    page: Page
    category: str
    created_at: float = 0.0
    draft: str = ""
    marked_gold: Optional[str] = None
    last_retrieval: Optional[LiveRetrieval] = None
    open: bool = True


@dataclass
class RoundOutcome:
    choice: Optional[str]
    correct: Optional[bool]
    elapsed_seconds: float
    unanswered: bool = False


@dataclass
class VotingRound:
    round_id: str
    voter_id: str
    category: Optional[str]
    entailed_claim_id: str
    refuted_claim_id: str
    display_order: tuple[str, str]
    pot: int
    started_at: float
    hint_pool: tuple[str, ...]
    hints_taken: int = 0
    evidence_revealed: list[str] = field(default_factory=list)
    outcome: Optional[RoundOutcome] = None
    liked: Optional[str] = None

    @property
    def claim_pair(self) -> tuple[str, str]:
        return (self.entailed_claim_id, self.refuted_claim_id)


@dataclass(frozen=True)
class ScoreEvent:
    round_id: str
    voter_id: str
    voter_points: int
    author_points: tuple[tuple[str, int], ...]
    claim_ids: tuple[str, str]
    liked: Optional[str] = None

    def author_points_map(self) -> dict[str, int]:
        return dict(self.author_points)

    @property
    def total_author_points(self) -> int:
        return sum(p for _, p in self.author_points)


def split_pot(
    correct: bool,
    elapsed_seconds: float,
    hints_taken: int,
    *,
    pot: int = DEFAULT_POT,
    hint_cost: int = DEFAULT_HINT_COST,
    author_split: str = "equal",
) -> tuple[int, tuple[int, int]]:
    """Point split for a resolved round.

    Returns ``(voter_points, (entailed_author_points, refuted_author_points))``.
    Correct outcomes split the full pot (zero-sum); incorrect outcomes award
    nothing to anyone. Elapsed time is floored to whole seconds and the
    remaining pot is clamped at zero.
    """
    if elapsed_seconds < 0:
        raise ValueError("elapsed_seconds must be >= 0")
    if hints_taken < 0:
        raise ValueError("hints_taken must be >= 0")
    if not correct:
        return 0, (0, 0)
    remaining = max(0, pot - int(math.floor(elapsed_seconds)) - hint_cost * hints_taken)
    author_pot = pot - remaining
    if author_split == "refuted_only":
        return remaining, (0, author_pot)
    half = author_pot // 2
    # Odd point goes to the entailed claim's author.
    return remaining, (half + author_pot % 2, half)


def _author_split_full_pot(pot: int, author_split: str) -> tuple[int, int]:
    if author_split == "refuted_only":
        return (0, pot)
    half = pot // 2
    return (half + pot % 2, half)


class GameEngine:
    """Holds all live game state and funnels every mutation through the event log."""

    def __init__(
        self,
        corpus: CorpusStore,
        retriever: PassageRetriever,
        config: Optional[GameConfig] = None,
        event_log: Optional[EventLog] = None,
        clock: Callable[[], float] = time.time,
    ):
        self.corpus = corpus
        self.retriever = retriever
        self.config = config or GameConfig()
        self.event_log = event_log
        self.clock = clock
        self._rng = random.Random(self.config.seed)
        self.claims: dict[str, Claim] = {}
        self.rounds: dict[str, VotingRound] = {}
        self.sessions: dict[str, AuthoringSession] = {}
        self.score_events: list[ScoreEvent] = []
        self._score_event_index: dict[str, int] = {}
        self.ledger: dict[str, int] = {}
        self.shown_counts: dict[str, int] = {}
        self._session_counter = 0
        self._claim_counter = 0
        self._round_counter = 0

    # ------------------------------------------------------------------
    # event plumbing
    # ------------------------------------------------------------------

    def _commit(self, kind: str, payload: dict) -> None:
        if self.event_log is not None:
            self.event_log.append(kind, payload)
        self._apply(kind, payload)

    def apply_record(self, record: EventRecord) -> None:
        """Apply an already-logged event during replay (no re-append)."""
        self._apply(record.kind, record.payload)

    def _apply(self, kind: str, payload: dict) -> None:
        getattr(self, f"_apply_{kind}")(payload)

    # ------------------------------------------------------------------
    # authoring
    # ------------------------------------------------------------------

    def start_authoring(self, player_id: str, category: Optional[str] = None) -> AuthoringSession:
        page = self.corpus.sample_page(category, rng_seed=self._rng.randrange(1 << 62))
        self._session_counter += 1
        session = AuthoringSession(
            session_id=f"s{self._session_counter:06d}",
            player_id=player_id,
            page=page,
            category=page.category,
            created_at=self.clock(),
        )
        self.sessions[session.session_id] = session
        return session

    def live_retrieve(
        self,
        session_id: str,
        draft_text: str,
        k: Optional[int] = None,
        gold_passage_id: Optional[str] = None,
    ) -> LiveRetrieval:
        session = self._open_session(session_id)
        session.draft = draft_text
        if gold_passage_id is not None:
            session.marked_gold = gold_passage_id
        k = k or self.config.live_k
        hits = self.retriever.query(draft_text, k) if draft_text.strip() else []
        views = []
        gold = session.marked_gold
        gold_rank = None
        for hit in hits:
            passage = self.retriever.passage(hit.passage_id)
            views.append(
                HitView(
                    passage_id=hit.passage_id,
                    page_title=passage.page_title,
                    text=passage.text,
                    score=hit.score,
                    rank=hit.rank,
                    highlights=tuple(sorted(highlight_overlap(draft_text, passage))),
                )
            )
            if gold is not None and hit.passage_id == gold:
                gold_rank = hit.rank
        result = LiveRetrieval(tuple(views), gold_rank)
        session.last_retrieval = result
        return result

    def submit_claim(
        self,
        session_id: str,
        text: str,
        label: str,
        evidence_spans: list[str],
        strategy_tags: tuple[str, ...] = (),
    ) -> Claim:
        session = self._open_session(session_id)
        if not text or not text.strip():
            raise GameError("claim text must be non-empty")
        if label not in LABELS:
            raise GameError(f"label must be one of {LABELS}, got {label!r}")
        if not 1 <= len(evidence_spans) <= 2:
            raise SpanError(f"claims carry 1 or 2 evidence spans, got {len(evidence_spans)}")

        page_passages = [self.corpus.get_passage(pid) for pid in session.page.passage_ids]
        spans = []
        for idx, span_text in enumerate(evidence_spans):
            if not span_text or not any(span_text in p.text for p in page_passages):
                raise SpanError(
                    f"span {idx} is not a substring of any passage on page "
                    f"{session.page.title!r}",
                    span_index=idx,
                )
            result = alignment.align_evidence(
                span_text, self.corpus, candidate_passages=session.page.passage_ids
            )
            spans.append(
                {
                    "page_title": session.page.title,
                    "text": span_text,
                    "passage_id": result.best_passage_id,
                    "precision": result.precision,
                }
            )

        self._claim_counter += 1
        claim_id = f"c{self._claim_counter:06d}"
        payload = {
            "id": claim_id,
            "author_id": session.player_id,
            "text": text,
            "label": label,
            "gold_evidence": spans,
            "category": session.category,
            "created_at": self.clock(),
            "strategy_tags": list(strategy_tags),
        }
        self._commit("claim_submitted", payload)
        session.open = False
        return self.claims[claim_id]

    def _apply_claim_submitted(self, payload: dict) -> None:
        claim = Claim(
            id=payload["id"],
            author_id=payload["author_id"],
            text=payload["text"],
            label=payload["label"],
            gold_evidence=tuple(
                EvidenceSpan(s["page_title"], s["text"], s["passage_id"], s["precision"])
                for s in payload["gold_evidence"]
            ),
            category=payload["category"],
            created_at=payload["created_at"],
            strategy_tags=tuple(payload.get("strategy_tags", ())),
        )
        self.claims[claim.id] = claim
        self.shown_counts.setdefault(claim.id, 0)
        # Keep id counters ahead of replayed ids.
        self._claim_counter = max(self._claim_counter, int(claim.id[1:]))

    # ------------------------------------------------------------------
    # voting
    # ------------------------------------------------------------------

    def _eligible_claims(self, voter_id: str, category: Optional[str]) -> dict[str, list[Claim]]:
        pools: dict[str, list[Claim]] = {label: [] for label in LABELS}
        for claim in self.claims.values():
            if claim.author_id == voter_id:
                continue
            if category is not None and claim.category != category:
                continue
            if len(claim.flags) >= self.config.flag_threshold:
                continue
            pools[claim.label].append(claim)
        return pools

    def start_vote(self, voter_id: str, category: Optional[str] = None) -> VotingRound:
        pools = self._eligible_claims(voter_id, category)
        for label in LABELS:
            if not pools[label]:
                raise InsufficientClaimsError(
                    f"no eligible {label} claims"
                    + (f" in category {category!r}" if category else "")
                )
        picked = {}
        for label in LABELS:
            # Least-voted-first keeps vote coverage even across claims.
            least = min(self.shown_counts[c.id] for c in pools[label])
            candidates = sorted(
                (c for c in pools[label] if self.shown_counts[c.id] == least),
                key=lambda c: c.id,
            )
            picked[label] = self._rng.choice(candidates)
        entailed, refuted = picked["entailed"], picked["refuted"]
        order = [entailed.id, refuted.id]
        self._rng.shuffle(order)
        hint_hits = self.retriever.query(
            entailed.text + " " + refuted.text, self.config.hint_pool_k
        )
        self._round_counter += 1
        payload = {
            "round_id": f"r{self._round_counter:06d}",
            "voter_id": voter_id,
            "category": category,
            "entailed_claim_id": entailed.id,
            "refuted_claim_id": refuted.id,
            "display_order": order,
            "pot": self.config.pot,
            "started_at": self.clock(),
            "hint_pool": [h.passage_id for h in hint_hits],
        }
        self._commit("round_started", payload)
        return self.rounds[payload["round_id"]]

    def _apply_round_started(self, payload: dict) -> None:
        round_ = VotingRound(
            round_id=payload["round_id"],
            voter_id=payload["voter_id"],
            category=payload.get("category"),
            entailed_claim_id=payload["entailed_claim_id"],
            refuted_claim_id=payload["refuted_claim_id"],
            display_order=tuple(payload["display_order"]),
            pot=payload["pot"],
            started_at=payload["started_at"],
            hint_pool=tuple(payload["hint_pool"]),
        )
        self.rounds[round_.round_id] = round_
        for cid in round_.claim_pair:
            self.shown_counts[cid] = self.shown_counts.get(cid, 0) + 1
        self._round_counter = max(self._round_counter, int(round_.round_id[1:]))

    def remaining_pot(self, round_id: str, at: Optional[float] = None) -> int:
        """Server-side remaining points for an open round."""
        round_ = self._get_round(round_id)
        now = self.clock() if at is None else at
        elapsed = max(0.0, now - round_.started_at)
        return max(
            0,
            round_.pot
            - int(math.floor(elapsed))
            - self.config.hint_cost * round_.hints_taken,
        )

    def request_hint(self, round_id: str):
        round_ = self._get_round(round_id)
        if round_.outcome is not None:
            raise RoundClosedError(f"round {round_id} already resolved")
        wall_elapsed = max(0.0, self.clock() - round_.started_at)
        if wall_elapsed >= round_.pot:
            raise RoundExpiredError(self._resolve_unanswered(round_, wall_elapsed))
        cost_after = (
            int(math.floor(wall_elapsed))
            + self.config.hint_cost * (round_.hints_taken + 1)
        )
        if cost_after > round_.pot:
            raise HintRefusedError("remaining pot cannot cover another hint")
        unrevealed = [p for p in round_.hint_pool if p not in round_.evidence_revealed]
        if not unrevealed:
            raise HintRefusedError("no more evidence to reveal for this round")
        payload = {"round_id": round_id, "passage_id": unrevealed[0]}
        self._commit("hint", payload)
        return self.retriever.passage(unrevealed[0])

    def _apply_hint(self, payload: dict) -> None:
        round_ = self.rounds[payload["round_id"]]
        round_.hints_taken += 1
        round_.evidence_revealed.append(payload["passage_id"])

    def score_vote(
        self,
        round_id: str,
        chosen_claim_id: Optional[str],
        elapsed_seconds: Optional[float] = None,
    ) -> ScoreEvent:
        """Resolve a round. A ``None`` choice resolves an expired round as unanswered."""
        round_ = self._get_round(round_id)
        if round_.outcome is not None:
            raise RoundClosedError(f"round {round_id} already scored")
        if elapsed_seconds is None:
            elapsed_seconds = max(0.0, self.clock() - round_.started_at)
        if elapsed_seconds < 0:
            raise GameError("elapsed_seconds must be >= 0")

        if chosen_claim_id is None:
            if elapsed_seconds < round_.pot:
                raise GameError("round has not expired; a claim must be chosen")
            return self._resolve_unanswered(round_, elapsed_seconds)

        if chosen_claim_id not in round_.claim_pair:
            raise UnknownClaimError(
                f"claim {chosen_claim_id!r} is not part of round {round_id}"
            )
        correct = chosen_claim_id == round_.refuted_claim_id
        voter_points, (entailed_pts, refuted_pts) = split_pot(
            correct,
            elapsed_seconds,
            round_.hints_taken,
            pot=round_.pot,
            hint_cost=self.config.hint_cost,
            author_split=self.config.author_split,
        )
        return self._commit_vote(
            round_, chosen_claim_id, correct, elapsed_seconds, voter_points,
            entailed_pts, refuted_pts, unanswered=False,
        )

    def _resolve_unanswered(self, round_: VotingRound, elapsed: float) -> ScoreEvent:
        # Timeout means the claims did their job: authors take the whole pot.
        entailed_pts, refuted_pts = _author_split_full_pot(
            round_.pot, self.config.author_split
        )
        return self._commit_vote(
            round_, None, None, elapsed, 0, entailed_pts, refuted_pts, unanswered=True
        )

    def _commit_vote(
        self,
        round_: VotingRound,
        chosen: Optional[str],
        correct: Optional[bool],
        elapsed: float,
        voter_points: int,
        entailed_pts: int,
        refuted_pts: int,
        unanswered: bool,
    ) -> ScoreEvent:
        author_points: dict[str, int] = {}
        for cid, pts in (
            (round_.entailed_claim_id, entailed_pts),
            (round_.refuted_claim_id, refuted_pts),
        ):
            author = self.claims[cid].author_id
            author_points[author] = author_points.get(author, 0) + pts
        payload = {
            "round_id": round_.round_id,
            "voter_id": round_.voter_id,
            "chosen_claim_id": chosen,
            "correct": correct,
            "elapsed_seconds": elapsed,
            "hints_taken": round_.hints_taken,
            "voter_points": voter_points,
            "author_points": author_points,
            "claim_ids": list(round_.claim_pair),
            "unanswered": unanswered,
        }
        self._commit("vote", payload)
        return self.score_events[self._score_event_index[round_.round_id]]

    def _apply_vote(self, payload: dict) -> None:
        round_ = self.rounds[payload["round_id"]]
        round_.outcome = RoundOutcome(
            choice=payload["chosen_claim_id"],
            correct=payload["correct"],
            elapsed_seconds=payload["elapsed_seconds"],
            unanswered=payload["unanswered"],
        )
        event = ScoreEvent(
            round_id=payload["round_id"],
            voter_id=payload["voter_id"],
            voter_points=payload["voter_points"],
            author_points=tuple(sorted(payload["author_points"].items())),
            claim_ids=tuple(payload["claim_ids"]),
        )
        self._score_event_index[event.round_id] = len(self.score_events)
        self.score_events.append(event)
        self._credit(event.voter_id, event.voter_points)
        for author, pts in event.author_points:
            self._credit(author, pts)

    def record_like(self, round_id: str, claim_id: str) -> ScoreEvent:
        round_ = self._get_round(round_id)
        if round_.outcome is None:
            raise LikeError("round must be resolved before liking a claim")
        if claim_id not in round_.claim_pair:
            raise UnknownClaimError(f"claim {claim_id!r} is not part of round {round_id}")
        if round_.liked is not None:
            raise LikeError(f"round {round_id} already has a like recorded")
        payload = {
            "round_id": round_id,
            "claim_id": claim_id,
            "author_id": self.claims[claim_id].author_id,
            "bonus": self.config.like_bonus,
        }
        self._commit("like", payload)
        return self.score_events[self._score_event_index[round_id]]

    def _apply_like(self, payload: dict) -> None:
        round_ = self.rounds[payload["round_id"]]
        round_.liked = payload["claim_id"]
        idx = self._score_event_index[payload["round_id"]]
        self.score_events[idx] = replace(self.score_events[idx], liked=payload["claim_id"])
        self._credit(payload["author_id"], payload["bonus"])

    # ------------------------------------------------------------------
    # flags / ledger
    # ------------------------------------------------------------------

    def flag_claim(self, claim_id: str, flagger_id: str, reason: str) -> Claim:
        claim = self.claims.get(claim_id)
        if claim is None:
            raise UnknownClaimError(f"unknown claim {claim_id!r}")
        if any(f == flagger_id for f, _ in claim.flags):
            return claim  # one flag per player
        payload = {"claim_id": claim_id, "flagger_id": flagger_id, "reason": reason}
        self._commit("flag", payload)
        return self.claims[claim_id]

    def _apply_flag(self, payload: dict) -> None:
        claim = self.claims[payload["claim_id"]]
        self.claims[claim.id] = replace(
            claim, flags=claim.flags + ((payload["flagger_id"], payload["reason"]),)
        )

    def _credit(self, player_id: str, points: int) -> None:
        self.ledger[player_id] = self.ledger.get(player_id, 0) + points

    def leaderboard(self) -> list[tuple[str, int]]:
        return sorted(self.ledger.items(), key=lambda item: (-item[1], item[0]))

    # ------------------------------------------------------------------
    # helpers
    # ------------------------------------------------------------------

    def _open_session(self, session_id: str) -> AuthoringSession:
        session = self.sessions.get(session_id)
        if session is None:
            raise UnknownSessionError(f"unknown session {session_id!r}")
        if not session.open:
            raise SessionClosedError(f"session {session_id} is closed")
        if self.clock() - session.created_at > self.config.session_ttl_seconds:
            session.open = False
            raise SessionClosedError(f"session {session_id} has expired")
        return session

    def _get_round(self, round_id: str) -> VotingRound:
        round_ = self.rounds.get(round_id)
        if round_ is None:
            raise UnknownRoundError(f"unknown round {round_id!r}")
        return round_

    def state_digest(self) -> str:
        """Hash of all replayable state; two engines agree iff their digests match."""
        state = {
            "claims": {
                cid: {
                    "author_id": c.author_id,
                    "text": c.text,
                    "label": c.label,
                    "gold_evidence": [
                        [s.page_title, s.text, s.passage_id, s.precision]
                        for s in c.gold_evidence
                    ],
                    "category": c.category,
                    "created_at": c.created_at,
                    "flags": sorted(map(list, c.flags)),
                    "strategy_tags": list(c.strategy_tags),
                }
                for cid, c in self.claims.items()
            },
            "rounds": {
                rid: {
                    "voter_id": r.voter_id,
                    "pair": list(r.claim_pair),
                    "display_order": list(r.display_order),
                    "pot": r.pot,
                    "started_at": r.started_at,
                    "hint_pool": list(r.hint_pool),
                    "hints_taken": r.hints_taken,
                    "revealed": list(r.evidence_revealed),
                    "outcome": None
                    if r.outcome is None
                    else [
                        r.outcome.choice,
                        r.outcome.correct,
                        r.outcome.elapsed_seconds,
                        r.outcome.unanswered,
                    ],
                    "liked": r.liked,
                }
                for rid, r in self.rounds.items()
            },
            "score_events": [
                [
                    e.round_id,
                    e.voter_id,
                    e.voter_points,
                    list(map(list, e.author_points)),
                    list(e.claim_ids),
                    e.liked,
                ]
                for e in self.score_events
            ],
            "ledger": self.ledger,
            "shown_counts": self.shown_counts,
        }
        blob = json.dumps(state, sort_keys=True, ensure_ascii=False).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()
