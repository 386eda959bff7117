"""Statistical quality control over collected claims.

Covers the smoothed per-claim correctness estimate used to queue suspect
claims for human review, detection of claims solved without evidence, local
mutual information reports over give-away bigrams, and like-rate and
human-vs-model agreement analytics.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .events import EventRecord
from .game import ScoreEvent
from .text import ngrams, tokenize

# Beta(4,1) prior on per-claim vote correctness: five pseudocounts,
# four correct and one wrong, matching an 80% baseline accuracy.
PRIOR_CORRECT = 4
PRIOR_TOTAL = 5


class QualityError(Exception):
    pass


@dataclass(frozen=True)
class VoteTally:
    claim_id: str
    correct: int = 0
    incorrect: int = 0
    unaided_correct: int = 0

    def __post_init__(self):
        if min(self.correct, self.incorrect, self.unaided_correct) < 0:
            raise ValueError("tally counts must be >= 0")
        if self.unaided_correct > self.correct:
            raise ValueError("unaided_correct cannot exceed correct")

    @property
    def n_votes(self) -> int:
        return self.correct + self.incorrect


@dataclass(frozen=True)
class CorrectnessEstimate:
    claim_id: str
    posterior_mean: float
    n_votes: int


def map_correctness(tally: VoteTally) -> CorrectnessEstimate:
    """Posterior-mean correctness under the Beta(4,1) prior: (4+c)/(5+c+w)."""
    posterior = (PRIOR_CORRECT + tally.correct) / (PRIOR_TOTAL + tally.correct + tally.incorrect)
    return CorrectnessEstimate(tally.claim_id, posterior, tally.n_votes)


def review_queue(
    estimates: Iterable[CorrectnessEstimate], threshold: float = 0.5
) -> list[str]:
    """Claims whose posterior mean falls strictly below `threshold`, worst first."""
    flagged = [e for e in estimates if e.posterior_mean < threshold]
    flagged.sort(key=lambda e: (e.posterior_mean, e.claim_id))
    return [e.claim_id for e in flagged]


def detect_easy(tallies: Iterable[VoteTally], min_votes: int = 3) -> list[str]:
    """Claims every voter solved correctly without ever taking a hint."""
    out = [
        t.claim_id
        for t in tallies
        if t.n_votes >= min_votes and t.incorrect == 0 and t.unaided_correct == t.correct
    ]
    return sorted(out)


def tallies_from_events(records: Iterable[EventRecord]) -> dict[str, VoteTally]:
    """Per-claim vote tallies from an event stream. Unanswered rounds carry no vote."""
    counts: dict[str, list[int]] = {}
    for record in records:
        if record.kind != "vote":
            continue
        payload = record.payload
        if payload.get("unanswered") or payload.get("correct") is None:
            continue
        correct = bool(payload["correct"])
        unaided = payload.get("hints_taken", 0) == 0
        for cid in payload["claim_ids"]:
            c = counts.setdefault(cid, [0, 0, 0])
            if correct:
                c[0] += 1
                if unaided:
                    c[2] += 1
            else:
                c[1] += 1
    return {
        cid: VoteTally(cid, correct=c[0], incorrect=c[1], unaided_correct=c[2])
        for cid, c in counts.items()
    }


# ----------------------------------------------------------------------
# local mutual information over bigrams
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class ArtifactRow:
    bigram: tuple[str, str]
    lmi: float
    p_label_given_w: float
    count: int


@dataclass(frozen=True)
class ArtifactReport:
    label: str
    rows: tuple[ArtifactRow, ...]
    log_base: int = 2


def _claim_text_label(claim) -> tuple[str, str]:
    if isinstance(claim, (tuple, list)):
        return claim[0], claim[1]
    return claim.text, claim.label


def lmi_report(claims: Iterable, label: str, top_k: int = 6) -> ArtifactReport:
    """Rank bigrams by local mutual information with `label`.

    Counting is over bigram occurrences: every occurrence of a bigram in a
    claim is one (bigram, label) event. With p(w,l), p(l|w) and p(l) read off
    those counts, LMI(w,l) = p(w,l) * log2(p(l|w) / p(l)).
    """
    joint: Counter = Counter()
    label_totals: Counter = Counter()
    for claim in claims:
        text, claim_label = _claim_text_label(claim)
        for bigram in ngrams(tokenize(text), 2):
            joint[(bigram, claim_label)] += 1
            label_totals[claim_label] += 1
    if len(label_totals) < 2:
        raise QualityError("LMI needs at least two distinct labels in the input")
    n = sum(label_totals.values())
    p_label = label_totals[label] / n
    word_totals: Counter = Counter()
    for (bigram, _), count in joint.items():
        word_totals[bigram] += count
    rows = []
    for (bigram, row_label), count in joint.items():
        if row_label != label:
            continue
        p_wl = count / n
        p_l_given_w = count / word_totals[bigram]
        lmi = p_wl * math.log2(p_l_given_w / p_label)
        rows.append(ArtifactRow(bigram, lmi, p_l_given_w, count))
    rows.sort(key=lambda r: (-r.lmi, r.bigram))
    return ArtifactReport(label, tuple(rows[:top_k]))


# ----------------------------------------------------------------------
# human-vs-model agreement
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class AgreementCell:
    n_claims: int
    n_votes: int
    human_accuracy: Optional[float]


@dataclass(frozen=True)
class AgreementReport:
    model_correct: AgreementCell
    model_incorrect: AgreementCell


def agreement_report(
    claims: Iterable,
    human_tallies: Mapping[str, VoteTally],
    model_predictions: Mapping[str, str],
) -> AgreementReport:
    """Human vote accuracy conditioned on whether the model labeled the claim correctly."""
    cells = {True: [0, 0, 0], False: [0, 0, 0]}  # claims, votes, correct votes
    matched = 0
    for claim in claims:
        cid = getattr(claim, "id", None) or claim[0]
        label = getattr(claim, "label", None) or claim[1]
        tally = human_tallies.get(cid)
        if tally is None or tally.n_votes == 0:
            continue
        predicted = model_predictions.get(cid)
        if predicted is None:
            continue
        matched += 1
        cell = cells[predicted == label]
        cell[0] += 1
        cell[1] += tally.n_votes
        cell[2] += tally.correct
    if matched == 0:
        raise QualityError("no tallied claim has a model prediction")

    def _cell(key: bool) -> AgreementCell:
        n_claims, n_votes, n_correct = cells[key]
        acc = n_correct / n_votes if n_votes else None
        return AgreementCell(n_claims, n_votes, acc)

    return AgreementReport(model_correct=_cell(True), model_incorrect=_cell(False))


# ----------------------------------------------------------------------
# like rates
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class LikeReport:
    rate_by_label: dict
    t_stat: float
    rate_by_category: dict
    t_by_category: dict
    n_likes: int


def welch_t(a: Sequence[float], b: Sequence[float]) -> float:
    """Welch's unequal-variance t statistic; nan when either side lacks 2 samples."""
    if len(a) < 2 or len(b) < 2:
        return float("nan")
    ma = sum(a) / len(a)
    mb = sum(b) / len(b)
    va = sum((x - ma) ** 2 for x in a) / (len(a) - 1)
    vb = sum((x - mb) ** 2 for x in b) / (len(b) - 1)
    denom = math.sqrt(va / len(a) + vb / len(b))
    if denom == 0.0:
        return 0.0 if ma == mb else math.copysign(float("inf"), ma - mb)
    return (ma - mb) / denom


def like_report(score_events: Iterable[ScoreEvent], claims: Iterable) -> LikeReport:
    """Per-label and per-category like rates with a Welch t across labels.

    A claim's like rate is likes received / resolved rounds it appeared in;
    the t statistic compares entailed vs refuted per-claim rates.
    """
    by_id = {}
    for claim in claims:
        cid = getattr(claim, "id", None) or claim[0]
        by_id[cid] = claim
    exposures: Counter = Counter()
    likes: Counter = Counter()
    n_likes = 0
    for event in score_events:
        for cid in event.claim_ids:
            exposures[cid] += 1
        if event.liked is not None:
            likes[event.liked] += 1
            n_likes += 1

    rates_by_label: dict[str, list[float]] = {}
    rates_by_cat: dict[str, dict[str, list[float]]] = {}
    for cid, shown in exposures.items():
        claim = by_id.get(cid)
        if claim is None:
            continue
        label = getattr(claim, "label", None) or claim[1]
        category = getattr(claim, "category", "all")
        rate = likes[cid] / shown
        rates_by_label.setdefault(label, []).append(rate)
        rates_by_cat.setdefault(category, {}).setdefault(label, []).append(rate)

    def _mean(xs: list[float]) -> float:
        return sum(xs) / len(xs) if xs else float("nan")

    rate_by_label = {label: _mean(rs) for label, rs in sorted(rates_by_label.items())}
    t_stat = welch_t(
        rates_by_label.get("entailed", []), rates_by_label.get("refuted", [])
    )
    rate_by_category = {
        cat: {label: _mean(rs) for label, rs in sorted(groups.items())}
        for cat, groups in sorted(rates_by_cat.items())
    }
    t_by_category = {
        cat: welch_t(groups.get("entailed", []), groups.get("refuted", []))
        for cat, groups in sorted(rates_by_cat.items())
    }
    return LikeReport(rate_by_label, t_stat, rate_by_category, t_by_category, n_likes)
