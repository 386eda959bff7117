"""Align evidence sentences to corpus passages by clipped n-gram precision.

The score is the geometric mean over n in {1..max_n} of the clipped n-gram
precision of the evidence against the passage (candidate-relative, so it is
deliberately not symmetric). Evidence that aligns below the keep threshold is
marked for removal.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional

from .corpus import CorpusStore
from .text import ngrams, tokenize

DEFAULT_THRESHOLD = 0.5
DEFAULT_MAX_N = 2


@dataclass(frozen=True)
class AlignmentResult:
    evidence_text: str
    best_passage_id: Optional[str]
    precision: float
    kept: bool


def modified_ngram_precision(candidate: str, reference: str, max_n: int = DEFAULT_MAX_N) -> float:
    """Clipped n-gram precision of `candidate` against `reference`.

    Geometric mean over n in {1..max_n} of
    ``sum_g min(count_cand(g), count_ref(g)) / sum_g count_cand(g)``.
    Levels where the candidate is too short to have any n-gram are skipped;
    a zero at any remaining level makes the whole score 0.
    """
    cand_tokens = tokenize(candidate)
    if not cand_tokens:
        raise ValueError("candidate has no tokens")
    ref_tokens = tokenize(reference)
    numerator = 1
    denominator = 1
    levels = 0
    for n in range(1, max_n + 1):
        cand_counts = Counter(ngrams(cand_tokens, n))
        total = sum(cand_counts.values())
        if total == 0:
            continue
        ref_counts = Counter(ngrams(ref_tokens, n))
        clipped = sum(min(c, ref_counts[g]) for g, c in cand_counts.items())
        if clipped == 0:
            return 0.0
        numerator *= clipped
        denominator *= total
        levels += 1
    # Exact integer fraction first, root second: keeps constructed boundary
    # cases (e.g. a product of exactly 1/4) landing on the threshold.
    ratio = numerator / denominator
    if levels == 1:
        return ratio
    if levels == 2:
        return math.sqrt(ratio)
    return ratio ** (1.0 / levels)


def align_evidence(
    evidence_text: str,
    corpus: CorpusStore,
    candidate_passages: Optional[Iterable[str]] = None,
    threshold: float = DEFAULT_THRESHOLD,
    max_n: int = DEFAULT_MAX_N,
) -> AlignmentResult:
    """Best-scoring passage for an evidence sentence; ties go to the lowest passage id.

    `candidate_passages` restricts the scan (normally to the passages of the
    evidence's source page); omit it for a full-corpus scan. Evidence scoring
    below `threshold` is marked ``kept=False``.
    """
    if candidate_passages is None:
        candidates = sorted(corpus.passage_ids())
    else:
        candidates = sorted(candidate_passages)
    best_id: Optional[str] = None
    best_precision = 0.0
    for pid in candidates:
        passage = corpus.get_passage(pid)
        precision = modified_ngram_precision(evidence_text, passage.text, max_n=max_n)
        if best_id is None or precision > best_precision:
            best_id = pid
            best_precision = precision
    kept = best_id is not None and best_precision >= threshold
    return AlignmentResult(evidence_text, best_id, best_precision, kept)
