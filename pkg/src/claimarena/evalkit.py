"""Retrieval/label metrics and dataset export with page-disjoint splits."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .quality import CorrectnessEstimate, PRIOR_CORRECT, PRIOR_TOTAL

SPLIT_NAMES = ("train", "dev", "test")


class EvalError(Exception):
    pass


class MissingPredictionsError(EvalError):
    def __init__(self, missing: Sequence[str]):
        super().__init__(f"missing predictions for {len(missing)} ids: {sorted(missing)[:10]}")
        self.missing = tuple(sorted(missing))


@dataclass(frozen=True)
class RetrievalJudgment:
    claim_id: str
    gold_passage_ids: frozenset
    retrieved: tuple[str, ...]

    def __post_init__(self):
        if not self.gold_passage_ids:
            raise ValueError(f"judgment {self.claim_id}: gold set must be non-empty")
        if len(set(self.retrieved)) != len(self.retrieved):
            raise ValueError(f"judgment {self.claim_id}: retrieved list has duplicates")


def r_precision(judgment: RetrievalJudgment) -> float:
    """Precision at k where k is the number of gold passages for the claim."""
    k = len(judgment.gold_passage_ids)
    top = set(judgment.retrieved[:k])
    return len(top & judgment.gold_passage_ids) / k


def recall_at(judgment: RetrievalJudgment, k: int) -> float:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    top = set(judgment.retrieved[:k])
    return len(top & judgment.gold_passage_ids) / len(judgment.gold_passage_ids)


def label_accuracy(predictions: Mapping[str, str], gold_labels: Mapping[str, str]) -> float:
    """Fraction of claims whose predicted label matches gold."""
    if not gold_labels:
        raise EvalError("no gold labels supplied")
    missing = [cid for cid in gold_labels if cid not in predictions]
    if missing:
        raise MissingPredictionsError(missing)
    correct = sum(1 for cid, label in gold_labels.items() if predictions[cid] == label)
    return correct / len(gold_labels)


# ----------------------------------------------------------------------
# dataset export
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class SplitSpec:
    """Page-level split: every claim from one page lands in the same file."""

    fractions: tuple[float, float, float] = (0.8, 0.09, 0.11)
    seed: int = 0
    unit: str = "page"

    def __post_init__(self):
        if abs(sum(self.fractions) - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {self.fractions}")
        if any(f < 0 for f in self.fractions):
            raise ValueError("split fractions must be non-negative")


def assign_split(page_title: str, spec: SplitSpec) -> str:
    """Deterministic split for a page: hash of (seed, title) against the fractions."""
    digest = hashlib.blake2b(
        f"{spec.seed}:{page_title}".encode("utf-8"), digest_size=8
    ).digest()
    u = int.from_bytes(digest, "little") / float(1 << 64)
    edge = 0.0
    for name, fraction in zip(SPLIT_NAMES, spec.fractions):
        edge += fraction
        if u < edge:
            return name
    return SPLIT_NAMES[-1]


@dataclass(frozen=True)
class SplitStats:
    claims: int
    entailed_proportion: Optional[float]
    pages: int
    mean_claim_tokens: Optional[float]
    mean_evidence_tokens: Optional[float]


@dataclass(frozen=True)
class ExportResult:
    paths: dict
    stats: dict
    balance_warning: bool
    dropped_claim_ids: tuple[str, ...]


def _claim_record(claim) -> dict:
    if isinstance(claim, dict):
        return claim
    return {
        "id": claim.id,
        "text": claim.text,
        "label": claim.label,
        "gold_evidence": [
            {"page": s.page_title, "text": s.text, "passage_id": s.passage_id}
            for s in claim.gold_evidence
        ],
        "category": getattr(claim, "category", "all"),
    }


def _split_stats(records: list[dict]) -> SplitStats:
    if not records:
        return SplitStats(0, None, 0, None, None)
    entailed = sum(1 for r in records if r["label"] == "entailed")
    pages = {r["gold_evidence"][0]["page"] for r in records}
    claim_tokens = [len(r["text"].split()) for r in records]
    evidence_tokens = [
        len(span["text"].split()) for r in records for span in r["gold_evidence"]
    ]
    return SplitStats(
        claims=len(records),
        entailed_proportion=entailed / len(records),
        pages=len(pages),
        mean_claim_tokens=sum(claim_tokens) / len(claim_tokens),
        mean_evidence_tokens=sum(evidence_tokens) / len(evidence_tokens)
        if evidence_tokens
        else None,
    )


def export_dataset(
    claims: Iterable,
    split_spec: SplitSpec,
    quality_estimates: Mapping[str, CorrectnessEstimate] | Mapping[str, float] | None,
    out_dir: str | Path,
    review_threshold: float = 0.5,
) -> ExportResult:
    """Write train/dev/test JSONL files plus a stats table.

    Claims whose correctness estimate falls strictly below `review_threshold`
    are dropped (the review queue). Claims without an estimate keep the prior
    mean and stay in. Split assignment hashes the claim's source page so the
    three files never share a page.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    prior = PRIOR_CORRECT / PRIOR_TOTAL
    buckets: dict[str, list[dict]] = {name: [] for name in SPLIT_NAMES}
    dropped: list[str] = []
    for claim in claims:
        record = _claim_record(claim)
        estimate = None
        if quality_estimates is not None:
            estimate = quality_estimates.get(record["id"])
        posterior = (
            prior
            if estimate is None
            else getattr(estimate, "posterior_mean", estimate)
        )
        if posterior < review_threshold:
            dropped.append(record["id"])
            continue
        if not record.get("gold_evidence"):
            raise EvalError(f"claim {record['id']} has no evidence page for split assignment")
        page = record["gold_evidence"][0]["page"]
        buckets[assign_split(page, split_spec)].append(record)

    paths = {}
    for name in SPLIT_NAMES:
        path = out / f"{name}.jsonl"
        with path.open("w", encoding="utf-8") as fh:
            for record in buckets[name]:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
        paths[name] = path

    stats = {name: _split_stats(buckets[name]) for name in SPLIT_NAMES}
    all_records = [r for name in SPLIT_NAMES for r in buckets[name]]
    stats["total"] = _split_stats(all_records)
    total_prop = stats["total"].entailed_proportion
    balance_warning = total_prop is not None and abs(total_prop - 0.5) > 0.02

    stats_payload = {
        name: {
            "claims": s.claims,
            "entailed_proportion": s.entailed_proportion,
            "pages": s.pages,
            "mean_claim_tokens": s.mean_claim_tokens,
            "mean_evidence_tokens": s.mean_evidence_tokens,
        }
        for name, s in stats.items()
    }
    stats_payload["balance_warning"] = balance_warning
    stats_path = out / "stats.json"
    stats_path.write_text(json.dumps(stats_payload, indent=2) + "\n", encoding="utf-8")
    paths["stats"] = stats_path
    return ExportResult(paths, stats, balance_warning, tuple(dropped))


def format_stats_table(stats: Mapping[str, SplitStats]) -> str:
    """Aligned-column rendering of split statistics."""
    header = f"{'':8}{'Claims':>8}{'Entailed%':>11}{'Pages':>8}{'Claim toks':>12}{'Evid toks':>11}"
    lines = [header]
    for name in (*SPLIT_NAMES, "total"):
        s = stats[name]
        prop = f"{100 * s.entailed_proportion:.1f}" if s.entailed_proportion is not None else "-"
        ct = f"{s.mean_claim_tokens:.1f}" if s.mean_claim_tokens is not None else "-"
        et = f"{s.mean_evidence_tokens:.1f}" if s.mean_evidence_tokens is not None else "-"
        lines.append(f"{name:8}{s.claims:>8}{prop:>11}{s.pages:>8}{ct:>12}{et:>11}")
    return "\n".join(lines)


def load_exported_claims(path: str | Path) -> list[dict]:
    """Read back an exported split file (round-trips through export schema)."""
    records = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    return records
