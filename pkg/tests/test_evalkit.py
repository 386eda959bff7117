import json

import pytest

from claimarena.evalkit import (
    EvalError,
    MissingPredictionsError,
    RetrievalJudgment,
    SplitSpec,
    assign_split,
    export_dataset,
    format_stats_table,
    label_accuracy,
    load_exported_claims,
    r_precision,
    recall_at,
)
from claimarena.quality import VoteTally, map_correctness


def _j(gold, retrieved):
    return RetrievalJudgment("c1", frozenset(gold), tuple(retrieved))


# -- metrics --------------------------------------------------------------------


def test_r_precision_perfect():
    assert r_precision(_j({"p1", "p2"}, ["p1", "p2", "x"])) == 1.0


def test_r_precision_half_when_second_gold_below_window():
    assert r_precision(_j({"p1", "p2"}, ["p1", "x", "p2"])) == 0.5


def test_r_precision_empty_retrieval():
    assert r_precision(_j({"p1"}, [])) == 0.0


def test_recall_at_examples():
    assert recall_at(_j({"p1", "p2"}, ["p1", "p2"]), 5) == 1.0
    assert recall_at(_j({"p1", "p2"}, ["x", "p2", "y"]), 5) == 0.5
    with pytest.raises(ValueError):
        recall_at(_j({"p1"}, []), 0)


def test_recall_monotone_in_k():
    judgment = _j({"p1", "p2", "p3"}, ["x", "p1", "y", "p2", "z", "p3"])
    values = [recall_at(judgment, k) for k in range(1, 8)]
    assert all(b >= a for a, b in zip(values, values[1:]))
    assert all(0.0 <= v <= 1.0 for v in values)


def test_r_precision_bounded_by_recall_at_gold_size():
    judgment = _j({"p1", "p2"}, ["p1", "x", "p2", "y"])
    assert r_precision(judgment) <= recall_at(judgment, 5)


def test_judgment_validation():
    with pytest.raises(ValueError):
        RetrievalJudgment("c1", frozenset(), ("p1",))
    with pytest.raises(ValueError):
        RetrievalJudgment("c1", frozenset({"p1"}), ("p1", "p1"))


def test_label_accuracy_counting():
    gold = {"a": "entailed", "b": "refuted", "c": "entailed", "d": "refuted"}
    preds = {"a": "entailed", "b": "entailed", "c": "refuted", "d": "refuted"}
    assert label_accuracy(preds, gold) == 0.5
    assert label_accuracy(gold, gold) == 1.0


def test_label_accuracy_missing_prediction_lists_ids():
    gold = {"a": "entailed", "b": "refuted"}
    with pytest.raises(MissingPredictionsError) as excinfo:
        label_accuracy({"a": "entailed"}, gold)
    assert excinfo.value.missing == ("b",)


# -- splits -----------------------------------------------------------------------


def test_split_spec_validation():
    with pytest.raises(ValueError):
        SplitSpec((0.5, 0.5, 0.5))
    SplitSpec((0.8, 0.09, 0.11))


def test_assign_split_deterministic_and_seed_sensitive():
    spec_a = SplitSpec((0.34, 0.33, 0.33), seed=1)
    titles = [f"Page {i}" for i in range(50)]
    first = [assign_split(t, spec_a) for t in titles]
    second = [assign_split(t, spec_a) for t in titles]
    assert first == second
    spec_b = SplitSpec((0.34, 0.33, 0.33), seed=2)
    assert first != [assign_split(t, spec_b) for t in titles]


def test_assign_split_roughly_matches_fractions():
    spec = SplitSpec((0.8, 0.1, 0.1), seed=3)
    titles = [f"Page {i}" for i in range(5000)]
    counts = {"train": 0, "dev": 0, "test": 0}
    for title in titles:
        counts[assign_split(title, spec)] += 1
    assert 0.75 < counts["train"] / 5000 < 0.85
    assert 0.07 < counts["dev"] / 5000 < 0.13


# -- export -----------------------------------------------------------------------


def _claim_dict(cid, page, label, text="some claim text"):
    return {
        "id": cid,
        "text": text,
        "label": label,
        "gold_evidence": [{"page": page, "text": "gold span words", "passage_id": "p1"}],
        "category": "all",
    }


def test_export_pages_disjoint_and_deterministic(tmp_path):
    claims = [
        _claim_dict(f"c{i}", f"Page {i % 6}", "entailed" if i % 2 else "refuted")
        for i in range(24)
    ]
    spec = SplitSpec((0.5, 0.25, 0.25), seed=11)
    first = export_dataset(claims, spec, None, tmp_path / "a")
    second = export_dataset(claims, spec, None, tmp_path / "b")
    page_sets = {}
    for name in ("train", "dev", "test"):
        records_a = load_exported_claims(first.paths[name])
        records_b = load_exported_claims(second.paths[name])
        assert records_a == records_b
        page_sets[name] = {r["gold_evidence"][0]["page"] for r in records_a}
    assert page_sets["train"] & page_sets["dev"] == set()
    assert page_sets["train"] & page_sets["test"] == set()
    assert page_sets["dev"] & page_sets["test"] == set()
    total = sum(s.claims for name, s in first.stats.items() if name != "total")
    assert total == 24


def test_export_balanced_fixture_fifty_percent(tmp_path):
    claims = [
        _claim_dict(f"c{i}", "Solo Page", "entailed" if i % 2 else "refuted")
        for i in range(8)
    ]
    result = export_dataset(claims, SplitSpec(seed=1), None, tmp_path)
    assert result.stats["total"].entailed_proportion == 0.5
    assert result.balance_warning is False


def test_export_drops_review_queue_claims(tmp_path):
    claims = [_claim_dict("good", "P1", "entailed"), _claim_dict("bad", "P2", "refuted")]
    estimates = {
        "good": map_correctness(VoteTally("good", correct=5, incorrect=0)),
        "bad": map_correctness(VoteTally("bad", correct=0, incorrect=10)),
    }
    result = export_dataset(claims, SplitSpec(seed=1), estimates, tmp_path)
    assert result.dropped_claim_ids == ("bad",)
    exported_ids = {
        r["id"]
        for name in ("train", "dev", "test")
        for r in load_exported_claims(result.paths[name])
    }
    assert exported_ids == {"good"}


def test_export_claim_without_evidence_rejected(tmp_path):
    claim = {"id": "c1", "text": "t", "label": "entailed", "gold_evidence": [], "category": "all"}
    with pytest.raises(EvalError, match="c1"):
        export_dataset([claim], SplitSpec(seed=1), None, tmp_path)


def test_export_metrics_recompute_from_files(tmp_path):
    claims = [
        _claim_dict(f"c{i}", f"Page {i}", "entailed" if i % 2 else "refuted",
                    text=f"claim number {i} with words")
        for i in range(12)
    ]
    result = export_dataset(claims, SplitSpec((0.6, 0.2, 0.2), seed=5), None, tmp_path)
    for name in ("train", "dev", "test"):
        records = load_exported_claims(result.paths[name])
        stats = result.stats[name]
        assert len(records) == stats.claims
        if records:
            entailed = sum(1 for r in records if r["label"] == "entailed")
            assert entailed / len(records) == stats.entailed_proportion


def test_export_balance_warning_on_skew(tmp_path):
    claims = [_claim_dict(f"c{i}", f"P{i}", "entailed") for i in range(9)]
    claims.append(_claim_dict("c9", "P9", "refuted"))
    result = export_dataset(claims, SplitSpec(seed=1), None, tmp_path)
    assert result.balance_warning is True


def test_stats_table_renders_all_rows(tmp_path):
    claims = [_claim_dict(f"c{i}", f"P{i % 3}", "entailed" if i % 2 else "refuted")
              for i in range(6)]
    result = export_dataset(claims, SplitSpec(seed=2), None, tmp_path)
    table = format_stats_table(result.stats)
    for row in ("train", "dev", "test", "total", "Claims", "Entailed%"):
        assert row in table


def test_stats_json_written(tmp_path):
    claims = [_claim_dict("c1", "P1", "entailed"), _claim_dict("c2", "P2", "refuted")]
    result = export_dataset(claims, SplitSpec(seed=2), None, tmp_path)
    payload = json.loads(result.paths["stats"].read_text())
    assert payload["total"]["claims"] == 2
