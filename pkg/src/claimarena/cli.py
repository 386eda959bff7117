"""Command-line entry points for corpus management, indexing, alignment, analytics, and serving."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__
from .alignment import align_evidence
from .corpus import CorpusStore
from .evalkit import (
    RetrievalJudgment,
    SplitSpec,
    export_dataset,
    format_stats_table,
    r_precision,
    recall_at,
)
from .events import read_events
from .quality import (
    agreement_report,
    lmi_report,
    map_correctness,
    review_queue,
    tallies_from_events,
)
from .retrieval import SparseIndex, build_sparse_index, sparse_query
from .service import ServiceConfig, serve


def _read_jsonl(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield json.loads(line)


@click.group()
@click.version_option(__version__)
def main():
    """Adversarial claim collection, retrieval, and benchmarking toolkit."""


# -- corpus ----------------------------------------------------------------


@main.group()
def corpus():
    """Ingest and inspect the passage corpus."""


@corpus.command("ingest")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice(["kilt-jsonl", "plain-jsonl"]),
              default="plain-jsonl", show_default=True)
@click.option("--store", "store_dir", default="corpus", show_default=True)
def corpus_ingest(input_path, fmt, store_dir):
    """Ingest a JSONL passage file into the on-disk store."""
    report = CorpusStore(store_dir).ingest(input_path, format=fmt)
    click.echo(
        f"ingested {report.ingested} passages "
        f"({report.skipped} skipped, {len(report.rejects)} rejected)"
    )
    for reject in report.rejects:
        click.echo(f"  line {reject.line_number}: {reject.reason}", err=True)
    s = report.stats
    click.echo(f"corpus: {s.passage_count} passages, {s.page_count} pages, {s.token_total} tokens")


@corpus.command("stats")
@click.option("--store", "store_dir", default="corpus", show_default=True)
def corpus_stats(store_dir):
    s = CorpusStore(store_dir).stats()
    click.echo(json.dumps(s.__dict__))


# -- index -------------------------------------------------------------------


@main.group()
def index():
    """Build and query the sparse retrieval index."""


@index.command("build-sparse")
@click.option("--store", "store_dir", default="corpus", show_default=True)
@click.option("--out", "out_path", default="sparse.idx", show_default=True)
def index_build_sparse(store_dir, out_path):
    idx = build_sparse_index(CorpusStore(store_dir))
    idx.save(out_path)
    click.echo(f"indexed {idx.doc_count} passages -> {out_path}")


@index.command("query")
@click.option("--index", "index_path", default="sparse.idx", show_default=True)
@click.option("--store", "store_dir", default="corpus", show_default=True)
@click.option("--text", required=True)
@click.option("--k", default=10, show_default=True)
def index_query(index_path, store_dir, text, k):
    store = CorpusStore(store_dir)
    hits = sparse_query(SparseIndex.load(index_path), text, k)
    for hit in hits:
        passage = store.get_passage(hit.passage_id)
        click.echo(f"{hit.rank:>3} {hit.score:.6f} {hit.passage_id} [{passage.page_title}]")
    if not hits:
        click.echo("no matches")


# -- alignment ----------------------------------------------------------------


@main.command("align")
@click.option("--store", "store_dir", default="corpus", show_default=True)
@click.option("--evidence", "evidence_path", required=True, type=click.Path(exists=True),
              help="JSONL with {'text': ..., 'page': optional page title}")
@click.option("--threshold", default=0.5, show_default=True)
@click.option("--max-n", default=2, show_default=True)
@click.option("--full-corpus", is_flag=True,
              help="Scan every passage even when a source page is given.")
@click.option("--out", "out_path", default="-", show_default=True)
def align_cmd(store_dir, evidence_path, threshold, max_n, full_corpus, out_path):
    """Align evidence sentences to corpus passages; emits AlignmentResult JSONL."""
    store = CorpusStore(store_dir)
    out = sys.stdout if out_path == "-" else open(out_path, "w", encoding="utf-8")
    try:
        for obj in _read_jsonl(evidence_path):
            candidates = None
            if not full_corpus and obj.get("page"):
                candidates = store.page(obj["page"]).passage_ids
            result = align_evidence(
                obj["text"], store, candidate_passages=candidates,
                threshold=threshold, max_n=max_n,
            )
            out.write(json.dumps({
                "evidence_text": result.evidence_text,
                "best_passage_id": result.best_passage_id,
                "precision": result.precision,
                "kept": result.kept,
            }, ensure_ascii=False) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()


# -- quality -------------------------------------------------------------------


@main.group()
def quality():
    """Quality-control analytics over the event log and exported claims."""


@quality.command("map")
@click.option("--log", "log_path", required=True, type=click.Path(exists=True))
@click.option("--min", "threshold", default=0.5, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="json",
              show_default=True)
def quality_map(log_path, threshold, fmt):
    """Per-claim correctness estimates and the below-threshold review queue."""
    tallies = tallies_from_events(read_events(log_path))
    estimates = {cid: map_correctness(t) for cid, t in tallies.items()}
    queue = review_queue(estimates.values(), threshold=threshold)
    if fmt == "text":
        click.echo(f"{'claim':12}{'posterior':>12}{'votes':>8}  queued")
        for cid, e in sorted(estimates.items()):
            queued = "yes" if cid in queue else ""
            click.echo(f"{cid:12}{e.posterior_mean:>12.4f}{e.n_votes:>8}  {queued}")
        return
    click.echo(json.dumps({
        "estimates": {
            cid: {"posterior_mean": e.posterior_mean, "n_votes": e.n_votes}
            for cid, e in sorted(estimates.items())
        },
        "review_queue": queue,
    }, indent=2))


@quality.command("lmi")
@click.option("--claims", "claims_path", required=True, type=click.Path(exists=True),
              help="Exported claims JSONL ({'text', 'label', ...} per line)")
@click.option("--label", default="refuted", show_default=True)
@click.option("--top", "top_k", default=6, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="text",
              show_default=True)
def quality_lmi(claims_path, label, top_k, fmt):
    """Bigrams that most give away a label, ranked by local mutual information."""
    claims = [(obj["text"], obj["label"]) for obj in _read_jsonl(claims_path)]
    report = lmi_report(claims, label, top_k=top_k)
    if fmt == "json":
        click.echo(json.dumps({
            "label": report.label,
            "log_base": report.log_base,
            "rows": [
                {"bigram": list(row.bigram), "lmi": row.lmi,
                 "p_label_given_w": row.p_label_given_w, "count": row.count}
                for row in report.rows
            ],
        }, indent=2))
        return
    for row in report.rows:
        click.echo(
            f"{' '.join(row.bigram):30} lmi={row.lmi:.6f} "
            f"p(l|w)={row.p_label_given_w:.3f} count={row.count}"
        )


@quality.command("agreement")
@click.option("--log", "log_path", required=True, type=click.Path(exists=True))
@click.option("--claims", "claims_path", required=True, type=click.Path(exists=True))
@click.option("--preds", "preds_path", required=True, type=click.Path(exists=True),
              help="JSONL with {'id': claim id, 'label': predicted label}")
def quality_agreement(log_path, claims_path, preds_path):
    """Human vote accuracy conditioned on model correctness."""
    tallies = tallies_from_events(read_events(log_path))
    claims = [(obj["id"], obj["label"]) for obj in _read_jsonl(claims_path)]
    preds = {obj["id"]: obj["label"] for obj in _read_jsonl(preds_path)}
    report = agreement_report(claims, tallies, preds)
    click.echo(json.dumps({
        "model_correct": report.model_correct.__dict__,
        "model_incorrect": report.model_incorrect.__dict__,
    }, indent=2))


# -- eval ----------------------------------------------------------------------


@main.group("eval")
def eval_group():
    """Retrieval metrics and dataset export."""


@eval_group.command("retrieval")
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True),
              help="JSONL with {'claim_id', 'gold_passage_ids': [...]}")
@click.option("--runs", "runs_path", required=True, type=click.Path(exists=True),
              help="JSONL with {'claim_id', 'retrieved': [...]} in rank order")
@click.option("--k", "ks", default="5,10", show_default=True)
def eval_retrieval(gold_path, runs_path, ks):
    """Mean R-precision and Recall@k over a retrieval run."""
    gold = {obj["claim_id"]: set(obj["gold_passage_ids"]) for obj in _read_jsonl(gold_path)}
    runs = {obj["claim_id"]: obj["retrieved"] for obj in _read_jsonl(runs_path)}
    k_values = [int(x) for x in ks.split(",") if x]
    judgments = [
        RetrievalJudgment(cid, frozenset(gold[cid]), tuple(runs.get(cid, ())))
        for cid in sorted(gold)
    ]
    if not judgments:
        raise click.ClickException("no judgments found")
    result = {
        "claims": len(judgments),
        "r_precision": sum(r_precision(j) for j in judgments) / len(judgments),
    }
    for k in k_values:
        result[f"recall@{k}"] = sum(recall_at(j, k) for j in judgments) / len(judgments)
    click.echo(json.dumps(result, indent=2))


@eval_group.command("export")
@click.option("--claims", "claims_path", required=True, type=click.Path(exists=True),
              help="Claims JSONL in the export schema")
@click.option("--log", "log_path", type=click.Path(exists=True),
              help="Event log for quality filtering (optional)")
@click.option("--fractions", default="0.8,0.09,0.11", show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--out", "out_dir", default="dataset", show_default=True)
def eval_export(claims_path, log_path, fractions, seed, out_dir):
    """Write page-disjoint train/dev/test files plus a stats table."""
    fracs = tuple(float(x) for x in fractions.split(","))
    if len(fracs) != 3:
        raise click.ClickException("--fractions needs exactly three values")
    claims = list(_read_jsonl(claims_path))
    estimates = None
    if log_path:
        tallies = tallies_from_events(read_events(log_path))
        estimates = {cid: map_correctness(t) for cid, t in tallies.items()}
    result = export_dataset(claims, SplitSpec(fracs, seed), estimates, out_dir)
    click.echo(format_stats_table(result.stats))
    if result.dropped_claim_ids:
        click.echo(f"dropped {len(result.dropped_claim_ids)} claims below review threshold")
    if result.balance_warning:
        click.echo("warning: label balance deviates more than 2 points from 50%", err=True)


# -- serve -----------------------------------------------------------------------


@main.command("serve")
@click.option("--config", "config_path", type=click.Path(exists=True))
def serve_cmd(config_path):
    """Run the game service (config file plus CLAIMARENA_* env overrides)."""
    serve(ServiceConfig.from_file(config_path))


if __name__ == "__main__":
    main()
