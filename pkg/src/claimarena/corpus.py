"""On-disk passage corpus: ingestion, lookup by id, page metadata, category sampling.

Storage is an append-only JSONL record file plus a sidecar metadata file
holding (id, title, category, offset, length, token count) per record. Only
the sidecar is memory-resident, so passage text for corpora in the tens of
millions of records stays on disk and is fetched by offset on demand.
"""

from __future__ import annotations

import json
import os
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional

MAX_PASSAGE_TOKENS = 150
DEFAULT_CATEGORY = "all"

DATA_FILE = "passages.jsonl"
META_FILE = "meta.jsonl"


class CorpusError(Exception):
    """Base error for corpus operations."""


class PassageNotFoundError(CorpusError):
    pass


class DuplicatePassageError(CorpusError):
    pass


class EmptyCategoryError(CorpusError):
    pass


@dataclass(frozen=True)
class Passage:
    id: str
    page_title: str
    text: str
    category: str = DEFAULT_CATEGORY


@dataclass(frozen=True)
class Page:
    title: str
    passage_ids: tuple[str, ...]
    category: str = DEFAULT_CATEGORY


@dataclass(frozen=True)
class CorpusStats:
    passage_count: int
    page_count: int
    token_total: int


@dataclass(frozen=True)
class RejectedRecord:
    line_number: int
    reason: str


@dataclass(frozen=True)
class IngestReport:
    """Outcome of one ingest run: corpus stats plus per-record rejects."""

    stats: CorpusStats
    ingested: int
    skipped: int
    rejects: tuple[RejectedRecord, ...] = ()


@dataclass
class _MetaEntry:
    title: str
    category: str
    offset: int
    length: int
    tokens: int


def _record_fields(obj: dict, fmt: str) -> tuple[str, str, str, Optional[str]]:
    """Pull (id, title, text, category) out of a raw record for the given format."""
    if fmt == "kilt-jsonl":
        rid = obj.get("id", obj.get("_id"))
        title = obj.get("title", obj.get("wikipedia_title"))
    elif fmt == "plain-jsonl":
        rid = obj.get("id")
        title = obj.get("title")
    else:
        raise ValueError(f"unknown corpus format {fmt!r}")
    return rid, title, obj.get("text"), obj.get("category")


class CorpusStore:
    """Append-only passage store with an in-memory id -> file-offset index.

    Ingest is single-writer; once ingest completes, reads go through
    ``os.pread`` and are safe from any number of concurrent readers.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._data_path = self.root / DATA_FILE
        self._meta_path = self.root / META_FILE
        self._meta: dict[str, _MetaEntry] = {}
        self._pages: dict[str, list[str]] = {}
        self._page_category: dict[str, str] = {}
        self._token_total = 0
        self._read_fd: Optional[int] = None
        if self._meta_path.exists():
            self._load_meta()

    # -- loading -----------------------------------------------------------

    def _load_meta(self) -> None:
        with self._meta_path.open("r", encoding="utf-8") as fh:
            for line in fh:
                obj = json.loads(line)
                self._register(
                    obj["id"],
                    _MetaEntry(
                        title=obj["title"],
                        category=obj["category"],
                        offset=obj["offset"],
                        length=obj["length"],
                        tokens=obj["tokens"],
                    ),
                )

    def _register(self, pid: str, entry: _MetaEntry) -> None:
        self._meta[pid] = entry
        self._pages.setdefault(entry.title, []).append(pid)
        self._page_category.setdefault(entry.title, entry.category)
        self._token_total += entry.tokens

    def _fd(self) -> int:
        if self._read_fd is None:
            self._read_fd = os.open(self._data_path, os.O_RDONLY)
        return self._read_fd

    def close(self) -> None:
        if self._read_fd is not None:
            os.close(self._read_fd)
            self._read_fd = None

    # -- ingest ------------------------------------------------------------

    def ingest(self, source_path: str | Path, format: str = "plain-jsonl") -> IngestReport:
        """Ingest a JSONL file of passage records.

        Malformed records are rejected line by line and ingest continues;
        re-ingesting a byte-identical record is a no-op; an id collision with
        different content is a hard error.
        """
        source = Path(source_path)
        if not source.exists():
            raise CorpusError(f"source file not found: {source}")

        ingested = 0
        skipped = 0
        rejects: list[RejectedRecord] = []

        with source.open("r", encoding="utf-8") as src, \
                self._data_path.open("a", encoding="utf-8") as data, \
                self._meta_path.open("a", encoding="utf-8") as meta:
            for line_number, line in enumerate(src, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    rejects.append(RejectedRecord(line_number, f"invalid JSON: {exc.msg}"))
                    continue
                try:
                    rid, title, text, category = _record_fields(obj, format)
                except ValueError:
                    raise
                reason = _validate_record(rid, title, text)
                if reason is not None:
                    rejects.append(RejectedRecord(line_number, reason))
                    continue
                category = category or DEFAULT_CATEGORY

                if rid in self._meta:
                    existing = self.get_passage(rid)
                    if (existing.page_title, existing.text, existing.category) == (title, text, category):
                        skipped += 1
                        continue
                    raise DuplicatePassageError(
                        f"id {rid!r} already stored with different content (line {line_number})"
                    )

                payload = json.dumps(
                    {"id": rid, "title": title, "text": text, "category": category},
                    ensure_ascii=False,
                )
                raw = payload.encode("utf-8")
                offset = data.tell()
                data.write(payload + "\n")
                tokens = len(text.split())
                entry = _MetaEntry(title, category, offset, len(raw), tokens)
                meta.write(
                    json.dumps(
                        {
                            "id": rid,
                            "title": title,
                            "category": category,
                            "offset": offset,
                            "length": len(raw),
                            "tokens": tokens,
                        },
                        ensure_ascii=False,
                    )
                    + "\n"
                )
                self._register(rid, entry)
                ingested += 1

        return IngestReport(self.stats(), ingested, skipped, tuple(rejects))

    # -- reads -------------------------------------------------------------

    def stats(self) -> CorpusStats:
        return CorpusStats(len(self._meta), len(self._pages), self._token_total)

    def __len__(self) -> int:
        return len(self._meta)

    def __contains__(self, pid: str) -> bool:
        return pid in self._meta

    def get_passage(self, pid: str) -> Passage:
        entry = self._meta.get(pid)
        if entry is None:
            raise PassageNotFoundError(f"unknown passage id {pid!r}")
        raw = os.pread(self._fd(), entry.length, entry.offset)
        obj = json.loads(raw)
        return Passage(obj["id"], obj["title"], obj["text"], obj["category"])

    def passage_ids(self) -> Iterator[str]:
        """Ids in ingest (document) order."""
        return iter(self._meta)

    def iter_passages(self) -> Iterator[Passage]:
        for pid in self._meta:
            yield self.get_passage(pid)

    def page(self, title: str) -> Page:
        ids = self._pages.get(title)
        if not ids:
            raise CorpusError(f"unknown page {title!r}")
        return Page(title, tuple(ids), self._page_category[title])

    def page_titles(self) -> list[str]:
        return sorted(self._pages)

    def categories(self) -> list[str]:
        return sorted(set(self._page_category.values()))

    def sample_page(self, category: Optional[str] = None, rng_seed: int = 0) -> Page:
        """Draw a page uniformly from `category` (or all pages), deterministically per seed."""
        if category is None:
            eligible = sorted(self._pages)
        else:
            eligible = sorted(
                t for t, cat in self._page_category.items() if cat == category
            )
        if not eligible:
            raise EmptyCategoryError(f"no pages in category {category!r}")
        rng = random.Random(rng_seed)
        return self.page(rng.choice(eligible))


def _validate_record(rid, title, text) -> Optional[str]:
    if not isinstance(rid, str) or not rid:
        return "missing or empty id"
    if not isinstance(title, str) or not title:
        return "missing or empty title"
    if not isinstance(text, str) or not text:
        return "missing or empty text"
    if len(text.split()) > MAX_PASSAGE_TOKENS:
        return f"text exceeds {MAX_PASSAGE_TOKENS} whitespace tokens"
    return None


def ingest_corpus(store: CorpusStore | str | Path, source_path: str | Path,
                  format: str = "plain-jsonl") -> IngestReport:
    """Ingest `source_path` into `store` (a CorpusStore or a directory path)."""
    if not isinstance(store, CorpusStore):
        store = CorpusStore(store)
    return store.ingest(source_path, format=format)
