import json
import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from claimarena.corpus import CorpusStore
from claimarena.game import GameConfig, GameEngine
from claimarena.events import EventLog
from claimarena.retrieval import PassageRetriever, build_sparse_index


class FakeClock:
    """Deterministic clock the engine and service tests drive by hand."""

    def __init__(self, start: float = 1_000.0):
        self.now = start

    def __call__(self) -> float:
        return self.now

    def advance(self, seconds: float) -> None:
        self.now += seconds


def write_jsonl(path: Path, records) -> Path:
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    return path


def make_corpus(tmp_path: Path, records, name: str = "corpus") -> CorpusStore:
    source = write_jsonl(tmp_path / f"{name}.jsonl", records)
    store = CorpusStore(tmp_path / name)
    store.ingest(source)
    return store


GAME_RECORDS = [
    {"id": "p01", "title": "Aster Moth", "category": "Nature",
     "text": "the aster moth feeds on mountain flowers during early summer nights"},
    {"id": "p02", "title": "Aster Moth", "category": "Nature",
     "text": "collectors prize the aster moth for the silver bands on its wings"},
    {"id": "p03", "title": "Granite Bridge", "category": "History",
     "text": "the granite bridge was completed in 1821 after seven years of work"},
    {"id": "p04", "title": "Granite Bridge", "category": "History",
     "text": "floods in 1902 destroyed two arches of the granite bridge"},
    {"id": "p05", "title": "Harbor Lighthouse", "category": "History",
     "text": "the harbor lighthouse guided ships with a whale oil lamp until 1890"},
    {"id": "p06", "title": "Harbor Lighthouse", "category": "History",
     "text": "keepers lived inside the harbor lighthouse with their families"},
]


@pytest.fixture
def game_corpus(tmp_path):
    return make_corpus(tmp_path, GAME_RECORDS)


@pytest.fixture
def retriever(game_corpus):
    return PassageRetriever(game_corpus, build_sparse_index(game_corpus))


@pytest.fixture
def clock():
    return FakeClock()


@pytest.fixture
def engine(game_corpus, retriever, clock):
    return GameEngine(
        game_corpus,
        retriever,
        GameConfig(seed=7),
        event_log=EventLog(),
        clock=clock,
    )


def author_claim(engine, author, label, text, span, category=None):
    """Author one claim through the real session flow; picks a page containing `span`."""
    for attempt in range(40):
        session = engine.start_authoring(author, category)
        passages = [engine.corpus.get_passage(p) for p in session.page.passage_ids]
        if any(span in p.text for p in passages):
            return engine.submit_claim(session.session_id, text, label, [span])
    raise AssertionError(f"no page carries span {span!r}")


def seed_pair(engine):
    """One entailed and one refuted claim by two different authors."""
    entailed = author_claim(
        engine, "alice", "entailed",
        "the aster moth has silver bands on its wings",
        "silver bands on its wings",
    )
    refuted = author_claim(
        engine, "bob", "refuted",
        "the granite bridge was built in a single year",
        "completed in 1821 after seven years",
    )
    return entailed, refuted


@pytest.fixture
def rng():
    return random.Random(20240811)


def gen_vocab(rng, n):
    import string

    words = set()
    while len(words) < n:
        words.add("".join(rng.choices(string.ascii_lowercase, k=rng.randint(3, 8))))
    return sorted(words)


def random_corpus_and_queries(seed, n_docs, vocab_size, n_queries):
    """Random small-vocabulary corpus plus queries; texts are unique.

    Used with seeds verified to produce zero feature-hash collisions so
    term-level oracles apply exactly.
    """
    rng = random.Random(seed)
    vocab = gen_vocab(rng, vocab_size)
    texts = set()
    records = []
    for i in range(n_docs):
        while True:
            text = " ".join(rng.choices(vocab, k=rng.randint(10, 22)))
            if text not in texts:
                texts.add(text)
                break
        title = " ".join(rng.choices(vocab, k=2))
        records.append({"id": f"d{i:04d}", "title": title, "text": text})
    queries = [" ".join(rng.choices(vocab, k=rng.randint(3, 8))) for _ in range(n_queries)]
    return records, queries


def assert_collision_free(records, queries):
    from claimarena.text import hash_feature, ngrams, tokenize

    feats = set()
    for r in records:
        toks = tokenize(r["title"] + " " + r["text"])
        feats.update((t,) for t in toks)
        feats.update(ngrams(toks, 2))
    for q in queries:
        toks = tokenize(q)
        feats.update((t,) for t in toks)
        feats.update(ngrams(toks, 2))
    seen = {}
    for f in feats:
        b = hash_feature(f)
        assert b not in seen or seen[b] == f, f"hash collision: {f} vs {seen[b]}"
        seen[b] = f
