"""Sparse (hashed TF-IDF) and dense (exact inner-product) passage retrieval.

The sparse index hashes unigram+bigram features of ``title + " " + text``
into 2^20 buckets and scores queries by TF-IDF cosine. The dense index is an
exact full scan over precomputed passage embeddings. Both are immutable once
built and safe to query from any number of threads.
"""

from __future__ import annotations

import io
import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .corpus import CorpusStore, Passage
from .text import BUCKET_COUNT, hash_feature, hashed_features, tokenize

__all__ = [
    "RankedHit",
    "SparseIndex",
    "DenseIndex",
    "build_sparse_index",
    "sparse_query",
    "dense_query",
    "highlight_overlap",
    "hash_feature",
    "PassageRetriever",
    "save_dense_index",
    "load_dense_index",
]

_SPARSE_MAGIC = b"CASPARSE"
_DENSE_MAGIC = b"FM2DENSE"


class RetrievalError(Exception):
    pass


class EmptyCorpusError(RetrievalError):
    pass


class DimensionMismatchError(RetrievalError):
    pass


@dataclass(frozen=True)
class RankedHit:
    passage_id: str
    score: float
    rank: int


def _idf(doc_count: int, doc_freq: int) -> float:
    # Smoothed variant of the Robertson/Sparck-Jones idf: strictly positive
    # for every doc_freq <= doc_count, so document norms never vanish and
    # self-retrieval holds on corpora of any size.
    return math.log1p((doc_count - doc_freq + 0.5) / (doc_freq + 0.5))


class SparseIndex:
    """Inverted index over hashed unigram+bigram features.

    postings: bucket -> list of (doc ordinal, term frequency), ordinals in
    corpus ingest order. Document norms are precomputed over TF-IDF weights
    ``log(1+tf) * idf``.
    """

    def __init__(self, doc_ids: list[str], postings: dict[int, list[tuple[int, int]]],
                 norms: list[float]):
        self.bucket_count = BUCKET_COUNT
        self._doc_ids = doc_ids
        self._postings = postings
        self._norms = norms
        self._ordinals = {pid: i for i, pid in enumerate(doc_ids)}

    @property
    def doc_count(self) -> int:
        return len(self._doc_ids)

    def doc_norm(self, passage_id: str) -> float:
        return self._norms[self._ordinals[passage_id]]

    def bucket_doc_freq(self, bucket: int) -> int:
        return len(self._postings.get(bucket, ()))

    def has_bucket(self, bucket: int) -> bool:
        return bucket in self._postings

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SparseIndex)
            and self._doc_ids == other._doc_ids
            and self._postings == other._postings
            and self._norms == other._norms
        )

    # -- scoring -----------------------------------------------------------

    def query(self, text: str, k: int) -> list[RankedHit]:
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        q_feats = hashed_features(tokenize(text))
        if not q_feats:
            return []
        n = self.doc_count
        q_norm_sq = 0.0
        acc: dict[int, float] = {}
        for bucket, qtf in q_feats.items():
            plist = self._postings.get(bucket)
            idf = _idf(n, len(plist) if plist else 0)
            wq = math.log1p(qtf) * idf
            q_norm_sq += wq * wq
            if not plist:
                continue
            factor = wq * idf
            for ordinal, tf in plist:
                acc[ordinal] = acc.get(ordinal, 0.0) + factor * math.log1p(tf)
        if not acc:
            return []
        q_norm = math.sqrt(q_norm_sq)
        scored = [
            (dot / (q_norm * self._norms[ordinal]), self._doc_ids[ordinal])
            for ordinal, dot in acc.items()
        ]
        scored.sort(key=lambda item: (-item[0], item[1]))
        return [
            RankedHit(pid, score, rank)
            for rank, (score, pid) in enumerate(scored[:k], start=1)
        ]

    # -- serialization -----------------------------------------------------

    def save(self, path: str | Path) -> None:
        """Write a deterministic binary image: same index -> same bytes."""
        buf = io.BytesIO()
        buf.write(_SPARSE_MAGIC)
        buf.write(struct.pack("<II", 1, len(self._doc_ids)))
        for pid, norm in zip(self._doc_ids, self._norms):
            raw = pid.encode("utf-8")
            buf.write(struct.pack("<H", len(raw)))
            buf.write(raw)
            buf.write(struct.pack("<d", norm))
        buf.write(struct.pack("<I", len(self._postings)))
        for bucket in sorted(self._postings):
            plist = self._postings[bucket]
            buf.write(struct.pack("<II", bucket, len(plist)))
            for ordinal, tf in plist:
                buf.write(struct.pack("<II", ordinal, tf))
        Path(path).write_bytes(buf.getvalue())

    @classmethod
    def load(cls, path: str | Path) -> "SparseIndex":
        raw = Path(path).read_bytes()
        view = io.BytesIO(raw)
        if view.read(8) != _SPARSE_MAGIC:
            raise RetrievalError(f"not a sparse index file: {path}")
        version, doc_count = struct.unpack("<II", view.read(8))
        if version != 1:
            raise RetrievalError(f"unsupported sparse index version {version}")
        doc_ids: list[str] = []
        norms: list[float] = []
        for _ in range(doc_count):
            (id_len,) = struct.unpack("<H", view.read(2))
            doc_ids.append(view.read(id_len).decode("utf-8"))
            norms.append(struct.unpack("<d", view.read(8))[0])
        (n_buckets,) = struct.unpack("<I", view.read(4))
        postings: dict[int, list[tuple[int, int]]] = {}
        for _ in range(n_buckets):
            bucket, df = struct.unpack("<II", view.read(8))
            plist = []
            for _ in range(df):
                plist.append(struct.unpack("<II", view.read(8)))
            postings[bucket] = plist
        return cls(doc_ids, postings, norms)


def build_sparse_index(corpus: CorpusStore) -> SparseIndex:
    """Index every passage over unigrams+bigrams of ``title + " " + text``."""
    if len(corpus) == 0:
        raise EmptyCorpusError("cannot build a sparse index over an empty corpus")
    doc_ids: list[str] = []
    postings: dict[int, list[tuple[int, int]]] = {}
    doc_feats: list[dict[int, int]] = []
    for ordinal, passage in enumerate(corpus.iter_passages()):
        doc_ids.append(passage.id)
        feats = hashed_features(tokenize(passage.page_title + " " + passage.text))
        doc_feats.append(feats)
        for bucket, tf in feats.items():
            postings.setdefault(bucket, []).append((ordinal, tf))
    n = len(doc_ids)
    norms = []
    for feats in doc_feats:
        norm_sq = 0.0
        for bucket, tf in feats.items():
            w = math.log1p(tf) * _idf(n, len(postings[bucket]))
            norm_sq += w * w
        norms.append(math.sqrt(norm_sq))
    return SparseIndex(doc_ids, postings, norms)


def sparse_query(index: SparseIndex, text: str, k: int) -> list[RankedHit]:
    """Top-k passages by TF-IDF cosine; ties broken by ascending passage id."""
    return index.query(text, k)


class DenseIndex:
    """Passage embeddings for exact inner-product search."""

    def __init__(self, vectors: np.ndarray, passage_ids: Sequence[str]):
        vectors = np.asarray(vectors, dtype=np.float32)
        if vectors.ndim != 2:
            raise RetrievalError("embedding matrix must be 2-dimensional")
        if vectors.shape[0] != len(passage_ids):
            raise RetrievalError(
                f"{vectors.shape[0]} embedding rows but {len(passage_ids)} passage ids"
            )
        self.vectors = vectors
        self.passage_ids = list(passage_ids)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def row_count(self) -> int:
        return self.vectors.shape[0]


def dense_query(index: DenseIndex, query_vector: Sequence[float], k: int) -> list[RankedHit]:
    """Exact top-k by inner product over a full scan; ties by ascending passage id."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    q = np.asarray(query_vector, dtype=np.float64)
    if q.shape != (index.dim,):
        raise DimensionMismatchError(
            f"query has dim {q.shape[0] if q.ndim == 1 else q.shape}, index has dim {index.dim}"
        )
    scores = index.vectors @ q
    order = sorted(
        range(index.row_count),
        key=lambda i: (-scores[i], index.passage_ids[i]),
    )[:k]
    return [
        RankedHit(index.passage_ids[i], float(scores[i]), rank)
        for rank, i in enumerate(order, start=1)
    ]


def save_dense_index(index: DenseIndex, path: str | Path, sidecar_path: str | Path) -> None:
    """Write the binary embedding file and its row -> passage_id sidecar.

    Layout: magic ``FM2DENSE``, u32 dim, u64 rows (little-endian), then
    rows*dim float32 in row-major order.
    """
    with Path(path).open("wb") as fh:
        fh.write(_DENSE_MAGIC)
        fh.write(struct.pack("<IQ", index.dim, index.row_count))
        fh.write(index.vectors.astype("<f4").tobytes(order="C"))
    with Path(sidecar_path).open("w", encoding="utf-8") as fh:
        for row, pid in enumerate(index.passage_ids):
            fh.write(json.dumps({"row": row, "passage_id": pid}) + "\n")


def load_dense_index(path: str | Path, sidecar_path: str | Path) -> DenseIndex:
    raw = Path(path).read_bytes()
    if raw[:8] != _DENSE_MAGIC:
        raise RetrievalError(f"not a dense embedding file: {path}")
    dim, rows = struct.unpack_from("<IQ", raw, 8)
    expected = 8 + 12 + rows * dim * 4
    if len(raw) != expected:
        raise RetrievalError(
            f"dense file truncated: expected {expected} bytes, found {len(raw)}"
        )
    vectors = np.frombuffer(raw, dtype="<f4", offset=20).reshape(rows, dim)
    ids: dict[int, str] = {}
    with Path(sidecar_path).open("r", encoding="utf-8") as fh:
        for line in fh:
            obj = json.loads(line)
            ids[obj["row"]] = obj["passage_id"]
    if len(ids) != rows:
        raise RetrievalError(
            f"sidecar lists {len(ids)} rows but embedding file has {rows}"
        )
    return DenseIndex(vectors.copy(), [ids[i] for i in range(rows)])


def highlight_overlap(claim_text: str, passage: Union[Passage, str]) -> set[tuple[int, int]]:
    """Exact lowercase token matches between a claim draft and a passage.

    Returns (claim token index, passage token index) pairs; the authoring UI
    uses them to show which words drive retrieval.
    """
    passage_text = passage.text if isinstance(passage, Passage) else passage
    claim_tokens = tokenize(claim_text)
    passage_positions: dict[str, list[int]] = {}
    for j, tok in enumerate(tokenize(passage_text)):
        passage_positions.setdefault(tok, []).append(j)
    matches: set[tuple[int, int]] = set()
    for i, tok in enumerate(claim_tokens):
        for j in passage_positions.get(tok, ()):
            matches.add((i, j))
    return matches


class PassageRetriever:
    """Sparse search bound to its corpus store; shared by the game loop and e2e prediction."""

    def __init__(self, corpus: CorpusStore, index: SparseIndex):
        self.corpus = corpus
        self.index = index

    def query(self, text: str, k: int) -> list[RankedHit]:
        return self.index.query(text, k)

    def passage(self, passage_id: str) -> Passage:
        return self.corpus.get_passage(passage_id)
