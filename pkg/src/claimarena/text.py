"""Tokenization and n-gram feature hashing shared across indexing, analytics, and classification.

One tokenizer for everything: lowercase, split on non-alphanumeric characters,
no stemming, stopwords kept. Features are unigrams and bigrams mapped into a
fixed 2^20 bucket space by a seedless 64-bit hash; collisions are accepted.
"""

from __future__ import annotations

import hashlib
import re
from collections import Counter
from typing import Sequence

BUCKET_BITS = 20
BUCKET_COUNT = 1 << BUCKET_BITS

# Unicode alphanumerics, underscore excluded.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase `text` and split it on runs of non-alphanumeric characters."""
    return _TOKEN_RE.findall(text.lower())


def whitespace_tokens(text: str) -> list[str]:
    """Whitespace split, used only for token-count statistics."""
    return text.split()


def ngrams(tokens: Sequence[str], n: int) -> list[tuple[str, ...]]:
    """All contiguous n-grams of `tokens`, in order."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def hash_feature(ngram: Sequence[str]) -> int:
    """Map a unigram or bigram to a deterministic bucket in [0, 2^20).

    The hash is seedless (blake2b, 64-bit digest) so bucket assignments are
    stable across processes and runs.
    """
    if len(ngram) not in (1, 2):
        raise ValueError(f"expected a unigram or bigram, got {len(ngram)} tokens")
    if any(not tok for tok in ngram):
        raise ValueError("empty token in n-gram")
    key = " ".join(ngram).encode("utf-8")
    digest = hashlib.blake2b(key, digest_size=8).digest()
    return int.from_bytes(digest, "little") % BUCKET_COUNT


def hashed_features(tokens: Sequence[str]) -> Counter:
    """Bucket -> count over the unigrams and bigrams of a token stream."""
    feats: Counter = Counter()
    for tok in tokens:
        feats[hash_feature((tok,))] += 1
    for pair in zip(tokens, tokens[1:]):
        feats[hash_feature(pair)] += 1
    return feats
