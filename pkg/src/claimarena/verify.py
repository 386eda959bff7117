"""Entailment prediction over claims and (optionally) evidence passages.

The native model is logistic regression over the same 2^20 hashed
unigram+bigram feature space the retriever uses, trainable claim-only or
evidence-aware. A wire adapter lets an external model service plug into the
same prediction surface. End-to-end verification retrieves top-k passages and
averages per-passage logits.
"""

from __future__ import annotations

import logging
import math
import struct
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import httpx
import numpy as np

from .retrieval import PassageRetriever
from .text import BUCKET_COUNT, hashed_features, tokenize

logger = logging.getLogger(__name__)

CLASSES = ("entailed", "refuted")

# Separates claim tokens from evidence tokens in the hashed stream; the
# tokenizer can never produce it.
BOUNDARY_TOKEN = "\x1e"

_MODEL_MAGIC = b"FM2LR"


class VerifyError(Exception):
    pass


class TrainingDataError(VerifyError):
    pass


class AdapterError(VerifyError):
    def __init__(self, message: str, endpoint: str, attempts: int, elapsed: float):
        super().__init__(
            f"{message} (endpoint={endpoint}, attempts={attempts}, elapsed={elapsed:.3f}s)"
        )
        self.endpoint = endpoint
        self.attempts = attempts
        self.elapsed = elapsed


@dataclass(frozen=True)
class Prediction:
    claim_id: Optional[str]
    logits: tuple[float, float]  # (entailed, refuted)
    label: str
    evidence_used: tuple[str, ...] = ()
    fallback_claim_only: bool = False


@dataclass(frozen=True)
class Partition:
    easy: frozenset
    hard: frozenset


@dataclass(frozen=True)
class TrainingInstance:
    claim_id: str
    claim_text: str
    passage_id: str
    passage_text: str
    label: str


def _as_text_label(claim) -> tuple[str, str]:
    if isinstance(claim, (tuple, list)):
        return claim[0], claim[1]
    return claim.text, claim.label


def _label_from_logits(logits: tuple[float, float]) -> str:
    # Ties resolve to entailed so predictions are deterministic.
    return CLASSES[0] if logits[0] >= logits[1] else CLASSES[1]


class LinearClaimClassifier:
    """Two-class logistic regression over hashed n-gram features.

    ``include_evidence=False`` makes the model claim-only by construction:
    the evidence argument never reaches featurization.
    """

    def __init__(self, include_evidence: bool = False, dim: int = BUCKET_COUNT):
        self.dim = dim
        self.include_evidence = include_evidence
        self.weights = np.zeros((2, dim), dtype=np.float64)
        self.bias = np.zeros(2, dtype=np.float64)
        self.epochs = 0
        self.learning_rate = 0.0
        self.seed = 0
        self.loss_history: list[float] = []

    # -- featurization ---------------------------------------------------

    def featurize(self, claim_text: str, evidence_texts: Sequence[str] = ()) -> dict[int, int]:
        tokens = tokenize(claim_text)
        if self.include_evidence and evidence_texts:
            # Duplicate passages carry no extra signal; keep first occurrence.
            for evidence in dict.fromkeys(evidence_texts):
                tokens.append(BOUNDARY_TOKEN)
                tokens.extend(tokenize(evidence))
        return dict(hashed_features(tokens))

    # -- numerics ----------------------------------------------------------

    def _logits(self, feats: dict[int, int]) -> np.ndarray:
        if not feats:
            return self.bias.copy()
        idx = np.fromiter(feats.keys(), dtype=np.int64, count=len(feats))
        cnt = np.fromiter(feats.values(), dtype=np.float64, count=len(feats))
        return self.bias + self.weights[:, idx] @ cnt

    def logits_for(self, claim_text: str, evidence_texts: Sequence[str] = ()) -> tuple[float, float]:
        z = self._logits(self.featurize(claim_text, evidence_texts))
        return (float(z[0]), float(z[1]))

    def loss_and_grad(self, examples: Sequence[tuple[dict[int, int], int]]):
        """Mean cross-entropy over `examples` plus its exact gradient.

        Returns ``(loss, grad_bias, grad_weights)`` where grad_weights maps
        (class, feature) to the gradient entry. Kept sparse: only touched
        features appear.
        """
        n = len(examples)
        loss = 0.0
        grad_bias = np.zeros(2, dtype=np.float64)
        grad_w: dict[tuple[int, int], float] = {}
        for feats, y in examples:
            z = self._logits(feats)
            m = z.max()
            log_norm = m + math.log(math.exp(z[0] - m) + math.exp(z[1] - m))
            loss += log_norm - z[y]
            p = np.exp(z - log_norm)
            delta = p.copy()
            delta[y] -= 1.0
            grad_bias += delta
            for f, c in feats.items():
                grad_w[(0, f)] = grad_w.get((0, f), 0.0) + delta[0] * c
                grad_w[(1, f)] = grad_w.get((1, f), 0.0) + delta[1] * c
        inv = 1.0 / n
        grad_bias *= inv
        for key in grad_w:
            grad_w[key] *= inv
        return loss * inv, grad_bias, grad_w

    def _mean_loss(self, examples: Sequence[tuple[dict[int, int], int]]) -> float:
        total = 0.0
        for feats, y in examples:
            z = self._logits(feats)
            m = z.max()
            total += m + math.log(math.exp(z[0] - m) + math.exp(z[1] - m)) - z[y]
        return total / len(examples)

    # -- training ----------------------------------------------------------

    def fit(
        self,
        claims: Iterable,
        seed: int = 0,
        epochs: int = 10,
        learning_rate: float = 0.5,
        batch_size: Optional[int] = 32,
    ) -> "LinearClaimClassifier":
        pairs = [_as_text_label(c) for c in claims]
        if len(pairs) < 2:
            raise TrainingDataError("need at least two training claims")
        labels = {label for _, label in pairs}
        if labels != set(CLASSES):
            raise TrainingDataError(
                f"training set must contain both labels {CLASSES}, found {sorted(labels)}"
            )
        examples = [
            (self.featurize(text), CLASSES.index(label)) for text, label in pairs
        ]
        rng = np.random.default_rng(seed)
        order = np.arange(len(examples))
        step = batch_size or len(examples)
        for _ in range(epochs):
            if batch_size is not None:
                rng.shuffle(order)
            for start in range(0, len(examples), step):
                batch = [examples[i] for i in order[start : start + step]]
                _, grad_bias, grad_w = self.loss_and_grad(batch)
                self.bias -= learning_rate * grad_bias
                for (c, f), g in grad_w.items():
                    self.weights[c, f] -= learning_rate * g
            self.loss_history.append(self._mean_loss(examples))
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.seed = seed
        return self

    def accuracy(self, claims: Iterable) -> float:
        pairs = [_as_text_label(c) for c in claims]
        correct = sum(
            1
            for text, label in pairs
            if _label_from_logits(self.logits_for(text)) == label
        )
        return correct / len(pairs)

    # -- serialization -----------------------------------------------------

    def save(self, path: str | Path) -> None:
        with Path(path).open("wb") as fh:
            fh.write(_MODEL_MAGIC)
            fh.write(struct.pack("<II", 1, self.dim))
            fh.write(struct.pack("<BIdq", int(self.include_evidence), self.epochs,
                                 self.learning_rate, self.seed))
            fh.write(struct.pack("<dd", float(self.bias[0]), float(self.bias[1])))
            fh.write(self.weights.astype("<f4").tobytes(order="C"))

    @classmethod
    def load(cls, path: str | Path) -> "LinearClaimClassifier":
        raw = Path(path).read_bytes()
        if raw[: len(_MODEL_MAGIC)] != _MODEL_MAGIC:
            raise VerifyError(f"not a model file: {path}")
        off = len(_MODEL_MAGIC)
        version, dim = struct.unpack_from("<II", raw, off)
        off += 8
        if version != 1:
            raise VerifyError(f"unsupported model version {version}")
        include_evidence, epochs, lr, seed = struct.unpack_from("<BIdq", raw, off)
        off += struct.calcsize("<BIdq")
        b0, b1 = struct.unpack_from("<dd", raw, off)
        off += 16
        model = cls(include_evidence=bool(include_evidence), dim=dim)
        model.epochs, model.learning_rate, model.seed = epochs, lr, seed
        model.bias = np.array([b0, b1], dtype=np.float64)
        model.weights = (
            np.frombuffer(raw, dtype="<f4", offset=off, count=2 * dim)
            .reshape(2, dim)
            .astype(np.float64)
        )
        return model


class ExternalAdapterModel:
    """Prediction over the wire: POST /predict with claim + evidence, logits back."""

    def __init__(
        self,
        endpoint: str,
        timeout: float = 5.0,
        retries: int = 2,
        transport: Optional[httpx.BaseTransport] = None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.retries = retries
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def logits_for(self, claim_text: str, evidence_texts: Sequence[str] = ()) -> tuple[float, float]:
        url = f"{self.endpoint}/predict"
        body = {"claim": claim_text, "evidence": list(evidence_texts)}
        started = time.monotonic()
        last_error = "no attempt made"
        for attempt in range(1, self.retries + 2):
            try:
                response = self._client.post(url, json=body)
                response.raise_for_status()
                logits = response.json()["logits"]
                return (float(logits[0]), float(logits[1]))
            except (httpx.HTTPError, KeyError, IndexError, TypeError, ValueError) as exc:
                last_error = f"{type(exc).__name__}: {exc}"
        raise AdapterError(
            f"prediction failed: {last_error}",
            endpoint=url,
            attempts=self.retries + 1,
            elapsed=time.monotonic() - started,
        )

    def close(self) -> None:
        self._client.close()


def train_claim_only(
    train_claims: Iterable,
    seed: int = 0,
    epochs: int = 10,
    learning_rate: float = 0.5,
    batch_size: Optional[int] = 32,
) -> LinearClaimClassifier:
    """Train the evidence-blind classifier used for artifact and difficulty analysis."""
    return LinearClaimClassifier(include_evidence=False).fit(
        train_claims, seed=seed, epochs=epochs,
        learning_rate=learning_rate, batch_size=batch_size,
    )


def predict(
    model,
    claim_text: str,
    evidence_texts: Sequence[str] = (),
    claim_id: Optional[str] = None,
) -> Prediction:
    """Logits over {entailed, refuted} from a native model or an external adapter."""
    logits = model.logits_for(claim_text, tuple(evidence_texts))
    return Prediction(claim_id, logits, _label_from_logits(logits))


def partition_easy_hard(model, dev_claims: Iterable) -> Partition:
    """Split claims into those the claim-only model labels correctly (easy) and the rest."""
    easy = set()
    hard = set()
    for claim in dev_claims:
        if _label_from_logits(model.logits_for(claim.text)) == claim.label:
            easy.add(claim.id)
        else:
            hard.add(claim.id)
    return Partition(frozenset(easy), frozenset(hard))


def _mean_logits(per_passage: list[tuple[float, float]]) -> tuple[float, float]:
    out = []
    for component in zip(*per_passage):
        # The mean of identical logits must be exactly that logit.
        if min(component) == max(component):
            out.append(component[0])
        else:
            out.append(math.fsum(component) / len(component))
    return (out[0], out[1])


def e2e_predict(model, retriever: PassageRetriever, claim, k: int) -> Prediction:
    """Retrieve top-k passages for the claim and average per-passage logits."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    claim_id = getattr(claim, "id", None)
    claim_text = claim.text if hasattr(claim, "text") else str(claim)
    hits = retriever.query(claim_text, k)
    if not hits:
        logits = model.logits_for(claim_text, ())
        return Prediction(
            claim_id, logits, _label_from_logits(logits), (), fallback_claim_only=True
        )
    per_passage = [
        model.logits_for(claim_text, (retriever.passage(h.passage_id).text,))
        for h in hits
    ]
    logits = _mean_logits(per_passage)
    return Prediction(
        claim_id,
        logits,
        _label_from_logits(logits),
        tuple(h.passage_id for h in hits),
    )


def make_training_instances(
    claims: Iterable, retriever: PassageRetriever, retrieved_k: int = 2
) -> list[TrainingInstance]:
    """One gold-passage instance per claim plus its top retrieved passages.

    Retrieved passages equal to the gold one are dropped; claims without an
    aligned gold passage are skipped with a warning.
    """
    instances: list[TrainingInstance] = []
    for claim in claims:
        gold_id = None
        for span in claim.gold_evidence:
            if span.passage_id is not None:
                gold_id = span.passage_id
                break
        if gold_id is None:
            logger.warning("skipping unaligned claim %s", claim.id)
            continue
        gold = retriever.passage(gold_id)
        instances.append(
            TrainingInstance(claim.id, claim.text, gold.id, gold.text, claim.label)
        )
        for hit in retriever.query(claim.text, retrieved_k):
            if hit.passage_id == gold_id:
                continue
            passage = retriever.passage(hit.passage_id)
            instances.append(
                TrainingInstance(claim.id, claim.text, passage.id, passage.text, claim.label)
            )
    return instances
