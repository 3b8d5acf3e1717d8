"""Subword-augmented skip-gram embeddings with negative sampling.

Trains word plus character-n-gram bucket vectors on a plain-text corpus
(one description per line), composes phrase vectors as means of token
vectors, and answers exact cosine nearest-neighbor queries. Training is
single-threaded and fully deterministic for a fixed seed; a trained model
is immutable and safe to share across threads for lookup.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from taxoforge.errors import (
    ConfigError,
    DataFormatError,
    DegeneratePhraseError,
    EmptyCorpusError,
    EmptyIndexError,
)
from taxoforge.text import tokenize

__all__ = [
    "EmbeddingConfig",
    "EmbeddingModel",
    "PhraseVector",
    "SkipGramEmbedding",
    "subword_ids",
    "fnv1a_64",
    "train",
    "cosine",
    "nearest_neighbor",
    "NNIndex",
    "sgns_objective",
    "sgns_gradients",
]

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = 0xFFFFFFFFFFFFFFFF


def fnv1a_64(data: bytes) -> int:
    """FNV-1a 64-bit hash."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _U64
    return h


@dataclass(frozen=True)
class EmbeddingConfig:
    """Hyperparameters for training and phrase composition."""

    dim: int = 100
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    lr0: float = 0.05
    min_count: int = 2
    ngram_min: int = 3
    ngram_max: int = 6
    buckets: int = 262144
    subsample_t: float = 1e-4
    seed: int = 0

    def validate(self) -> "EmbeddingConfig":
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        if self.ngram_min > self.ngram_max:
            raise ConfigError("ngram_min must be <= ngram_max")
        if self.ngram_min < 1:
            raise ConfigError("ngram_min must be >= 1")
        if self.buckets < 1:
            raise ConfigError("buckets must be >= 1")
        if self.lr0 <= 0 or self.subsample_t <= 0:
            raise ConfigError("lr0 and subsample_t must be > 0")
        if self.window < 1 or self.negatives < 0 or self.epochs < 0 or self.min_count < 1:
            raise ConfigError("window >= 1, negatives >= 0, epochs >= 0, min_count >= 1")
        return self


def subword_ids(word: str, cfg: EmbeddingConfig) -> list[int]:
    """Bucket indices of the character n-grams of ``<word>``.

    The token is wrapped in angle brackets, every n-gram with length in
    [ngram_min, ngram_max] is hashed (FNV-1a/64 mod buckets) in
    length-major scan order; duplicates are kept. Collisions are allowed
    by design.
    """
    if not word:
        raise ValueError("word must be non-empty")
    wrapped = f"<{word}>"
    ids: list[int] = []
    for n in range(cfg.ngram_min, cfg.ngram_max + 1):
        for i in range(len(wrapped) - n + 1):
            gram = wrapped[i : i + n]
            ids.append(fnv1a_64(gram.encode("utf-8")) % cfg.buckets)
    return ids


@dataclass(frozen=True)
class PhraseVector:
    """L2-normalized phrase embedding; degenerate when nothing was representable."""

    values: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        self.values.setflags(write=False)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # clipped to keep exp() in range; saturation is exact 0/1 past ~|37|
    z = np.clip(x, -60.0, 60.0)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def sgns_objective(v: np.ndarray, u_rows: np.ndarray) -> float:
    """Skip-gram negative-sampling objective for one draw.

    ``u_rows[0]`` is the positive context output vector, the remaining
    rows are negatives: log sigma(u_0 . v) + sum_j log sigma(-u_j . v).
    """
    scores = u_rows @ v
    signs = np.full(len(u_rows), -1.0)
    signs[0] = 1.0
    # log sigma(s) = -log(1 + exp(-s)), computed stably
    return float(-np.logaddexp(0.0, -signs * scores).sum())


def sgns_gradients(v: np.ndarray, u_rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradients of :func:`sgns_objective` wrt v and each u row."""
    probs = _sigmoid(u_rows @ v)
    coef = -probs
    coef[0] += 1.0  # label - prob with labels [1, 0, ..., 0]
    grad_v = coef @ u_rows
    grad_u = np.outer(coef, v)
    return grad_v, grad_u


class EmbeddingModel:
    """Trained vectors: one row per vocab word, then one per hash bucket.

    ``input_vectors`` is (vocab + buckets) x dim; ``output_vectors`` is
    vocab x dim and only used during training. Treat instances as
    immutable once training has finished.
    """

    def __init__(
        self,
        config: EmbeddingConfig,
        words: list[str],
        counts: list[int],
        input_vectors: np.ndarray,
        output_vectors: np.ndarray,
    ):
        self.config = config
        self.words = words
        self.counts = counts
        self.word_index = {w: i for i, w in enumerate(words)}
        self.input_vectors = input_vectors
        self.output_vectors = output_vectors
        self._row_cache: dict[str, tuple[np.ndarray, np.ndarray]] = {}

    @property
    def vocab_size(self) -> int:
        return len(self.words)

    @property
    def dim(self) -> int:
        return self.config.dim

    def vocab(self) -> dict[str, int]:
        """word -> corpus frequency."""
        return dict(zip(self.words, self.counts))

    # -- composition -----------------------------------------------------

    def _token_rows(self, token: str) -> tuple[np.ndarray, np.ndarray]:
        """Unique input-matrix rows for a token and their mean weights.

        The composed token vector is the mean over the word row (when in
        vocab) and the subword bucket rows, duplicates counted; weights
        carry the multiplicity so unique-row fancy indexing stays exact.
        """
        cached = self._row_cache.get(token)
        if cached is not None:
            return cached
        rows: list[int] = []
        idx = self.word_index.get(token)
        if idx is not None:
            rows.append(idx)
        rows.extend(self.vocab_size + b for b in subword_ids(token, self.config))
        if not rows:
            result = (np.empty(0, dtype=np.int64), np.empty(0))
        else:
            multiset = Counter(rows)
            uniq = np.fromiter(multiset.keys(), dtype=np.int64)
            weights = np.fromiter(multiset.values(), dtype=np.float64) / len(rows)
            result = (uniq, weights)
        self._row_cache[token] = result
        return result

    def token_vector(self, token: str) -> np.ndarray | None:
        """Unnormalized composed vector; None when nothing is representable."""
        rows, weights = self._token_rows(token)
        if rows.size == 0:
            return None
        return weights @ self.input_vectors[rows]

    def phrase_vector(self, phrase: str) -> PhraseVector:
        """Mean of token vectors, L2-normalized.

        Tokens with no representable content are skipped; a phrase where
        every token is skipped (or the mean is exactly zero) is returned
        with the degenerate flag set.
        """
        vectors = [v for v in (self.token_vector(t) for t in tokenize(phrase)) if v is not None]
        if not vectors:
            return PhraseVector(np.zeros(self.dim), degenerate=True)
        mean = np.mean(vectors, axis=0)
        norm = float(np.linalg.norm(mean))
        if norm == 0.0 or not np.isfinite(norm):
            return PhraseVector(np.zeros(self.dim), degenerate=True)
        return PhraseVector(mean / norm)

    # -- persistence -----------------------------------------------------

    HEADER_TAG = "taxoforge-emb v1"

    def save(self, path: str | Path) -> None:
        from taxoforge.workspace import atomic_write_text

        atomic_write_text(Path(path), self.to_text())

    def to_text(self) -> str:
        cfg = self.config
        lines = [
            f"{self.HEADER_TAG} dim={cfg.dim} vocab={self.vocab_size} "
            f"buckets={cfg.buckets} ngmin={cfg.ngram_min} ngmax={cfg.ngram_max} seed={cfg.seed}"
        ]
        for word, count in zip(self.words, self.counts):
            lines.append(f"{word} {count}")
        for row in self.input_vectors:
            lines.append(" ".join(f"{x:.9g}" for x in row))
        for row in self.output_vectors:
            lines.append(" ".join(f"{x:.9g}" for x in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingModel":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    @classmethod
    def from_text(cls, text: str) -> "EmbeddingModel":
        lines = text.splitlines()
        if not lines or not lines[0].startswith(cls.HEADER_TAG + " "):
            raise DataFormatError("not a taxoforge-emb v1 model file", line=1)
        fields = {}
        for part in lines[0][len(cls.HEADER_TAG) + 1 :].split():
            key, _, value = part.partition("=")
            try:
                fields[key] = int(value)
            except ValueError:
                raise DataFormatError(f"bad header field {part!r}", line=1) from None
        expected = {"dim", "vocab", "buckets", "ngmin", "ngmax", "seed"}
        if set(fields) != expected:
            raise DataFormatError(f"header must carry exactly {sorted(expected)}", line=1)
        config = EmbeddingConfig(
            dim=fields["dim"],
            buckets=fields["buckets"],
            ngram_min=fields["ngmin"],
            ngram_max=fields["ngmax"],
            seed=fields["seed"],
        ).validate()
        vocab_size = fields["vocab"]
        n_input = vocab_size + config.buckets
        if len(lines) != 1 + vocab_size + n_input + vocab_size:
            raise DataFormatError(
                f"expected {1 + vocab_size + n_input + vocab_size} lines, got {len(lines)}"
            )
        words, counts = [], []
        for i in range(vocab_size):
            parts = lines[1 + i].rsplit(" ", 1)
            if len(parts) != 2:
                raise DataFormatError("bad vocab line", line=2 + i)
            words.append(parts[0])
            counts.append(int(parts[1]))
        offset = 1 + vocab_size

        def parse_block(start: int, rows: int) -> np.ndarray:
            block = np.empty((rows, config.dim))
            for i in range(rows):
                parts = lines[start + i].split(" ")
                if len(parts) != config.dim:
                    raise DataFormatError("bad vector row", line=start + i + 1)
                try:
                    block[i] = [float(p) for p in parts]
                except ValueError:
                    raise DataFormatError("bad vector row", line=start + i + 1) from None
            return block

        input_vectors = parse_block(offset, n_input)
        output_vectors = parse_block(offset + n_input, vocab_size)
        return cls(config, words, counts, input_vectors, output_vectors)


# -- training -------------------------------------------------------------


def _build_vocab(sentences: list[list[str]], cfg: EmbeddingConfig) -> tuple[list[str], list[int]]:
    counter: Counter[str] = Counter()
    for tokens in sentences:
        counter.update(tokens)
    if not counter:
        raise EmptyCorpusError("corpus has no tokens")
    kept = sorted(
        (w for w, c in counter.items() if c >= cfg.min_count),
        key=lambda w: (-counter[w], w),
    )
    if not kept:
        raise EmptyCorpusError(f"no word survives min_count={cfg.min_count}")
    return kept, [counter[w] for w in kept]


def train_lines(lines: Iterable[str], cfg: EmbeddingConfig) -> EmbeddingModel:
    """Skip-gram negative-sampling training over in-memory lines.

    Deterministic for a fixed seed: vocabulary order, subsampling draws,
    per-position window sizes and negative draws all derive from one
    seeded generator consumed in a fixed order.
    """
    cfg.validate()
    sentences = [tokens for tokens in (tokenize(line) for line in lines) if tokens]
    words, counts = _build_vocab(sentences, cfg)
    word_index = {w: i for i, w in enumerate(words)}
    encoded = [
        ids for ids in ([word_index[t] for t in s if t in word_index] for s in sentences) if ids
    ]

    rng = np.random.default_rng(cfg.seed)
    vocab_size = len(words)
    input_vectors = (rng.random((vocab_size + cfg.buckets, cfg.dim)) - 0.5) / cfg.dim
    output_vectors = np.zeros((vocab_size, cfg.dim))
    model = EmbeddingModel(cfg, words, counts, input_vectors, output_vectors)

    counts_arr = np.asarray(counts, dtype=np.float64)
    freqs = counts_arr / counts_arr.sum()
    keep_prob = np.sqrt(cfg.subsample_t / freqs)  # may exceed 1: always kept
    noise = counts_arr**0.75
    noise_cdf = np.cumsum(noise / noise.sum())

    word_rows = [model._token_rows(w) for w in words]
    total = cfg.epochs * sum(len(s) for s in encoded)
    processed = 0

    for _ in range(cfg.epochs):
        for sentence in encoded:
            kept = [
                w
                for w in sentence
                if keep_prob[w] >= 1.0 or rng.random() < keep_prob[w]
            ]
            n = len(kept)
            for pos in range(n):
                w = kept[pos]
                lr = cfg.lr0 * max(0.0, 1.0 - processed / total)
                processed += 1
                b = int(rng.integers(1, cfg.window + 1))
                for cpos in range(max(0, pos - b), min(n, pos + b + 1)):
                    if cpos == pos:
                        continue
                    c = kept[cpos]
                    if cfg.negatives:
                        draws = np.searchsorted(noise_cdf, rng.random(cfg.negatives))
                        # a draw that hits the positive word is dropped, not
                        # redrawn, or it would cancel the positive update
                        out_idx = np.concatenate(([c], draws[draws != c]))
                    else:
                        out_idx = np.array([c], dtype=np.int64)
                    rows, weights = word_rows[w]
                    v = weights @ input_vectors[rows]
                    u_rows = output_vectors[out_idx]
                    grad_v, grad_u = sgns_gradients(v, u_rows)
                    for j in range(out_idx.size):  # negatives may repeat
                        output_vectors[out_idx[j]] += lr * grad_u[j]
                    input_vectors[rows] += (lr * weights)[:, None] * grad_v
    return model


def train(corpus_path: str | Path, cfg: EmbeddingConfig) -> EmbeddingModel:
    """Train on a UTF-8 corpus file, one listing description per line."""
    text = Path(corpus_path).read_text(encoding="utf-8")
    if not text.strip():
        raise EmptyCorpusError(f"corpus file {corpus_path} is empty")
    return train_lines(text.splitlines(), cfg)


# -- similarity -----------------------------------------------------------


def cosine(a: PhraseVector, b: PhraseVector) -> float:
    """Dot product of the normalized vectors, clamped to [-1, 1]."""
    if a.degenerate or b.degenerate:
        raise DegeneratePhraseError("cosine of a degenerate phrase vector")
    return float(np.clip(np.dot(a.values, b.values), -1.0, 1.0))


class NNIndex:
    """Exact cosine nearest-neighbor index over labeled phrase vectors.

    Labels are held in ascending order so argmax ties resolve to the
    lexicographically smallest label.
    """

    def __init__(self, entries: Iterable[tuple[str, PhraseVector]]):
        pairs = sorted(
            ((label, vec) for label, vec in entries if not vec.degenerate),
            key=lambda p: p[0],
        )
        self.labels = [label for label, _ in pairs]
        self._matrix = (
            np.stack([vec.values for _, vec in pairs]) if pairs else np.empty((0, 0))
        )

    def __len__(self) -> int:
        return len(self.labels)

    @classmethod
    def from_labels(cls, model: EmbeddingModel, labels: Iterable[str]) -> "NNIndex":
        return cls((label, model.phrase_vector(label)) for label in labels)

    def query(self, vector: PhraseVector) -> tuple[str, float]:
        if not self.labels:
            raise EmptyIndexError("nearest-neighbor index is empty")
        if vector.degenerate:
            raise DegeneratePhraseError("query vector is degenerate")
        sims = self._matrix @ vector.values
        best = int(np.argmax(sims))  # first maximum = smallest label
        return self.labels[best], float(np.clip(sims[best], -1.0, 1.0))


def nearest_neighbor(
    index: Sequence[tuple[str, PhraseVector]], query: PhraseVector
) -> tuple[str, float]:
    """Exhaustive argmax of cosine; ties break to the smallest label."""
    return NNIndex(index).query(query)


# -- sklearn-style front door ----------------------------------------------


class SkipGramEmbedding(BaseEstimator, TransformerMixin):
    """Estimator wrapper around the trainer.

    ``fit`` accepts an iterable of text lines (or a corpus file path) and
    trains the subword skip-gram model; ``transform`` maps phrases to
    L2-normalized vectors (zero rows for degenerate phrases). The fitted
    model is exposed as ``model_``.
    """

    def __init__(
        self,
        dim: int = 100,
        window: int = 5,
        negatives: int = 5,
        epochs: int = 5,
        lr0: float = 0.05,
        min_count: int = 2,
        ngram_min: int = 3,
        ngram_max: int = 6,
        buckets: int = 262144,
        subsample_t: float = 1e-4,
        seed: int = 0,
    ):
        self.dim = dim
        self.window = window
        self.negatives = negatives
        self.epochs = epochs
        self.lr0 = lr0
        self.min_count = min_count
        self.ngram_min = ngram_min
        self.ngram_max = ngram_max
        self.buckets = buckets
        self.subsample_t = subsample_t
        self.seed = seed

    def _config(self) -> EmbeddingConfig:
        return EmbeddingConfig(**self.get_params()).validate()

    def fit(self, X: Iterable[str] | str | Path, y=None) -> "SkipGramEmbedding":
        if isinstance(X, (str, Path)):
            self.model_ = train(X, self._config())
        else:
            self.model_ = train_lines(list(X), self._config())
        return self

    def transform(self, X: Iterable[str]) -> np.ndarray:
        if not hasattr(self, "model_"):
            raise NotFittedError("SkipGramEmbedding is not fitted yet")
        return np.stack([self.model_.phrase_vector(p).values for p in X])
