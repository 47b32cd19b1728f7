"""Static word-embedding tables: word2vec text I/O, exact nearest
neighbours, and the plug-in combination operators for working alongside
an existing model's own vectors."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import InputError, ParseError

logger = logging.getLogger(__name__)


class EmbeddingTable:
    """An ordered word -> vector map with a single fixed dimension."""

    def __init__(self, words, vectors):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[1] < 1:
            raise InputError(f"vectors must be 2-D, got shape {vectors.shape}")
        if len(words) != vectors.shape[0]:
            raise InputError(
                f"{len(words)} words but {vectors.shape[0]} vectors"
            )
        self.words = list(words)
        self.vectors = vectors
        self.word_to_idx = {}
        for i, w in enumerate(self.words):
            if w in self.word_to_idx:
                raise InputError(f"duplicate word {w!r}")
            self.word_to_idx[w] = i

    @property
    def dim(self):
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self.word_to_idx

    def __getitem__(self, word):
        return self.vectors[self.word_to_idx[word]]

    def subset(self, words):
        idx = [self.word_to_idx[w] for w in words]
        return EmbeddingTable(list(words), self.vectors[idx].copy())


def load_word2vec_text(path) -> EmbeddingTable:
    """Read the plain-text word2vec format: a "count dim" header line,
    then one "word v1 ... v_dim" line per word.

    Words are lower-cased; when two different surface forms collide the
    later one wins (logged). An exact duplicate line word is an error.
    """
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 2:
            raise ParseError(f"malformed header {header!r}", line=1)
        try:
            count, dim = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"malformed header {header!r}", line=1) from None
        words = []
        index = {}
        rows = []
        seen_raw = set()
        n_body = 0
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            n_body += 1
            fields = line.rstrip("\n").split(" ")
            raw = fields[0]
            if len(fields) != dim + 1:
                raise ParseError(
                    f"expected {dim} values for {raw!r}, got {len(fields) - 1}",
                    line=lineno,
                )
            if raw in seen_raw:
                raise ParseError(f"duplicate word {raw!r}", line=lineno)
            seen_raw.add(raw)
            try:
                vec = np.asarray([float(v) for v in fields[1:]])
            except ValueError:
                raise ParseError(f"non-numeric value for {raw!r}", line=lineno) from None
            word = raw.lower()
            if word in index:
                logger.warning(
                    "case collision on %r at line %d: keeping the later vector",
                    word, lineno,
                )
                rows[index[word]] = vec
            else:
                index[word] = len(words)
                words.append(word)
                rows.append(vec)
    if n_body != count:
        raise ParseError(f"header says {count} words, file has {n_body}")
    return EmbeddingTable(words, np.vstack(rows))


def save_word2vec_text(table: EmbeddingTable, path) -> None:
    """Write the canonical text form: 6 significant digits, space separated."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(table)} {table.dim}\n")
        for word, vec in zip(table.words, table.vectors):
            fh.write(word + " " + " ".join("%.6g" % v for v in vec) + "\n")


def _normalized(matrix, eps=1e-12):
    norms = np.sqrt((matrix**2).sum(axis=1, keepdims=True))
    return matrix / np.maximum(norms, eps)


def nearest_neighbors(table: EmbeddingTable, query_vector, k: int):
    """The k most cosine-similar table words, descending, ties broken by
    table order. An exact full scan."""
    if k > len(table):
        raise InputError(f"k={k} exceeds table size {len(table)}")
    q = np.asarray(query_vector, dtype=np.float64)
    qn = q / max(float(np.sqrt((q**2).sum())), 1e-12)
    sims = _normalized(table.vectors) @ qn
    order = np.argsort(-sims, kind="stable")[:k]
    return [(table.words[i], float(sims[i])) for i in order]


@dataclass
class CombineParams:
    """Gate weights for the learned convex combination of two vectors."""

    gate: np.ndarray

    def __post_init__(self):
        self.gate = np.asarray(self.gate, dtype=np.float64)
        if self.gate.ndim != 1:
            raise InputError(f"gate must be a vector, got shape {self.gate.shape}")


def linear_combine(e_sub, e_word, params: CombineParams):
    """Gated mix (1 - a) * e_sub + a * e_word with a = sigmoid(gate . e_sub)."""
    e_sub = np.asarray(e_sub, dtype=np.float64)
    e_word = np.asarray(e_word, dtype=np.float64)
    if e_sub.shape != e_word.shape or e_sub.shape != params.gate.shape:
        raise InputError(
            f"dimension mismatch: {e_sub.shape}, {e_word.shape}, {params.gate.shape}"
        )
    alpha = 1.0 / (1.0 + np.exp(-float(params.gate @ e_sub)))
    return (1.0 - alpha) * e_sub + alpha * e_word


def add_combine(e_sub, e_word):
    e_sub = np.asarray(e_sub, dtype=np.float64)
    e_word = np.asarray(e_word, dtype=np.float64)
    if e_sub.shape != e_word.shape:
        raise InputError(f"dimension mismatch: {e_sub.shape} vs {e_word.shape}")
    return e_sub + e_word


def replace_oov(table: EmbeddingTable, word: str, model) -> np.ndarray:
    """Stored vector for in-table words, otherwise the encoder's imputation.

    ``model`` is anything with an ``encode(word) -> vector`` method.
    """
    word = word.lower()
    if word in table:
        return table[word]
    return model.encode(word)
