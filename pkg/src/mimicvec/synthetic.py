"""Deterministic surrogate embedding tables.

Real pre-trained tables (FastText and friends) are hundreds of
megabytes and cannot be fetched in offline environments, so tests and
demos use a surrogate with the one property that matters here: words
that share character n-grams get correlated vectors, the way
subword-composed embeddings do. Each n-gram hashes to a fixed random
basis vector and a word's vector is the normalized sum over its n-grams
plus a word-specific component.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .embeddings import EmbeddingTable

_BANK_BITS = 16


def _feature_index(fragment: str) -> int:
    digest = hashlib.blake2b(fragment.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") % (1 << _BANK_BITS)


def _word_features(word: str, ngram_range=(3, 5)):
    padded = f"<{word}>"
    feats = [padded]  # whole-word feature gives each word its own component
    lo, hi = ngram_range
    for n in range(lo, hi + 1):
        for i in range(len(padded) - n + 1):
            feats.append(padded[i : i + n])
    return feats


def char_ngram_table(words, dim=300, seed=0, ngram_range=(3, 5), scale=3.0):
    """Build a surrogate table over ``words``; fully determined by ``seed``."""
    rng = np.random.default_rng(seed)
    bank = rng.standard_normal((1 << _BANK_BITS, dim))
    vectors = np.empty((len(words), dim))
    for row, word in enumerate(words):
        idx = [_feature_index(f) for f in _word_features(word, ngram_range)]
        v = bank[idx].sum(axis=0)
        vectors[row] = v / max(float(np.sqrt((v**2).sum())), 1e-12)
    return EmbeddingTable(list(words), vectors * scale)


def bundled_wordlist(limit=None):
    """Words shipped with the package (frequency-ranked English)."""
    from importlib.resources import files

    text = files("mimicvec.data").joinpath("english_words_50k.txt").read_text("utf-8")
    words = text.split()
    return words[:limit] if limit else words
