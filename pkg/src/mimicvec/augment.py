"""Word-level augmentation for building positive training pairs.

One of six strategies is sampled per call: swap two adjacent
characters, drop a character, insert a keyboard-adjacent character,
replace a character by a keyboard neighbour, replace the whole word by
a near-synonym, or leave the word alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib.resources import files
from typing import NamedTuple

import numpy as np

from .embeddings import EmbeddingTable, _normalized
from .errors import ConfigError, InputError, ParseError

STRATEGIES = ("swap", "drop", "insert", "keyboard", "synonym", "none")
DEFAULT_PROBABILITIES = (0.07, 0.07, 0.07, 0.07, 0.36, 0.36)


@dataclass(frozen=True)
class AugmentPolicy:
    """Per-strategy sampling probabilities, in STRATEGIES order."""

    probabilities: tuple = DEFAULT_PROBABILITIES

    def __post_init__(self):
        p = self.probabilities
        if len(p) != len(STRATEGIES) or any(x < 0 for x in p):
            raise ConfigError(f"need {len(STRATEGIES)} non-negative probabilities")
        if abs(sum(p) - 1.0) > 1e-9:
            raise ConfigError(f"probabilities sum to {sum(p)}, not 1")

    @classmethod
    def only(cls, strategy):
        """Policy that always applies one strategy (handy for ablations)."""
        return cls(tuple(1.0 if s == strategy else 0.0 for s in STRATEGIES))


class KeyboardMap:
    """Physical QWERTY adjacency; symmetric, every a-z key has neighbours."""

    def __init__(self, neighbors):
        self.neighbors = {c: list(ns) for c, ns in neighbors.items()}
        for c, ns in self.neighbors.items():
            for n in ns:
                if c not in self.neighbors.get(n, ()):
                    raise ParseError(f"asymmetric adjacency {c!r} -> {n!r}")
        for c in "abcdefghijklmnopqrstuvwxyz":
            if not self.neighbors.get(c):
                raise ParseError(f"key {c!r} has no neighbours")

    @classmethod
    def load(cls, path=None):
        if path is None:
            text = files("mimicvec.data").joinpath("qwerty_neighbors.txt").read_text("utf-8")
        else:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        neighbors = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                key, rest = line.split(":", 1)
            except ValueError:
                raise ParseError(f"malformed line {line!r}", line=lineno) from None
            neighbors[key.strip()] = rest.split()
        return cls(neighbors)

    def get(self, ch):
        return self.neighbors.get(ch, [])


class SynonymIndex:
    """Frozen word -> k nearest in-table words by cosine similarity."""

    def __init__(self, entries):
        self.entries = dict(entries)

    def get(self, word):
        return self.entries.get(word, [])

    def __contains__(self, word):
        return word in self.entries


def build_synonym_index(table: EmbeddingTable, k: int = 5, block: int = 1024) -> SynonymIndex:
    """Exact full-scan k-nearest-neighbour index over the whole table."""
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if k >= len(table):
        raise ConfigError(f"k={k} must be smaller than the table ({len(table)} words)")
    normed = _normalized(table.vectors)
    entries = {}
    for start in range(0, len(table), block):
        sims = normed[start : start + block] @ normed.T
        for r in range(sims.shape[0]):
            row = sims[r]
            cand = np.argpartition(-row, k + 1)[: k + 8]
            cand = cand[np.argsort(-row[cand], kind="stable")]
            i = start + r
            picked = [int(j) for j in cand if j != i][:k]
            entries[table.words[i]] = [table.words[j] for j in picked]
    return SynonymIndex(entries)


class Augmented(NamedTuple):
    word: str
    strategy: str  # the strategy actually applied (may fall back to "none")


def augment(word: str, policy: AugmentPolicy, synonyms: SynonymIndex,
            rng: np.random.Generator, keyboard: KeyboardMap) -> Augmented:
    """Apply exactly one sampled strategy to ``word``.

    Strategies that cannot apply (single-character words for swap/drop,
    characters without keyboard neighbours, words without synonyms)
    fall back to "none", reported in the returned strategy tag.
    """
    if len(word) < 1:
        raise InputError("cannot augment an empty word")
    strategy = STRATEGIES[rng.choice(len(STRATEGIES), p=policy.probabilities)]

    if strategy == "swap":
        if len(word) < 2:
            return Augmented(word, "none")
        pos = int(rng.integers(0, len(word) - 1))
        out = word[:pos] + word[pos + 1] + word[pos] + word[pos + 2 :]
        return Augmented(out, strategy)

    if strategy == "drop":
        if len(word) < 2:
            return Augmented(word, "none")
        pos = int(rng.integers(0, len(word)))
        return Augmented(word[:pos] + word[pos + 1 :], strategy)

    if strategy == "insert":
        pos = int(rng.integers(0, len(word)))
        options = keyboard.get(word[pos])
        if not options:
            return Augmented(word, "none")
        ch = options[rng.integers(0, len(options))]
        return Augmented(word[: pos + 1] + ch + word[pos + 1 :], strategy)

    if strategy == "keyboard":
        pos = int(rng.integers(0, len(word)))
        options = keyboard.get(word[pos])
        if not options:
            return Augmented(word, "none")
        ch = options[rng.integers(0, len(options))]
        return Augmented(word[:pos] + ch + word[pos + 1 :], strategy)

    if strategy == "synonym":
        options = synonyms.get(word) if synonyms is not None else []
        if not options:
            return Augmented(word, "none")
        return Augmented(options[rng.integers(0, len(options))], strategy)

    return Augmented(word, "none")
