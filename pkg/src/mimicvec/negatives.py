"""Hard-negative mining: surface-similar but non-synonymous words.

The index stores, per word, up to ``top_k`` candidates within edit
distance ``max_distance`` (beyond 3 edits the surface-form confusion
this targets is gone), ordered by (distance, word id). The all-pairs
scan is O(|V|^2) and runs as a JIT-compiled parallel kernel; a pure
Python path covers environments without numba.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .errors import InputError, ParseError

INDEX_FORMAT = "mimicvec-hardneg"
INDEX_VERSION = 1


def levenshtein(a: str, b: str) -> int:
    """Minimal insert/delete/substitute count between two strings."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _encode_words(words):
    n = len(words)
    max_len = max(len(w) for w in words)
    codes = np.zeros((n, max_len), dtype=np.int32)
    lengths = np.empty(n, dtype=np.int32)
    for i, w in enumerate(words):
        lengths[i] = len(w)
        for j, ch in enumerate(w):
            codes[i, j] = ord(ch)
    return codes, lengths


def _make_scan_kernel():
    from numba import njit, prange

    @njit(cache=True, parallel=True)
    def scan(codes, lengths, max_d, cap):
        n = codes.shape[0]
        out = np.full((n, max_d, cap), -1, dtype=np.int32)
        counts = np.zeros((n, max_d), dtype=np.int32)
        for i in prange(n):
            la = lengths[i]
            prev = np.empty(la + 1, dtype=np.int32)
            cur = np.empty(la + 1, dtype=np.int32)
            for j in range(n):
                if j == i:
                    continue
                lb = lengths[j]
                diff = la - lb
                if diff > max_d or -diff > max_d:
                    continue
                for t in range(la + 1):
                    prev[t] = t
                abandoned = False
                for q in range(1, lb + 1):
                    cur[0] = q
                    best = q
                    for t in range(1, la + 1):
                        c = 0 if codes[i, t - 1] == codes[j, q - 1] else 1
                        v = prev[t] + 1
                        if cur[t - 1] + 1 < v:
                            v = cur[t - 1] + 1
                        if prev[t - 1] + c < v:
                            v = prev[t - 1] + c
                        cur[t] = v
                        if v < best:
                            best = v
                    if best > max_d:
                        abandoned = True
                        break
                    tmp = prev
                    prev = cur
                    cur = tmp
                if abandoned:
                    continue
                d = prev[la]
                if 1 <= d <= max_d:
                    bucket = d - 1
                    c = counts[i, bucket]
                    if c < cap:
                        out[i, bucket, c] = j
                        counts[i, bucket] = c + 1
        return out, counts

    return scan


_scan_kernel = None


def _all_pairs_within(words, max_d, cap):
    """Per word: candidate ids bucketed by distance 1..max_d, ids ascending."""
    global _scan_kernel
    codes, lengths = _encode_words(words)
    try:
        if _scan_kernel is None:
            _scan_kernel = _make_scan_kernel()
        return _scan_kernel(codes, lengths, max_d, cap)
    except ImportError:
        n = len(words)
        out = np.full((n, max_d, cap), -1, dtype=np.int32)
        counts = np.zeros((n, max_d), dtype=np.int32)
        for i in range(n):
            for j in range(n):
                if j == i or abs(len(words[i]) - len(words[j])) > max_d:
                    continue
                d = levenshtein(words[i], words[j])
                if 1 <= d <= max_d and counts[i, d - 1] < cap:
                    out[i, d - 1, counts[i, d - 1]] = j
                    counts[i, d - 1] += 1
        return out, counts


class HardNegativeIndex:
    """word -> [(candidate, distance), ...] sorted by (distance, id)."""

    def __init__(self, entries, vocab_hash=""):
        self.entries = dict(entries)
        self.vocab_hash = vocab_hash

    def get(self, word):
        return self.entries.get(word)

    def __contains__(self, word):
        return word in self.entries

    def __len__(self):
        return len(self.entries)


def vocabulary_hash(words, synonyms=None, top_k=100, max_distance=3) -> str:
    h = hashlib.sha256()
    h.update(f"{top_k}|{max_distance}\n".encode())
    for w in words:
        h.update(w.encode("utf-8"))
        h.update(b"\x00")
        if synonyms is not None:
            for s in synonyms.get(w):
                h.update(s.encode("utf-8"))
                h.update(b"\x01")
    return h.hexdigest()


def build_hard_negative_index(vocab_words, synonyms=None, top_k=100,
                              max_distance=3) -> HardNegativeIndex:
    words = list(vocab_words)
    if len(set(words)) != len(words):
        raise InputError("word list contains duplicates")
    # headroom so that synonym exclusion cannot expose missing candidates
    cap = top_k + 8
    out, counts = _all_pairs_within(words, max_distance, cap)
    entries = {}
    for i, word in enumerate(words):
        excluded = set(synonyms.get(word)) if synonyms is not None else ()
        cands = []
        for bucket in range(max_distance):
            for c in range(counts[i, bucket]):
                j = int(out[i, bucket, c])
                if words[j] not in excluded:
                    cands.append((words[j], bucket + 1))
            if len(cands) >= top_k:
                break
        entries[word] = cands[:top_k]
    return HardNegativeIndex(
        entries, vocabulary_hash(words, synonyms, top_k, max_distance)
    )


def save_index(index: HardNegativeIndex, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{INDEX_FORMAT} {INDEX_VERSION} {index.vocab_hash}\n")
        for word, cands in index.entries.items():
            cells = " ".join(f"{w}:{d}" for w, d in cands)
            fh.write(f"{word}\t{cells}\n")


def load_index(path) -> HardNegativeIndex:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 3 or header[0] != INDEX_FORMAT:
            raise ParseError(f"not a {INDEX_FORMAT} file", line=1)
        if int(header[1]) != INDEX_VERSION:
            raise ParseError(f"unsupported index version {header[1]}", line=1)
        entries = {}
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            word, _, rest = line.partition("\t")
            cands = []
            for cell in rest.split():
                cand, _, d = cell.rpartition(":")
                if not cand:
                    raise ParseError(f"malformed cell {cell!r}", line=lineno)
                cands.append((cand, int(d)))
            entries[word] = cands
    return HardNegativeIndex(entries, header[2])


def load_or_build(path, vocab_words, synonyms=None, top_k=100, max_distance=3):
    """Reuse a cached index when its vocabulary hash still matches."""
    expected = vocabulary_hash(vocab_words, synonyms, top_k, max_distance)
    try:
        index = load_index(path)
        if index.vocab_hash == expected:
            return index
    except (OSError, ParseError, ValueError):
        pass
    index = build_hard_negative_index(vocab_words, synonyms, top_k, max_distance)
    save_index(index, path)
    return index


def inject_hard_negatives(batch, index: HardNegativeIndex, table, count=3,
                          rng=None) -> "TrainBatch":
    """Append per-anchor sampled hard negatives (and their target
    vectors) to the batch's negative pool. Anchors absent from the index
    are skipped and counted on ``batch.missing_anchor_count``."""
    if not batch.anchors:
        raise InputError("batch has no anchors")
    if count == 0:
        return batch
    rng = rng if rng is not None else np.random.default_rng()
    for anchor in batch.anchors:
        cands = index.get(anchor)
        if cands is None:
            batch.missing_anchor_count += 1
            continue
        usable = [w for w, _ in cands if w in table]
        if not usable:
            continue
        take = min(count, len(usable))
        picks = rng.choice(len(usable), size=take, replace=False)
        for p in picks:
            word = usable[int(p)]
            batch.negative_words.append(word)
            batch.negative_vectors.append(table[word])
    return batch
