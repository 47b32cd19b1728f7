"""Subword vocabulary, WordPiece segmentation and the mixed input layout.

A word is presented to the encoder as one token sequence combining its
character spelling and its subword segmentation:

    [CLS] c1 c2 ... [SUB] s1 s2 ... [SEP] [PAD]...

Characters and subwords share a single id space (single-character
entries double as the character inventory), so one embedding table
serves both.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InputError, ParseError
from .stem import porter_stem

SPECIAL_TOKENS = ("[CLS]", "[SUB]", "[SEP]", "[PAD]", "[UNK]")
CHAR_INVENTORY = "abcdefghijklmnopqrstuvwxyz0123456789-'"
CONTINUATION = "##"

CLS, SUB, SEP, PAD, UNK = range(5)


class Vocabulary:
    """Immutable token inventory with dense ids.

    Ids equal the token's position in the backing file, with the five
    special tokens pinned to ids 0..4. Single-character entries drawn
    from the fixed character inventory double as character tokens.
    """

    def __init__(self, tokens):
        tokens = list(tokens)
        if tuple(tokens[:5]) != SPECIAL_TOKENS:
            raise ParseError(
                f"first five tokens must be {' '.join(SPECIAL_TOKENS)}, "
                f"got {tokens[:5]}"
            )
        self.tokens = tokens
        self.token_to_id = {}
        for i, tok in enumerate(tokens):
            if not tok:
                raise ParseError("empty token", line=i + 1)
            if tok in self.token_to_id:
                raise ParseError(f"duplicate token {tok!r}", line=i + 1)
            self.token_to_id[tok] = i
        self.char_to_id = {
            ch: self.token_to_id[ch]
            for ch in CHAR_INVENTORY
            if ch in self.token_to_id
        }

    def __len__(self):
        return len(self.tokens)

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.tokens == other.tokens

    cls_id = property(lambda self: CLS)
    sub_id = property(lambda self: SUB)
    sep_id = property(lambda self: SEP)
    pad_id = property(lambda self: PAD)
    unk_id = property(lambda self: UNK)

    def char_id(self, ch: str) -> int:
        """Id of a character token; anything outside the inventory is UNK."""
        return self.char_to_id.get(ch, UNK)

    def __contains__(self, token):
        return token in self.token_to_id


def load_vocab(path) -> Vocabulary:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().split("\n")
    except OSError as e:
        raise ParseError(f"cannot read vocabulary file {path}: {e}") from e
    if lines and lines[-1] == "":
        lines.pop()
    return Vocabulary(lines)


def save_vocab(vocab: Vocabulary, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(vocab.tokens) + "\n")


def normalize_word(word: str) -> str:
    word = word.strip().lower()
    if not word:
        raise InputError("word is empty after lower-casing")
    return word


def wordpiece_tokenize(word: str, vocab: Vocabulary) -> list[str]:
    """Greedy longest-match-first subword segmentation.

    Every character of the word is covered; spans that cannot be matched
    are emitted as a single [UNK] token each.
    """
    word = normalize_word(word)
    pieces = []
    start = 0
    n = len(word)
    while start < n:
        matched = None
        for end in range(n, start, -1):
            cand = word[start:end]
            if start > 0:
                cand = CONTINUATION + cand
            if cand in vocab.token_to_id:
                matched = cand
                break
        if matched is None:
            # unknown span: collapse consecutive unmatched characters
            if not pieces or pieces[-1] != SPECIAL_TOKENS[UNK]:
                pieces.append(SPECIAL_TOKENS[UNK])
            start += 1
        else:
            pieces.append(matched)
            start += len(matched) - (len(CONTINUATION) if start > 0 else 0)
    return pieces


@dataclass
class MixedInputSequence:
    """Padded token-id layout [CLS] chars [SUB] subwords [SEP] [PAD]*."""

    token_ids: np.ndarray  # (max_len,) int64
    length: int  # number of non-PAD positions
    pad_mask: np.ndarray  # (max_len,) bool, True at PAD positions

    def __post_init__(self):
        assert self.token_ids.shape == self.pad_mask.shape


def mixed_input(word: str, vocab: Vocabulary, max_len: int = 40) -> MixedInputSequence:
    """Build the padded mixed char+subword id sequence for one word.

    When the word is too long, character tokens are truncated first;
    the [SUB] and [SEP] markers and at least one character and one
    subword always survive.
    """
    if max_len < 5:
        raise ConfigError(
            f"max_len must be at least 5 to fit [CLS] c [SUB] s [SEP], got {max_len}"
        )
    word = normalize_word(word)
    char_ids = [vocab.char_id(ch) for ch in word]
    sub_ids = [
        vocab.token_to_id.get(p, UNK) for p in wordpiece_tokenize(word, vocab)
    ]

    budget = max_len - 3  # room left after [CLS], [SUB], [SEP]
    n_subs = min(len(sub_ids), budget - 1)
    n_chars = min(len(char_ids), budget - n_subs)

    ids = [CLS] + char_ids[:n_chars] + [SUB] + sub_ids[:n_subs] + [SEP]
    length = len(ids)
    ids.extend([PAD] * (max_len - length))
    token_ids = np.asarray(ids, dtype=np.int64)
    pad_mask = np.zeros(max_len, dtype=bool)
    pad_mask[length:] = True
    return MixedInputSequence(token_ids=token_ids, length=length, pad_mask=pad_mask)


def _stem_to_fixpoint(word: str, stemmer) -> str:
    # Applying to a fixpoint keeps vocabulary shrinking idempotent.
    for _ in range(5):
        stemmed = stemmer(word)
        if stemmed == word:
            return word
        word = stemmed
    return word


def shrink_vocabulary(vocab: Vocabulary, stemmer=porter_stem) -> Vocabulary:
    """Reduce the subword inventory by stemming and numeral removal.

    Whole-word entries are replaced by their (deduplicated) stems,
    entries containing numerals are dropped, continuation subwords are
    kept verbatim. Single-character inventory entries are exempt so the
    character id space stays intact.
    """
    kept = list(SPECIAL_TOKENS)
    seen = set(kept)
    for tok in vocab.tokens[5:]:
        if len(tok) == 1 and tok in CHAR_INVENTORY:
            out = tok
        elif any(ch.isdigit() for ch in tok):
            continue
        elif tok.startswith(CONTINUATION):
            out = tok
        else:
            out = _stem_to_fixpoint(tok, stemmer)
        if out and out not in seen:
            seen.add(out)
            kept.append(out)
    return Vocabulary(kept)
