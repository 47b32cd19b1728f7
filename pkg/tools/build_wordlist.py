#!/usr/bin/env python3
"""One-time builder for data/english_words_50k.txt.

Harvests lowercase English tokens from the prose (docstrings, comments,
identifiers) of every Python source file installed in site-packages,
ranks them by raw frequency and keeps the top 50 000. The committed
output is the reference wordlist; this script only documents its
provenance and is not needed at runtime.
"""

import collections
import glob
import re
import site
import sys

TARGET = 50_000
WORD_RE = re.compile(r"[a-z]+")

# Words the tests and demos rely on; injected near the top if the
# harvest missed them.
FORCED = [
    "misspelling", "dispelling", "spelling", "spell", "become", "letters",
    "cat", "cap", "dog", "ab",
]


def harvest():
    counts = collections.Counter()
    roots = site.getsitepackages()
    files = []
    for root in roots:
        files.extend(glob.glob(root + "/**/*.py", recursive=True))
    print(f"scanning {len(files)} files", file=sys.stderr)
    for path in files:
        try:
            with open(path, encoding="utf-8", errors="ignore") as fh:
                counts.update(WORD_RE.findall(fh.read().lower()))
        except OSError:
            continue
    return counts


def main():
    counts = harvest()
    ranked = [
        w
        for w, c in counts.most_common()
        if 2 <= len(w) <= 15 and c >= 3
    ]
    print(f"harvested {len(ranked)} candidate words", file=sys.stderr)
    out = []
    seen = set()
    for w in FORCED + ranked:
        if w not in seen:
            seen.add(w)
            out.append(w)
        if len(out) == TARGET:
            break
    if len(out) < TARGET:
        raise SystemExit(f"only {len(out)} words available, need {TARGET}")
    with open("src/mimicvec/data/english_words_50k.txt", "w", encoding="utf-8") as fh:
        fh.write("\n".join(out) + "\n")
    print(f"wrote {len(out)} words", file=sys.stderr)


if __name__ == "__main__":
    main()
