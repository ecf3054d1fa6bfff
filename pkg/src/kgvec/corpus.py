"""Corpus ingestion: tokenization, phrase merging, vocabulary, sampling.

The pipeline is: raw text -> base tokens -> phrase-merged tokens ->
Vocabulary / NegativeSampler / (center, context) training pairs.
"""

from __future__ import annotations

import string
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DegenerateDistributionError, EmptyCorpusError, ParseError

# Separator used inside merged phrase tokens.  The base tokenizer splits on
# it, so no base token can ever contain it.
PHRASE_SEP = "_"

# Longest phrase the merger will look for, in base tokens.
MAX_PHRASE_WORDS = 8

_EDGE_PUNCT = string.punctuation
_TOKEN_PUNCT = string.punctuation.replace(PHRASE_SEP, "")


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace and underscores, strip edge punctuation.

    Empty leftovers (pure punctuation) are dropped.  Digit-only tokens are
    kept here; vocabulary construction filters them.
    """
    out = []
    for raw in text.lower().replace(PHRASE_SEP, " ").split():
        tok = raw.strip(_EDGE_PUNCT)
        if tok:
            out.append(tok)
    return out


def normalize_token(token: str) -> str:
    """Normalize a single already-tokenized word the way :func:`tokenize` would.

    Unlike :func:`tokenize` this keeps interior underscores, so phrase tokens
    such as ``new_york`` coming from question or triple files survive.
    """
    return token.lower().strip(_TOKEN_PUNCT)


def merge_phrases(
    tokens: Sequence[str], phrase_lexicon: Iterable[Sequence[str]]
) -> list[str]:
    """Replace lexicon phrases in a token sequence with single merged tokens.

    Matching is greedy longest-match, left to right: at each position the
    longest lexicon entry starting there wins and the scan resumes after it.
    Tokens not covered by any entry pass through unchanged.  Merging an
    already-merged sequence is a no-op because merged tokens contain
    ``PHRASE_SEP``, which no base token can.
    """
    by_first: dict[str, list[tuple[str, ...]]] = {}
    for entry in phrase_lexicon:
        words = tuple(entry)
        if not 1 <= len(words) <= MAX_PHRASE_WORDS:
            raise ValueError(
                f"phrase lexicon entry must have 1..{MAX_PHRASE_WORDS} words, "
                f"got {len(words)}: {words!r}"
            )
        by_first.setdefault(words[0], []).append(words)
    if not by_first:
        return list(tokens)
    for entries in by_first.values():
        entries.sort(key=len, reverse=True)

    toks = list(tokens)
    out: list[str] = []
    i = 0
    n = len(toks)
    while i < n:
        candidates = by_first.get(toks[i])
        merged = None
        if candidates is not None:
            for words in candidates:
                k = len(words)
                if i + k <= n and tuple(toks[i : i + k]) == words:
                    merged = PHRASE_SEP.join(words)
                    i += k
                    break
        if merged is None:
            out.append(toks[i])
            i += 1
        else:
            out.append(merged)
    return out


def load_phrase_lexicon(path: str | Path) -> list[tuple[str, ...]]:
    """Read a phrase lexicon file: one entity name per line, words separated
    by spaces.  Names are normalized with the base tokenizer.  Duplicate
    entries are dropped, first occurrence wins."""
    entries: list[tuple[str, ...]] = []
    seen: set[tuple[str, ...]] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            words = tuple(tokenize(line))
            if not words:
                continue
            if len(words) > MAX_PHRASE_WORDS:
                raise ParseError(
                    f"{path}: line {lineno}: entity name longer than "
                    f"{MAX_PHRASE_WORDS} words"
                )
            if words not in seen:
                seen.add(words)
                entries.append(words)
    return entries


@dataclass
class Vocabulary:
    """Token inventory with frequencies and token<->index maps.

    ``counts[i]`` is the post-merge corpus frequency of ``tokens[i]``.
    Lexicon entries are always present; ones that are absent from the corpus
    (or fall under ``min_count``) carry count 0 so they still get embedding
    rows but are never drawn as negative samples.
    """

    tokens: list[str]
    counts: np.ndarray
    min_count: int = 1
    phrase_lexicon: frozenset[str] = frozenset()
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if len(self.tokens) != len(self.counts):
            raise ValueError("tokens and counts length mismatch")
        self.index = {tok: i for i, tok in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def encode(self, tokens: Iterable[str]) -> np.ndarray:
        """Map tokens to indices, silently dropping out-of-vocabulary ones."""
        index = self.index
        return np.fromiter(
            (index[t] for t in tokens if t in index), dtype=np.int64
        )

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"#vocab {len(self)}\n")
            for tok, cnt in zip(self.tokens, self.counts):
                fh.write(f"{tok}\t{int(cnt)}\n")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n")
            parts = header.split()
            if len(parts) != 2 or parts[0] != "#vocab":
                raise ParseError(f"{path}: line 1: expected '#vocab <size>' header")
            try:
                size = int(parts[1])
            except ValueError:
                raise ParseError(f"{path}: line 1: bad vocabulary size") from None
            tokens: list[str] = []
            counts: list[int] = []
            for lineno, line in enumerate(fh, 2):
                line = line.rstrip("\n")
                if not line:
                    continue
                cols = line.split("\t")
                if len(cols) != 2:
                    raise ParseError(
                        f"{path}: line {lineno}: expected 'token<TAB>count'"
                    )
                try:
                    count = int(cols[1])
                except ValueError:
                    raise ParseError(
                        f"{path}: line {lineno}: bad count {cols[1]!r}"
                    ) from None
                tokens.append(cols[0])
                counts.append(count)
        if len(tokens) != size:
            raise ParseError(
                f"{path}: header claims {size} tokens, file has {len(tokens)}"
            )
        lexicon = frozenset(t for t in tokens if PHRASE_SEP in t)
        return cls(tokens, np.asarray(counts, dtype=np.int64), 1, lexicon)


def build_vocabulary(
    text: Iterable[str] | str,
    min_count: int = 5,
    phrase_lexicon: Sequence[Sequence[str]] = (),
) -> Vocabulary:
    """Count phrase-merged tokens and build the Vocabulary.

    ``text`` is a string or an iterable of lines (an open text file works).
    Digit-only tokens are removed.  Corpus tokens below ``min_count`` are
    dropped.  Every lexicon entry is retained; if its corpus frequency is
    below ``min_count`` (or it is digit-only) it is recorded with count 0,
    the same as a lexicon entry never seen in the corpus.

    Tokens are ordered by descending count, ties broken alphabetically, so
    a rebuilt vocabulary is reproducible.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    lines = text.splitlines() if isinstance(text, str) else text
    entries = [tuple(e) for e in phrase_lexicon]
    counter: Counter[str] = Counter()
    total = 0
    for line in lines:
        toks = merge_phrases(tokenize(line), entries)
        counter.update(toks)
        total += len(toks)
    if total == 0:
        raise EmptyCorpusError("corpus produced no tokens")

    lexicon_tokens = {PHRASE_SEP.join(words) for words in entries}
    kept: dict[str, int] = {}
    for tok, cnt in counter.items():
        if tok in lexicon_tokens:
            continue
        if tok.isdigit():
            continue
        if cnt >= min_count:
            kept[tok] = cnt
    for tok in lexicon_tokens:
        cnt = counter.get(tok, 0)
        kept[tok] = cnt if (cnt >= min_count and not tok.isdigit()) else 0

    order = sorted(kept, key=lambda t: (-kept[t], t))
    counts = np.asarray([kept[t] for t in order], dtype=np.int64)
    return Vocabulary(order, counts, min_count, frozenset(lexicon_tokens))


class NegativeSampler:
    """Draws word indices from the count^power unigram distribution.

    The distribution is quantized into a flat table (one cell per draw
    outcome), the standard word2vec trick: the per-token quantization error
    is below ``1/table_size``.  Tokens with count 0 never appear.
    """

    def __init__(self, probabilities: np.ndarray, table: np.ndarray):
        self.probabilities = probabilities
        self.table = table

    def draw(self, rng: np.random.Generator, size: int | None = None):
        """Sample token indices; scalar if ``size`` is None, else an array."""
        cells = rng.integers(0, len(self.table), size=size)
        return self.table[cells]


def build_negative_table(
    vocab: Vocabulary, power: float = 0.75, table_size: int = 1_000_000
) -> NegativeSampler:
    """Build a NegativeSampler with weights proportional to count^power."""
    if len(vocab) == 0:
        raise ValueError("vocabulary is empty")
    if not 0.0 <= power <= 1.0:
        raise ValueError(f"power must be in [0, 1], got {power}")
    if table_size < len(vocab):
        raise ValueError("table_size must be at least the vocabulary size")

    counts = vocab.counts.astype(np.float64)
    # 0**0 == 1, so mask zero-count tokens explicitly.
    weights = np.where(counts > 0, counts, 1.0) ** power
    weights[counts <= 0] = 0.0
    total = weights.sum()
    if total <= 0:
        raise DegenerateDistributionError("all token counts are zero")
    probs = weights / total

    boundaries = np.round(np.cumsum(probs) * table_size).astype(np.int64)
    cells_per_token = np.diff(boundaries, prepend=0)
    table = np.repeat(np.arange(len(vocab), dtype=np.int64), cells_per_token)
    return NegativeSampler(probs, table)


@dataclass(frozen=True)
class ContextPair:
    """One (center, context) skip-gram training example.

    ``position`` is the center's offset in the in-vocabulary token stream;
    the context sits within ``window`` positions of it.
    """

    center: int
    context: int
    position: int


def stream_context_pairs(
    tokens: Sequence[str],
    vocab: Vocabulary,
    window: int,
    rng: np.random.Generator | None = None,
    subsample: float = 0.0,
) -> Iterator[ContextPair]:
    """Yield (center, context) pairs from a sliding window of radius ``window``.

    Out-of-vocabulary tokens are removed first, so the window spans the
    compacted stream.  ``subsample`` optionally drops frequent words with the
    classic 1 - sqrt(rate/frequency) probability before windowing; it is off
    by default and requires ``rng`` when enabled.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    ids = vocab.encode(tokens)
    ids = _subsample_ids(ids, vocab, subsample, rng)
    n = len(ids)
    for k in range(n):
        lo = max(0, k - window)
        hi = min(n - 1, k + window)
        for j in range(lo, hi + 1):
            if j != k:
                yield ContextPair(int(ids[k]), int(ids[j]), k)


def context_pair_arrays(
    ids: np.ndarray, window: int
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized equivalent of :func:`stream_context_pairs` on encoded ids.

    Returns (centers, contexts) in the same position-major order the
    generator uses.  This is the form the trainer consumes.
    """
    n = len(ids)
    pos_chunks = []
    ctx_chunks = []
    off_chunks = []
    for off in range(1, window + 1):
        if off >= n:
            break
        k = np.arange(off, n)
        # center right of context (offset -off) and left of it (+off)
        pos_chunks += [k, k - off]
        ctx_chunks += [ids[:-off], ids[off:]]
        off_chunks += [np.full(n - off, -off), np.full(n - off, off)]
    if not pos_chunks:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty.copy()
    pos = np.concatenate(pos_chunks)
    ctx = np.concatenate(ctx_chunks)
    off = np.concatenate(off_chunks)
    order = np.lexsort((off, pos))
    return ids[pos[order]], ctx[order]


def _subsample_ids(
    ids: np.ndarray,
    vocab: Vocabulary,
    subsample: float,
    rng: np.random.Generator | None,
) -> np.ndarray:
    if subsample <= 0.0:
        return ids
    if rng is None:
        raise ValueError("subsampling requires an rng")
    total = vocab.counts.sum()
    freq = vocab.counts / max(total, 1)
    keep = np.ones(len(vocab))
    positive = freq > 0
    keep[positive] = np.minimum(1.0, np.sqrt(subsample / freq[positive]))
    return ids[rng.random(len(ids)) < keep[ids]]
