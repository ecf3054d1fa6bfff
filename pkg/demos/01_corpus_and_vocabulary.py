#!/usr/bin/env python3
"""Walkthrough of the text side: tokenization, phrase merging, vocabulary,
negative sampling, and (center, context) pair streaming."""

import numpy as np

from kgvec import (
    build_negative_table,
    build_vocabulary,
    merge_phrases,
    stream_context_pairs,
    tokenize,
)

text = (
    "John F Kennedy was born in 1917. "
    "New York is big, and New York never sleeps; "
    "John F Kennedy visited New York twice."
)

print("raw text:")
print(" ", text)

tokens = tokenize(text)
print("\nbase tokens (lowercased, edge punctuation stripped, digits kept for now):")
print(" ", tokens)

# Multi-word entity names become single tokens joined with "_".  Matching is
# greedy longest-first, so "john f kennedy" beats "john f".
lexicon = [("john", "f", "kennedy"), ("john", "f"), ("new", "york")]
merged = merge_phrases(tokens, lexicon)
print("\nafter phrase merging:")
print(" ", merged)

# Vocabulary counting happens after merging; digit-only tokens are dropped,
# and every lexicon entry is guaranteed a slot (count 0 if unseen/rare).
vocab = build_vocabulary(text, min_count=1, phrase_lexicon=lexicon)
print("\nvocabulary (token, count):")
for tok, cnt in zip(vocab.tokens, vocab.counts):
    print(f"  {tok:16s} {cnt}")
print("note: 'john_f' is present with count 0 — it lost every match to the"
      " longer name but keeps an embedding slot.")

sampler = build_negative_table(vocab, power=0.75, table_size=10_000)
print("\nnegative-sampling probabilities (count^0.75, zero-count excluded):")
for tok, p in zip(vocab.tokens, sampler.probabilities):
    print(f"  {tok:16s} {p:.4f}")

rng = np.random.default_rng(0)
print("\n10 negative draws:", [vocab.tokens[i] for i in sampler.draw(rng, 10)])

print("\nfirst 8 skip-gram pairs (window 2, out-of-vocab removed first):")
for pair in list(stream_context_pairs(merged, vocab, window=2))[:8]:
    print(f"  center={vocab.tokens[pair.center]:16s} context={vocab.tokens[pair.context]}")
