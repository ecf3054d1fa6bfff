#!/usr/bin/env python3
"""Sweep the head/tail rank bounds on a synthetic many-to-one world and
print the accuracy grid.  With heavily many-to-one relations, low head
ranks should hold their own against the full-rank corner."""

import numpy as np

from kgvec import (
    AnalogyQuestion,
    ModelConfig,
    TrainConfig,
    TripleSet,
    build_vocabulary,
    rank_sweep,
)
from kgvec.evaluation import sweep_to_tsv

rng = np.random.default_rng(11)

# 10 "categories" each shared by 5 members: strongly many-to-one.
members = [f"member{i:02d}" for i in range(50)]
cats = [f"category{i}" for i in range(10)]
filler = [f"w{i:02d}" for i in range(30)]

tokens = []
for _ in range(3000):
    if rng.random() < 0.4:
        m = int(rng.integers(50))
        tokens += [members[m], cats[m // 5], filler[int(rng.integers(30))]]
    else:
        tokens += [filler[int(rng.integers(30))] for _ in range(3)]

vocab = build_vocabulary(" ".join(tokens + members + cats), min_count=1)
rows = [(i, 0, 50 + i // 5) for i in range(50)]
triples = TripleSet(np.asarray(rows), members + cats, ["in_category"])

questions = []
for i, j in zip(range(0, 50, 5), range(5, 50, 5)):
    questions.append(
        AnalogyQuestion(members[i], cats[i // 5], members[j], cats[j // 5], "in_category")
    )

rows = rank_sweep(
    tokens,
    vocab,
    triples,
    questions,
    ModelConfig(variant="lowrank", dim=16, head_rank=8, tail_rank=16),
    TrainConfig(alpha=0.4, epochs=2, seed=3, window=2),
    head_ranks=[2, 8, 16],
    tail_ranks=[8, 16],
)
print(sweep_to_tsv(rows))
