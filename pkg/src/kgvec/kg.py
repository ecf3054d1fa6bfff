"""Knowledge-graph triples: loading, mapping statistics, corruption."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from .errors import CorruptionExhaustedError, EmptyKGError, ParseError

if TYPE_CHECKING:
    from .corpus import Vocabulary

CORRUPT_MODES = ("head", "tail", "uniform-either", "relation")


@dataclass
class TripleSet:
    """Deduplicated (head, relation, tail) triples over integer indices.

    Entity and relation indices are assigned in order of first appearance in
    the source file, after any vocabulary filtering.
    """

    triples: np.ndarray  # (n, 3) int64 rows (head, relation, tail)
    entity_names: list[str]
    relation_names: list[str]
    entity_index: dict[str, int] = field(init=False, repr=False)
    relation_index: dict[str, int] = field(init=False, repr=False)
    triple_index: frozenset = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.triples = np.asarray(self.triples, dtype=np.int64).reshape(-1, 3)
        self.entity_index = {n: i for i, n in enumerate(self.entity_names)}
        self.relation_index = {n: i for i, n in enumerate(self.relation_names)}
        self.triple_index = frozenset(map(tuple, self.triples.tolist()))
        if len(self.triple_index) != len(self.triples):
            raise ValueError("duplicate triples")
        if len(self.triples) and (
            self.triples[:, [0, 2]].max() >= len(self.entity_names)
            or self.triples[:, 1].max() >= len(self.relation_names)
            or self.triples.min() < 0
        ):
            raise ValueError("triple index out of range")

    def __len__(self) -> int:
        return len(self.triples)

    @property
    def n_entities(self) -> int:
        return len(self.entity_names)

    @property
    def n_relations(self) -> int:
        return len(self.relation_names)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for h, r, t in self.triples:
                fh.write(
                    f"{self.entity_names[h]}\t{self.relation_names[r]}"
                    f"\t{self.entity_names[t]}\n"
                )


def load_triples(
    path: str | Path, entity_filter: "Vocabulary | None" = None
) -> TripleSet:
    """Parse a ``head<TAB>relation<TAB>tail`` TSV file into a TripleSet.

    Duplicate lines collapse to one triple.  With ``entity_filter`` given,
    only triples whose head and tail are both vocabulary tokens survive.
    Blank lines are skipped; anything else malformed raises ParseError with
    its line number.
    """
    entity_names: list[str] = []
    relation_names: list[str] = []
    ent_idx: dict[str, int] = {}
    rel_idx: dict[str, int] = {}
    rows: list[tuple[int, int, int]] = []
    seen: set[tuple[int, int, int]] = set()

    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != 3 or not all(c.strip() for c in cols):
                raise ParseError(
                    f"{path}: line {lineno}: expected 'head<TAB>relation<TAB>tail'"
                )
            head, rel, tail = (c.strip() for c in cols)
            if entity_filter is not None and (
                head not in entity_filter or tail not in entity_filter
            ):
                continue
            if head not in ent_idx:
                ent_idx[head] = len(entity_names)
                entity_names.append(head)
            if tail not in ent_idx:
                ent_idx[tail] = len(entity_names)
                entity_names.append(tail)
            if rel not in rel_idx:
                rel_idx[rel] = len(relation_names)
                relation_names.append(rel)
            row = (ent_idx[head], rel_idx[rel], ent_idx[tail])
            if row not in seen:
                seen.add(row)
                rows.append(row)

    if not rows:
        raise EmptyKGError(f"{path}: no triples survived loading")
    return TripleSet(np.asarray(rows, dtype=np.int64), entity_names, relation_names)


@dataclass
class MappingStats:
    """Per-relation mapping cardinalities plus their aggregates.

    ``tails_per_head[r]`` is the mean, over distinct heads appearing with
    relation r, of the number of distinct tails each head links to;
    ``heads_per_tail`` is the symmetric quantity.  Aggregates are unweighted
    population mean/stddev across relations.
    """

    relation_names: list[str]
    tails_per_head: np.ndarray
    heads_per_tail: np.ndarray

    @property
    def tph_mean(self) -> float:
        return float(np.mean(self.tails_per_head))

    @property
    def tph_std(self) -> float:
        return float(np.std(self.tails_per_head))

    @property
    def hpt_mean(self) -> float:
        return float(np.mean(self.heads_per_tail))

    @property
    def hpt_std(self) -> float:
        return float(np.std(self.heads_per_tail))

    def to_tsv(self) -> str:
        lines = ["relation\ttails_per_head\theads_per_tail"]
        for name, tph, hpt in zip(
            self.relation_names, self.tails_per_head, self.heads_per_tail
        ):
            lines.append(f"{name}\t{tph:.6g}\t{hpt:.6g}")
        lines.append(f"MEAN\t{self.tph_mean:.6g}\t{self.hpt_mean:.6g}")
        lines.append(f"STD\t{self.tph_std:.6g}\t{self.hpt_std:.6g}")
        return "\n".join(lines) + "\n"


def compute_mapping_stats(triple_set: TripleSet) -> MappingStats:
    """Compute mean tails-per-head and heads-per-tail for every relation."""
    if len(triple_set) == 0:
        raise ValueError("triple set is empty")
    tails_by_head: dict[int, dict[int, set]] = defaultdict(lambda: defaultdict(set))
    heads_by_tail: dict[int, dict[int, set]] = defaultdict(lambda: defaultdict(set))
    for h, r, t in triple_set.triples:
        tails_by_head[int(r)][int(h)].add(int(t))
        heads_by_tail[int(r)][int(t)].add(int(h))

    n_rel = triple_set.n_relations
    tph = np.zeros(n_rel)
    hpt = np.zeros(n_rel)
    for r in range(n_rel):
        tph[r] = np.mean([len(s) for s in tails_by_head[r].values()])
        hpt[r] = np.mean([len(s) for s in heads_by_tail[r].values()])
    return MappingStats(list(triple_set.relation_names), tph, hpt)


def corrupt_triple(
    triple: tuple[int, int, int],
    triple_set: TripleSet,
    mode: str = "uniform-either",
    rng: np.random.Generator | None = None,
    max_attempts: int = 100,
) -> tuple[int, int, int]:
    """Produce a negative triple by replacing exactly one slot of ``triple``.

    The replacement is drawn uniformly over all entities (or relations for
    mode="relation", an option the trainer never uses by default).  Draws
    that reproduce the input or hit a known-true triple are rejected and
    retried up to ``max_attempts`` times.
    """
    if mode not in CORRUPT_MODES:
        raise ValueError(f"mode must be one of {CORRUPT_MODES}, got {mode!r}")
    if rng is None:
        raise ValueError("corrupt_triple requires an rng")
    n_ent = triple_set.n_entities
    if mode != "relation" and n_ent < 2:
        raise ValueError("need at least 2 entities to corrupt")
    if mode == "relation" and triple_set.n_relations < 2:
        raise ValueError("need at least 2 relations for relation corruption")

    h, r, t = (int(x) for x in triple)
    for _ in range(max_attempts):
        slot = mode
        if mode == "uniform-either":
            slot = "head" if rng.integers(2) == 0 else "tail"
        if slot == "head":
            cand = int(rng.integers(n_ent))
            corrupted = (cand, r, t)
            changed = cand != h
        elif slot == "tail":
            cand = int(rng.integers(n_ent))
            corrupted = (h, r, cand)
            changed = cand != t
        else:
            cand = int(rng.integers(triple_set.n_relations))
            corrupted = (h, cand, t)
            changed = cand != r
        if changed and corrupted not in triple_set.triple_index:
            return corrupted
    raise CorruptionExhaustedError(
        f"no valid corruption of {triple} found in {max_attempts} attempts"
    )
