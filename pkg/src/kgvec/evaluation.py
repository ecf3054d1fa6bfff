"""Analogical-reasoning and word-similarity evaluation.

Two analogy modes are provided: plain vector-offset scoring (3CosAdd) and
the two-step relational mode for models with per-relation projections, which
first picks the relation that best explains the (a, b) pair and then ranks
candidate answers under that relation's scoring function.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .corpus import Vocabulary, normalize_token
from .errors import ParseError, UndefinedCorrelationError
from .kg import TripleSet
from .model import ModelConfig
from .trainer import ModelState, TrainConfig, train

_EPS = 1e-12

# Variants whose relation parameters support the two-step mode; everything
# else falls back to 3CosAdd.
RELATIONAL_VARIANTS = ("lowrank", "transh")


@dataclass(frozen=True)
class AnalogyQuestion:
    """a : b :: c : d with a relation label for per-relation reporting."""

    a: str
    b: str
    c: str
    d: str
    relation: str = "all"

    def __post_init__(self) -> None:
        if len({self.a, self.b, self.c, self.d}) != 4:
            raise ValueError(f"analogy question tokens must be distinct: {self}")


@dataclass(frozen=True)
class SimilarityPair:
    w1: str
    w2: str
    score: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.score):
            raise ValueError("human similarity score must be finite")


@dataclass
class RelationAccuracy:
    relation: str
    answered: int = 0
    correct: int = 0

    @property
    def accuracy(self) -> float:
        return self.correct / self.answered if self.answered else 0.0


@dataclass
class SimilarityResult:
    dataset: str
    n_used: int
    skipped: int
    rho: float


@dataclass
class EvalReport:
    """Accuracy-per-relation and/or Spearman-per-dataset rows."""

    relation_rows: list[RelationAccuracy] = field(default_factory=list)
    skipped: int = 0
    similarity_rows: list[SimilarityResult] = field(default_factory=list)

    @property
    def total_answered(self) -> int:
        return sum(r.answered for r in self.relation_rows)

    @property
    def total_correct(self) -> int:
        return sum(r.correct for r in self.relation_rows)

    @property
    def total_accuracy(self) -> float:
        answered = self.total_answered
        return self.total_correct / answered if answered else 0.0

    def to_tsv(self) -> str:
        lines = []
        if self.relation_rows or not self.similarity_rows:
            lines.append("relation\tquestions\taccuracy")
            for r in self.relation_rows:
                lines.append(f"{r.relation}\t{r.answered}\t{r.accuracy:.4f}")
            lines.append(
                f"TOTAL\t{self.total_answered}\t{self.total_accuracy:.4f}"
            )
            lines.append(f"SKIPPED\t{self.skipped}\t-")
        for s in self.similarity_rows:
            lines.append("dataset\tpairs\tskipped\tspearman_rho")
            lines.append(f"{s.dataset}\t{s.n_used}\t{s.skipped}\t{s.rho:.4f}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------


def load_analogy_questions(path: str | Path) -> list[AnalogyQuestion]:
    """word2vec questions format: ': relation' section headers, then four
    whitespace-separated tokens per line."""
    questions: list[AnalogyQuestion] = []
    relation = "all"
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith(":"):
                relation = line[1:].strip() or "all"
                continue
            toks = [normalize_token(t) for t in line.split()]
            if len(toks) != 4:
                raise ParseError(
                    f"{path}: line {lineno}: expected 4 tokens, got {len(toks)}"
                )
            try:
                questions.append(AnalogyQuestion(*toks, relation=relation))
            except ValueError as exc:
                raise ParseError(f"{path}: line {lineno}: {exc}") from None
    return questions


def load_similarity_pairs(path: str | Path) -> list[SimilarityPair]:
    """``word1<TAB>word2<TAB>score`` per line."""
    pairs: list[SimilarityPair] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise ParseError(
                    f"{path}: line {lineno}: expected 'word1<TAB>word2<TAB>score'"
                )
            try:
                score = float(cols[2])
            except ValueError:
                raise ParseError(
                    f"{path}: line {lineno}: bad score {cols[2]!r}"
                ) from None
            pairs.append(
                SimilarityPair(normalize_token(cols[0]), normalize_token(cols[1]), score)
            )
    return pairs


# ---------------------------------------------------------------------------
# Analogy predictors
# ---------------------------------------------------------------------------


def analogy_3cosadd(
    a: str, b: str, c: str, vocab: Vocabulary, vectors: np.ndarray
) -> str:
    """argmax over the vocabulary (minus a, b, c) of cosine(b - a + c, w).

    Ties break toward the lowest token index.
    """
    ia, ib, ic = vocab.index[a], vocab.index[b], vocab.index[c]
    target = vectors[ib] - vectors[ia] + vectors[ic]
    norms = np.linalg.norm(vectors, axis=1) * max(np.linalg.norm(target), _EPS)
    sims = (vectors @ target) / np.maximum(norms, _EPS)
    sims[[ia, ib, ic]] = -np.inf
    return vocab.tokens[int(np.argmax(sims))]


class RelationalAnalogy:
    """Two-step predictor: pick r* minimizing the (a, b) triple score, then
    rank every candidate w by the (c, r*, w) score.

    Projected candidate matrices are cached per relation, so repeated calls
    share the heavy part.  Only variants in RELATIONAL_VARIANTS qualify;
    construct via :func:`make_analogy_predictor` to get the fallback logic.
    """

    def __init__(self, state: ModelState):
        if state.model_config.variant not in RELATIONAL_VARIANTS or not state.params:
            raise ValueError(
                f"variant {state.model_config.variant!r} has no relational mode"
            )
        self.vocab = state.vocab
        self.vectors = state.store.input_vectors
        self.relation_vectors = state.store.relation_vectors
        self.head_maps = [_head_matrix(state, r) for r in range(len(state.params))]
        self.tail_maps = [_tail_matrix(state, r) for r in range(len(state.params))]
        self._projected: dict[int, np.ndarray] = {}

    def _projected_tails(self, r: int) -> np.ndarray:
        if r not in self._projected:
            self._projected[r] = self.vectors @ self.tail_maps[r].T
        return self._projected[r]

    def best_relation(self, a: str, b: str) -> int:
        """Index of the relation whose projections best explain (a, b)."""
        va = self.vectors[self.vocab.index[a]]
        vb = self.vectors[self.vocab.index[b]]
        fits = [
            _sq(self.head_maps[r] @ va + self.relation_vectors[r] - self.tail_maps[r] @ vb)
            for r in range(len(self.head_maps))
        ]
        return int(np.argmin(fits))

    def __call__(self, a: str, b: str, c: str) -> str:
        ia, ib, ic = (self.vocab.index[t] for t in (a, b, c))
        vc = self.vectors[ic]
        r_star = self.best_relation(a, b)
        target = self.head_maps[r_star] @ vc + self.relation_vectors[r_star]
        diffs = self._projected_tails(r_star) - target
        scores = np.einsum("ij,ij->i", diffs, diffs)
        scores[[ia, ib, ic]] = np.inf
        return self.vocab.tokens[int(np.argmin(scores))]


def _sq(v: np.ndarray) -> float:
    return float(v @ v)


def _head_matrix(state: ModelState, r: int) -> np.ndarray:
    p = state.params[r]
    if state.model_config.variant == "lowrank":
        return p.head_proj.materialize()
    w = p.normal
    return np.eye(len(w)) - np.outer(w, w)


def _tail_matrix(state: ModelState, r: int) -> np.ndarray:
    p = state.params[r]
    if state.model_config.variant == "lowrank":
        return p.tail_proj.materialize()
    w = p.normal
    return np.eye(len(w)) - np.outer(w, w)


def make_analogy_predictor(
    state: ModelState, mode: str = "relational"
) -> Callable[[str, str, str], str]:
    """Predictor factory with the documented fallback: relational mode on a
    variant without usable relation parameters degrades to 3CosAdd."""
    if mode not in ("relational", "3cosadd"):
        raise ValueError(f"unknown analogy mode {mode!r}")
    if (
        mode == "relational"
        and state.model_config.variant in RELATIONAL_VARIANTS
        and state.params
    ):
        return RelationalAnalogy(state)
    vocab, vectors = state.vocab, state.store.input_vectors

    def predict(a: str, b: str, c: str) -> str:
        return analogy_3cosadd(a, b, c, vocab, vectors)

    return predict


def run_analogy_suite(
    questions: Sequence[AnalogyQuestion],
    predict: Callable[[str, str, str], str],
    vocab: Vocabulary,
) -> EvalReport:
    """Score questions, skipping (and counting) any with out-of-vocabulary
    tokens; accuracy is correct/answered per relation label."""
    rows: dict[str, RelationAccuracy] = {}
    skipped = 0
    for q in questions:
        toks = (q.a, q.b, q.c, q.d)
        if any(t not in vocab for t in toks):
            skipped += 1
            continue
        row = rows.setdefault(q.relation, RelationAccuracy(q.relation))
        row.answered += 1
        if predict(q.a, q.b, q.c) == q.d:
            row.correct += 1
    return EvalReport(relation_rows=list(rows.values()), skipped=skipped)


# ---------------------------------------------------------------------------
# Word similarity
# ---------------------------------------------------------------------------


def fractional_ranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks; tied values share the mean of their positions."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman_rho(
    model_scores: Sequence[float], human_scores: Sequence[float]
) -> float:
    """Pearson correlation of the fractional-rank vectors, in [-1, 1]."""
    x = np.asarray(model_scores, dtype=np.float64)
    y = np.asarray(human_scores, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("score lists must be 1-D and equally long")
    if len(x) < 2:
        raise UndefinedCorrelationError("need at least 2 score pairs")
    rx = fractional_ranks(x)
    ry = fractional_ranks(y)
    rx -= rx.mean()
    ry -= ry.mean()
    sx2 = float(rx @ rx)
    sy2 = float(ry @ ry)
    if sx2 == 0.0 or sy2 == 0.0:
        raise UndefinedCorrelationError("constant score list has no rank order")
    return float(np.clip((rx @ ry) / np.sqrt(sx2 * sy2), -1.0, 1.0))


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    denom = np.linalg.norm(u) * np.linalg.norm(v)
    return float(u @ v / denom) if denom > _EPS else 0.0


def run_similarity_suite(
    pairs: Sequence[SimilarityPair],
    vocab: Vocabulary,
    vectors: np.ndarray,
    dataset: str = "similarity",
) -> EvalReport:
    """Cosine-score every in-vocabulary pair and correlate with the human
    scores; out-of-vocabulary pairs are skipped and counted."""
    model, human = [], []
    skipped = 0
    for p in pairs:
        if p.w1 not in vocab or p.w2 not in vocab:
            skipped += 1
            continue
        u = vectors[vocab.index[p.w1]]
        v = vectors[vocab.index[p.w2]]
        model.append(cosine_similarity(u, v))
        human.append(p.score)
    if len(model) < 2:
        raise UndefinedCorrelationError(
            f"{dataset}: only {len(model)} scorable pairs"
        )
    rho = spearman_rho(model, human)
    return EvalReport(
        skipped=skipped,
        similarity_rows=[SimilarityResult(dataset, len(model), skipped, rho)],
    )


# ---------------------------------------------------------------------------
# Rank sweep
# ---------------------------------------------------------------------------


@dataclass
class SweepRow:
    head_rank: int
    tail_rank: int
    accuracy: float
    answered: int


def rank_sweep(
    tokens: Sequence[str],
    vocab: Vocabulary,
    triples: TripleSet,
    questions: Sequence[AnalogyQuestion],
    model_config: ModelConfig,
    train_config: TrainConfig,
    head_ranks: Sequence[int],
    tail_ranks: Sequence[int],
) -> list[SweepRow]:
    """Train one model per (head_rank, tail_rank) combination, all else
    fixed, and report two-step analogy accuracy for each."""
    rows = []
    for m_l in head_ranks:
        for m_r in tail_ranks:
            cfg = replace(
                model_config, variant="lowrank", head_rank=int(m_l), tail_rank=int(m_r)
            )
            state, _ = train(tokens, vocab, triples, cfg, train_config)
            report = run_analogy_suite(
                questions, make_analogy_predictor(state, "relational"), vocab
            )
            rows.append(
                SweepRow(int(m_l), int(m_r), report.total_accuracy, report.total_answered)
            )
    return rows


def sweep_to_tsv(rows: Sequence[SweepRow]) -> str:
    lines = ["head_rank\ttail_rank\taccuracy\tanswered"]
    for r in rows:
        lines.append(f"{r.head_rank}\t{r.tail_rank}\t{r.accuracy:.4f}\t{r.answered}")
    return "\n".join(lines) + "\n"
