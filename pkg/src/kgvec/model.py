"""Embedding parameters, triple scoring, and analytic loss gradients.

Knowledge-model variants, by what each scoring function does:

* ``lowrank``  — asymmetric rank-bounded projections of head and tail:
                 f = ||L h + r - R t||^2 with L, R stored as rank-1 factors.
* ``transe``   — plain translation: f = ||h + r - t||^2.
* ``transh``   — hyperplane projection of both entities (TransH):
                 f = ||h_perp + r - t_perp||^2, x_perp = x - (w.x) w.
* ``se``       — Structured Embeddings: f = ||L h - R t||_1, full matrices,
                 no relation vector in the score.
* ``transr``   — one shared full matrix per relation (TransR):
                 f = ||M h + r - M t||^2.
* ``sg``       — text-only placeholder: no knowledge parameters at all.

Lower score means a more plausible triple.  All gradients here are plain
analytic derivatives, verified against central finite differences in the
test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import NumericError
from .projection import LowRankProjection, init_projection

VARIANTS = ("lowrank", "transe", "transh", "se", "transr", "sg")

# Logistic inputs are clamped here before exponentiation; at 64-bit this is
# bias-free to ~1e-13 while ruling out overflow.
LOGIT_CLAMP = 30.0


@dataclass
class ModelConfig:
    """Model shape: variant, dimension, rank bounds, loss constants."""

    variant: str = "lowrank"
    dim: int = 100
    head_rank: int = 50
    tail_rank: int = 90
    negatives: int = 5
    margin: float = 1.0

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.variant == "lowrank" and not (
            1 <= self.head_rank <= self.dim and 1 <= self.tail_rank <= self.dim
        ):
            raise ValueError("rank bounds must satisfy 1 <= m <= dim")
        if self.margin <= 0:
            raise ValueError("margin must be > 0")
        if self.negatives < 1:
            raise ValueError("negatives must be >= 1")


@dataclass
class EmbeddingStore:
    """Input/output word matrices plus relation vectors.

    Input vectors double as entity vectors; output vectors exist for the
    skip-gram objective only.
    """

    input_vectors: np.ndarray  # (|V|, d)
    output_vectors: np.ndarray  # (|V|, d)
    relation_vectors: np.ndarray  # (|R|, d)

    @property
    def dim(self) -> int:
        return self.input_vectors.shape[1]

    @classmethod
    def init(
        cls,
        vocab_size: int,
        n_relations: int,
        dim: int,
        rng: np.random.Generator,
        dtype=np.float64,
    ) -> "EmbeddingStore":
        """word2vec-style start: uniform +-0.5/d inputs and relations,
        zero outputs."""
        scale = 0.5 / dim
        inp = rng.uniform(-scale, scale, size=(vocab_size, dim)).astype(dtype)
        out = np.zeros((vocab_size, dim), dtype=dtype)
        rel = rng.uniform(-scale, scale, size=(n_relations, dim)).astype(dtype)
        return cls(inp, out, rel)

    def check_finite(self) -> None:
        for name, arr in (
            ("input_vectors", self.input_vectors),
            ("output_vectors", self.output_vectors),
            ("relation_vectors", self.relation_vectors),
        ):
            if not np.all(np.isfinite(arr)):
                raise NumericError(f"non-finite values in {name}")


# ---------------------------------------------------------------------------
# Per-relation parameters
# ---------------------------------------------------------------------------


@dataclass
class LowRankRelation:
    head_proj: LowRankProjection
    tail_proj: LowRankProjection


@dataclass
class TransHRelation:
    normal: np.ndarray  # unit-length hyperplane normal

    def renormalize(self) -> None:
        self.normal /= np.linalg.norm(self.normal)


@dataclass
class SERelation:
    head_matrix: np.ndarray  # (d, d)
    tail_matrix: np.ndarray  # (d, d)


@dataclass
class TransRRelation:
    matrix: np.ndarray  # (d, d)


RelationParams = LowRankRelation | TransHRelation | SERelation | TransRRelation | None


def init_relation_params(
    config: ModelConfig, n_relations: int, rng: np.random.Generator
) -> list[RelationParams]:
    """One parameter bundle per relation; ``transe`` needs none beyond the
    relation vector and ``sg`` has no knowledge side at all."""
    if config.variant == "sg":
        return []
    params: list[RelationParams] = []
    for _ in range(n_relations):
        if config.variant == "lowrank":
            params.append(
                LowRankRelation(
                    init_projection(config.dim, config.head_rank, rng),
                    init_projection(config.dim, config.tail_rank, rng),
                )
            )
        elif config.variant == "transh":
            w = rng.standard_normal(config.dim)
            params.append(TransHRelation(w / np.linalg.norm(w)))
        elif config.variant == "se":
            params.append(SERelation(np.eye(config.dim), np.eye(config.dim)))
        elif config.variant == "transr":
            params.append(TransRRelation(np.eye(config.dim)))
        else:  # transe
            params.append(None)
    return params


# ---------------------------------------------------------------------------
# Triple scoring
# ---------------------------------------------------------------------------


def score_triple(
    config: ModelConfig,
    params: RelationParams,
    head: np.ndarray,
    relation: np.ndarray,
    tail: np.ndarray,
) -> float:
    """Variant-appropriate plausibility score; lower is more plausible."""
    variant = config.variant
    if variant == "lowrank":
        e = params.head_proj.apply(head) + relation - params.tail_proj.apply(tail)
        score = float(e @ e)
    elif variant == "transe":
        e = head + relation - tail
        score = float(e @ e)
    elif variant == "transh":
        w = params.normal
        e = (head - (w @ head) * w) + relation - (tail - (w @ tail) * w)
        score = float(e @ e)
    elif variant == "se":
        score = float(np.abs(params.head_matrix @ head - params.tail_matrix @ tail).sum())
    elif variant == "transr":
        e = params.matrix @ (head - tail) + relation
        score = float(e @ e)
    else:
        raise ValueError(f"variant {variant!r} has no triple score")
    if not np.isfinite(score):
        raise NumericError("non-finite triple score")
    return score


# ---------------------------------------------------------------------------
# Margin ranking loss and gradients
# ---------------------------------------------------------------------------


@dataclass
class KnowledgeGrads:
    """Gradients of the hinge loss w.r.t. every participating parameter.

    Slot gradients are reported separately even when golden and corrupted
    triples share an embedding row; callers accumulate.  ``params`` mirrors
    the relation's parameter structure (None for transe/inactive hinge).
    """

    loss: float
    active: bool
    head: np.ndarray
    tail: np.ndarray
    corrupt_head: np.ndarray
    corrupt_tail: np.ndarray
    relation: np.ndarray
    params: RelationParams = None


def _zero_grads(config: ModelConfig, params: RelationParams, d: int) -> KnowledgeGrads:
    z = np.zeros(d)
    pgrad: RelationParams = None
    if config.variant == "lowrank":
        pgrad = LowRankRelation(
            LowRankProjection(
                np.zeros_like(params.head_proj.weights),
                np.zeros_like(params.head_proj.out_factors),
                np.zeros_like(params.head_proj.in_factors),
            ),
            LowRankProjection(
                np.zeros_like(params.tail_proj.weights),
                np.zeros_like(params.tail_proj.out_factors),
                np.zeros_like(params.tail_proj.in_factors),
            ),
        )
    elif config.variant == "transh":
        pgrad = TransHRelation(np.zeros(d))
    elif config.variant == "se":
        pgrad = SERelation(np.zeros((d, d)), np.zeros((d, d)))
    elif config.variant == "transr":
        pgrad = TransRRelation(np.zeros((d, d)))
    return KnowledgeGrads(0.0, False, z, z.copy(), z.copy(), z.copy(), z.copy(), pgrad)


def knowledge_loss_grad(
    config: ModelConfig,
    params: RelationParams,
    head: np.ndarray,
    tail: np.ndarray,
    corrupt_head: np.ndarray,
    corrupt_tail: np.ndarray,
    relation: np.ndarray,
    margin: float | None = None,
) -> KnowledgeGrads:
    """Hinge loss [margin + f(golden) - f(corrupted)]_+ and its gradients.

    The corrupted triple shares the relation (entity corruption), so the
    relation vector and relation parameters collect contributions from both
    scores.  When the hinge is inactive everything is zero.
    """
    gamma = config.margin if margin is None else margin
    if gamma <= 0:
        raise ValueError("margin must be > 0")
    f_golden = score_triple(config, params, head, relation, tail)
    f_corrupt = score_triple(config, params, corrupt_head, relation, corrupt_tail)
    loss = gamma + f_golden - f_corrupt
    if loss <= 0.0:
        return _zero_grads(config, params, len(head))
    if not np.isfinite(loss):
        raise NumericError("non-finite knowledge loss")

    variant = config.variant
    if variant == "lowrank":
        grads = _lowrank_grads(params, head, tail, corrupt_head, corrupt_tail, relation)
    elif variant == "transe":
        e_g = head + relation - tail
        e_c = corrupt_head + relation - corrupt_tail
        grads = KnowledgeGrads(
            0.0, True, 2 * e_g, -2 * e_g, -2 * e_c, 2 * e_c, 2 * (e_g - e_c), None
        )
    elif variant == "transh":
        grads = _transh_grads(params, head, tail, corrupt_head, corrupt_tail, relation)
    elif variant == "se":
        grads = _se_grads(params, head, tail, corrupt_head, corrupt_tail)
    elif variant == "transr":
        grads = _transr_grads(params, head, tail, corrupt_head, corrupt_tail, relation)
    else:
        raise ValueError(f"variant {variant!r} has no knowledge loss")
    grads.loss = float(loss)
    return grads


def _lowrank_grads(params, head, tail, corrupt_head, corrupt_tail, relation):
    lp, rp = params.head_proj, params.tail_proj
    e_g = lp.apply(head) + relation - rp.apply(tail)
    e_c = lp.apply(corrupt_head) + relation - rp.apply(corrupt_tail)

    # Head-side factors: f = ||e||^2, dA = 2 e h^T  for  e = A h + r - B t.
    qh_g = lp.in_factors @ head
    qh_c = lp.in_factors @ corrupt_head
    pe_g = lp.out_factors @ e_g
    pe_c = lp.out_factors @ e_c
    d_lw = 2.0 * (pe_g * qh_g - pe_c * qh_c)
    d_lout = 2.0 * lp.weights[:, None] * (
        qh_g[:, None] * e_g[None, :] - qh_c[:, None] * e_c[None, :]
    )
    d_lin = 2.0 * lp.weights[:, None] * (
        pe_g[:, None] * head[None, :] - pe_c[:, None] * corrupt_head[None, :]
    )

    # Tail-side factors enter with a minus sign: dB = -2 e t^T.
    st_g = rp.in_factors @ tail
    st_c = rp.in_factors @ corrupt_tail
    oe_g = rp.out_factors @ e_g
    oe_c = rp.out_factors @ e_c
    d_rw = -2.0 * (oe_g * st_g - oe_c * st_c)
    d_rout = -2.0 * rp.weights[:, None] * (
        st_g[:, None] * e_g[None, :] - st_c[:, None] * e_c[None, :]
    )
    d_rin = -2.0 * rp.weights[:, None] * (
        oe_g[:, None] * tail[None, :] - oe_c[:, None] * corrupt_tail[None, :]
    )

    pgrad = LowRankRelation(
        LowRankProjection(d_lw, d_lout, d_lin),
        LowRankProjection(d_rw, d_rout, d_rin),
    )
    return KnowledgeGrads(
        0.0,
        True,
        2 * lp.apply_transpose(e_g),
        -2 * rp.apply_transpose(e_g),
        -2 * lp.apply_transpose(e_c),
        2 * rp.apply_transpose(e_c),
        2 * (e_g - e_c),
        pgrad,
    )


def _transh_grads(params, head, tail, corrupt_head, corrupt_tail, relation):
    w = params.normal
    z_g = head - tail
    z_c = corrupt_head - corrupt_tail
    e_g = z_g - (w @ z_g) * w + relation
    e_c = z_c - (w @ z_c) * w + relation

    def project(v):
        return v - (w @ v) * w

    d_w = -2.0 * ((e_g @ w) * z_g + (w @ z_g) * e_g) + 2.0 * (
        (e_c @ w) * z_c + (w @ z_c) * e_c
    )
    return KnowledgeGrads(
        0.0,
        True,
        2 * project(e_g),
        -2 * project(e_g),
        -2 * project(e_c),
        2 * project(e_c),
        2 * (e_g - e_c),
        TransHRelation(d_w),
    )


def _se_grads(params, head, tail, corrupt_head, corrupt_tail):
    L, R = params.head_matrix, params.tail_matrix
    s_g = np.sign(L @ head - R @ tail)
    s_c = np.sign(L @ corrupt_head - R @ corrupt_tail)
    return KnowledgeGrads(
        0.0,
        True,
        L.T @ s_g,
        -(R.T @ s_g),
        -(L.T @ s_c),
        R.T @ s_c,
        np.zeros_like(head),
        SERelation(
            np.outer(s_g, head) - np.outer(s_c, corrupt_head),
            -(np.outer(s_g, tail) - np.outer(s_c, corrupt_tail)),
        ),
    )


def _transr_grads(params, head, tail, corrupt_head, corrupt_tail, relation):
    M = params.matrix
    z_g = head - tail
    z_c = corrupt_head - corrupt_tail
    e_g = M @ z_g + relation
    e_c = M @ z_c + relation
    return KnowledgeGrads(
        0.0,
        True,
        2 * (M.T @ e_g),
        -2 * (M.T @ e_g),
        -2 * (M.T @ e_c),
        2 * (M.T @ e_c),
        2 * (e_g - e_c),
        TransRRelation(2.0 * (np.outer(e_g, z_g) - np.outer(e_c, z_c))),
    )


# ---------------------------------------------------------------------------
# Skip-gram negative-sampling loss
# ---------------------------------------------------------------------------


@dataclass
class SkipGramGrads:
    loss: float
    center: np.ndarray
    context: np.ndarray
    negatives: np.ndarray  # (k, d), aligned with the negative inputs


def skipgram_ns_loss_grad(
    center: np.ndarray,
    context_out: np.ndarray,
    negatives_out: np.ndarray,
) -> SkipGramGrads:
    """Negative-sampling loss -log s(o.c) - sum_neg log s(-n.c) and gradients.

    ``negatives_out`` is a (k, d) matrix, k >= 1.  Logits are clamped to
    +-LOGIT_CLAMP before the logistic.
    """
    negatives_out = np.atleast_2d(negatives_out)
    if negatives_out.shape[0] < 1:
        raise ValueError("at least one negative is required")

    x_pos = np.clip(context_out @ center, -LOGIT_CLAMP, LOGIT_CLAMP)
    x_neg = np.clip(negatives_out @ center, -LOGIT_CLAMP, LOGIT_CLAMP)
    s_pos = 1.0 / (1.0 + np.exp(-x_pos))
    s_neg = 1.0 / (1.0 + np.exp(-x_neg))

    loss = -np.log(s_pos) - np.log1p(-s_neg).sum()
    g_pos = s_pos - 1.0  # d loss / d x_pos
    d_context = g_pos * center
    d_negatives = s_neg[:, None] * center[None, :]
    d_center = g_pos * context_out + s_neg @ negatives_out
    return SkipGramGrads(float(loss), d_center, d_context, d_negatives)


# ---------------------------------------------------------------------------
# Embedding text export
# ---------------------------------------------------------------------------


def save_embeddings_text(
    tokens: Sequence[str], vectors: np.ndarray, path: str | Path
) -> None:
    """word2vec text format: '<n> <d>' header, then token + 6-significant-digit
    coordinates per line."""
    n, d = vectors.shape
    if n != len(tokens):
        raise ValueError("token/vector count mismatch")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{n} {d}\n")
        for tok, row in zip(tokens, vectors):
            fh.write(tok + " " + " ".join(f"{x:.6g}" for x in row) + "\n")


def load_embeddings_text(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Inverse of :func:`save_embeddings_text` (up to the 6-digit rounding)."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: malformed embedding header")
        n, d = int(header[0]), int(header[1])
        tokens: list[str] = []
        vectors = np.empty((n, d))
        for i in range(n):
            parts = fh.readline().split()
            if len(parts) != d + 1:
                raise ValueError(f"{path}: malformed embedding line {i + 2}")
            tokens.append(parts[0])
            vectors[i] = [float(x) for x in parts[1:]]
    return tokens, vectors
