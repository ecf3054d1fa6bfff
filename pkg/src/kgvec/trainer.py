"""Joint SGD over the text and knowledge objectives.

Every micro-step flips a biased coin: with probability ``alpha`` it applies
one knowledge update (a golden triple against one corrupted triple under the
margin ranking loss), otherwise one text update (a (center, context) pair
against ``negatives`` sampled noise words).  ``alpha = 0`` is plain
skip-gram, ``alpha = 1`` trains the knowledge model alone.  The learning
rate decays linearly to a 1e-4 floor over the scheduled step budget.
"""

from __future__ import annotations

import json
import struct
import threading
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import (
    NegativeSampler,
    Vocabulary,
    build_negative_table,
    context_pair_arrays,
    _subsample_ids,
)
from .errors import CheckpointError, ConfigError, NumericError
from .kg import TripleSet, corrupt_triple
from .model import (
    EmbeddingStore,
    KnowledgeGrads,
    LowRankRelation,
    ModelConfig,
    RelationParams,
    SERelation,
    TransHRelation,
    TransRRelation,
    init_relation_params,
    knowledge_loss_grad,
    skipgram_ns_loss_grad,
)
from .projection import LowRankProjection

LR_FLOOR = 1e-4

CHECKPOINT_MAGIC = b"KGVECBIN"
CHECKPOINT_VERSION = 1


@dataclass
class TrainConfig:
    """Training hyperparameters.

    ``alpha`` is the knowledge share of the joint objective: the probability
    that a micro-step updates the knowledge model instead of the text model.
    """

    alpha: float = 0.2
    initial_lr: float = 0.025
    epochs: int = 1
    window: int = 5
    seed: int = 1
    workers: int = 1
    deterministic: bool = True
    subsample: float = 0.0
    power: float = 0.75
    table_size: int = 1_000_000
    use_float32: bool = False
    corrupt_mode: str = "uniform-either"

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.initial_lr <= 0:
            raise ConfigError("initial_lr must be > 0")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.window < 1:
            raise ConfigError("window must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.corrupt_mode not in ("head", "tail", "uniform-either"):
            raise ConfigError(
                "corrupt_mode must be head, tail, or uniform-either for "
                "training (relation corruption is only a corrupt_triple option)"
            )


@dataclass
class EpochStats:
    epoch: int
    text_loss: float
    kg_loss: float
    combined_loss: float
    text_steps: int
    kg_steps: int
    seconds: float


@dataclass
class TrainReport:
    """Per-epoch mean losses and step counts."""

    alpha: float
    rows: list[EpochStats] = field(default_factory=list)

    @property
    def first_combined(self) -> float:
        return self.rows[0].combined_loss

    @property
    def final_combined(self) -> float:
        return self.rows[-1].combined_loss

    def to_tsv(self) -> str:
        lines = ["epoch\ttext_loss\tkg_loss\tcombined_loss\ttext_steps\tkg_steps\tseconds"]
        for r in self.rows:
            lines.append(
                f"{r.epoch}\t{r.text_loss:.6g}\t{r.kg_loss:.6g}"
                f"\t{r.combined_loss:.6g}\t{r.text_steps}\t{r.kg_steps}"
                f"\t{r.seconds:.3f}"
            )
        return "\n".join(lines) + "\n"


@dataclass
class ModelState:
    """Everything needed to resume, evaluate, or export a trained model."""

    model_config: ModelConfig
    train_config: TrainConfig
    vocab: Vocabulary
    relation_names: list[str]
    store: EmbeddingStore
    params: list[RelationParams]


def lr_at(step: int, total_steps: int, initial_lr: float) -> float:
    """Linear decay from initial_lr to its 1e-4 floor over total_steps."""
    if not 0 <= step <= total_steps:
        raise ValueError("step must lie in [0, total_steps]")
    if total_steps == 0:
        return initial_lr
    return initial_lr * max(1.0 - step / total_steps, LR_FLOOR)


def init_state(
    vocab: Vocabulary,
    relation_names: Sequence[str],
    model_config: ModelConfig,
    train_config: TrainConfig,
) -> ModelState:
    """Deterministic parameter initialization for a given seed.

    ``train`` starts from exactly this state, so a run with ``alpha = 0``
    leaves the knowledge parameters bitwise equal to what this returns.
    """
    root = np.random.SeedSequence(train_config.seed)
    init_seed = root.spawn(1)[0]
    rng = np.random.default_rng(init_seed)
    dtype = np.float32 if train_config.use_float32 else np.float64
    store = EmbeddingStore.init(
        len(vocab), len(relation_names), model_config.dim, rng, dtype
    )
    params = init_relation_params(model_config, len(relation_names), rng)
    return ModelState(
        model_config, train_config, vocab, list(relation_names), store, params
    )


def train(
    tokens: Sequence[str] | None,
    vocab: Vocabulary,
    triples: TripleSet | None,
    model_config: ModelConfig,
    train_config: TrainConfig,
) -> tuple[ModelState, TrainReport]:
    """Run the joint objective and return the trained state plus a report.

    ``tokens`` is the phrase-merged token stream (may be None/empty when
    ``alpha == 1``); ``triples`` may be None when ``alpha == 0``.  The step
    budget is ``epochs`` times the number of context pairs, falling back to
    ``epochs * len(triples)`` for corpus-free knowledge-only runs.
    """
    mc, tc = model_config, train_config
    use_text = tc.alpha < 1.0
    use_kg = tc.alpha > 0.0
    if mc.variant == "sg" and use_kg:
        raise ConfigError("variant 'sg' is text-only and requires alpha == 0")

    root = np.random.SeedSequence(tc.seed)
    # Child 0 is reserved for init_state so the layout is stable.
    _, stream_seed, *worker_seeds = root.spawn(2 + max(1, tc.workers))

    state = init_state(
        vocab, triples.relation_names if triples is not None else [], mc, tc
    )
    store = state.store

    ids = vocab.encode(tokens) if tokens is not None else np.empty(0, dtype=np.int64)
    if tc.subsample > 0.0:
        ids = _subsample_ids(ids, vocab, tc.subsample, np.random.default_rng(stream_seed))
    centers, contexts = context_pair_arrays(ids, tc.window)
    n_pairs = len(centers)
    if use_text and n_pairs == 0:
        raise ConfigError("alpha < 1 needs a corpus that yields context pairs")

    if use_kg:
        if triples is None or len(triples) == 0:
            raise ConfigError("alpha > 0 needs a non-empty triple set")
        missing = [n for n in triples.entity_names if n not in vocab]
        if missing:
            raise ConfigError(
                f"vocabulary does not cover {len(missing)} triple entities "
                f"(first: {missing[0]!r})"
            )
    entity_rows = (
        np.asarray([vocab.index[n] for n in triples.entity_names], dtype=np.int64)
        if triples is not None and len(triples)
        else np.empty(0, dtype=np.int64)
    )

    sampler = build_negative_table(vocab, tc.power, tc.table_size) if use_text else None

    steps_per_epoch = n_pairs if n_pairs > 0 else len(triples)
    total_steps = tc.epochs * steps_per_epoch
    n_workers = 1 if tc.deterministic else max(1, tc.workers)

    workers = [
        _Worker(
            worker_id=w,
            n_workers=n_workers,
            rng=np.random.default_rng(worker_seeds[w]),
            state=state,
            sampler=sampler,
            centers=centers,
            contexts=contexts,
            triples=triples,
            entity_rows=entity_rows,
            total_steps=total_steps,
        )
        for w in range(n_workers)
    ]

    report = TrainReport(alpha=tc.alpha)
    done = 0
    for epoch in range(tc.epochs):
        started = time.perf_counter()
        shares = _split(steps_per_epoch, n_workers)
        if n_workers == 1:
            workers[0].run(done, shares[0])
        else:
            threads = [
                threading.Thread(target=wk.run, args=(done, cnt))
                for wk, cnt in zip(workers, shares)
            ]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
        done += steps_per_epoch

        text_steps = sum(w.text_steps for w in workers)
        kg_steps = sum(w.kg_steps for w in workers)
        text_loss = sum(w.text_loss for w in workers) / max(text_steps, 1)
        kg_loss = sum(w.kg_loss for w in workers) / max(kg_steps, 1)
        combined = (1.0 - tc.alpha) * text_loss + tc.alpha * kg_loss
        report.rows.append(
            EpochStats(
                epoch,
                text_loss,
                kg_loss,
                combined,
                text_steps,
                kg_steps,
                time.perf_counter() - started,
            )
        )
        for w in workers:
            w.reset_epoch()
        store.check_finite()
        _check_params_finite(state.params)

    return state, report


def _split(total: int, parts: int) -> list[int]:
    base, rem = divmod(total, parts)
    return [base + (1 if i < rem else 0) for i in range(parts)]


class _Worker:
    """One SGD stream over the shared parameter arrays.

    With several workers the updates are unsynchronized (lost updates are
    tolerated); the single-worker path is exactly reproducible.
    """

    def __init__(
        self,
        worker_id: int,
        n_workers: int,
        rng: np.random.Generator,
        state: ModelState,
        sampler: NegativeSampler | None,
        centers: np.ndarray,
        contexts: np.ndarray,
        triples: TripleSet | None,
        entity_rows: np.ndarray,
        total_steps: int,
    ):
        self.rng = rng
        self.state = state
        self.sampler = sampler
        self.centers = centers
        self.contexts = contexts
        self.triples = triples
        self.entity_rows = entity_rows
        self.total_steps = total_steps
        self.worker_id = worker_id
        self.n_workers = n_workers
        self.alpha = state.train_config.alpha
        self.negatives = state.model_config.negatives
        self.lr0 = state.train_config.initial_lr
        self.corrupt_mode = state.train_config.corrupt_mode
        n_pairs = len(centers)
        self.text_cursor = (worker_id * n_pairs) // n_workers if n_pairs else 0
        self.kg_order = np.empty(0, dtype=np.int64)
        self.kg_cursor = 0
        self.reset_epoch()

    def reset_epoch(self) -> None:
        self.text_loss = 0.0
        self.kg_loss = 0.0
        self.text_steps = 0
        self.kg_steps = 0

    def run(self, step_base: int, n_steps: int) -> None:
        rng = self.rng
        alpha = self.alpha
        use_text = alpha < 1.0 and len(self.centers) > 0
        use_kg = alpha > 0.0
        lr0, total = self.lr0, self.total_steps
        stride = self.n_workers
        base = step_base + self.worker_id
        for i in range(n_steps):
            frac = (base + i * stride) / total
            lr = lr0 * max(1.0 - frac, LR_FLOOR)
            if use_kg and (not use_text or rng.random() < alpha):
                self._kg_step(lr)
            else:
                self._text_step(lr)

    # -- one text micro-step ------------------------------------------------
    def _text_step(self, lr: float) -> None:
        store = self.state.store
        i = self.text_cursor
        self.text_cursor = i + 1 if i + 1 < len(self.centers) else 0
        center = self.centers[i]
        context = self.contexts[i]
        table = self.sampler.table
        negs = table[self.rng.integers(0, len(table), size=self.negatives)]

        g = skipgram_ns_loss_grad(
            store.input_vectors[center],
            store.output_vectors[context],
            store.output_vectors[negs],
        )
        store.output_vectors[context] -= lr * g.context
        np.subtract.at(store.output_vectors, negs, lr * g.negatives)
        store.input_vectors[center] -= lr * g.center
        self.text_loss += g.loss
        self.text_steps += 1

    # -- one knowledge micro-step -------------------------------------------
    def _kg_step(self, lr: float) -> None:
        if self.kg_cursor >= len(self.kg_order):
            self.kg_order = self.rng.permutation(len(self.triples))
            self.kg_cursor = 0
        h, r, t = self.triples.triples[self.kg_order[self.kg_cursor]]
        self.kg_cursor += 1
        ch, _, ct = corrupt_triple(
            (h, r, t), self.triples, self.corrupt_mode, self.rng
        )

        store = self.state.store
        rows = self.entity_rows
        hr, tr = rows[h], rows[t]
        chr_, ctr = rows[ch], rows[ct]
        params = self.state.params[r]
        g = knowledge_loss_grad(
            self.state.model_config,
            params,
            store.input_vectors[hr],
            store.input_vectors[tr],
            store.input_vectors[chr_],
            store.input_vectors[ctr],
            store.relation_vectors[r],
        )
        self.kg_loss += g.loss
        self.kg_steps += 1
        if not g.active:
            return
        # Rows may coincide (one slot is shared with the golden triple);
        # sequential in-place updates accumulate correctly.
        store.input_vectors[hr] -= lr * g.head
        store.input_vectors[tr] -= lr * g.tail
        store.input_vectors[chr_] -= lr * g.corrupt_head
        store.input_vectors[ctr] -= lr * g.corrupt_tail
        store.relation_vectors[r] -= lr * g.relation
        _apply_param_update(params, g, lr)


def _apply_param_update(params: RelationParams, g: KnowledgeGrads, lr: float) -> None:
    if isinstance(params, LowRankRelation):
        for proj, grad in (
            (params.head_proj, g.params.head_proj),
            (params.tail_proj, g.params.tail_proj),
        ):
            proj.weights -= lr * grad.weights
            proj.out_factors -= lr * grad.out_factors
            proj.in_factors -= lr * grad.in_factors
    elif isinstance(params, TransHRelation):
        params.normal -= lr * g.params.normal
        params.renormalize()
    elif isinstance(params, SERelation):
        params.head_matrix -= lr * g.params.head_matrix
        params.tail_matrix -= lr * g.params.tail_matrix
    elif isinstance(params, TransRRelation):
        params.matrix -= lr * g.params.matrix


def _check_params_finite(params: list[RelationParams]) -> None:
    for i, p in enumerate(params):
        arrays: tuple[np.ndarray, ...]
        if isinstance(p, LowRankRelation):
            arrays = (
                p.head_proj.weights,
                p.head_proj.out_factors,
                p.head_proj.in_factors,
                p.tail_proj.weights,
                p.tail_proj.out_factors,
                p.tail_proj.in_factors,
            )
        elif isinstance(p, TransHRelation):
            arrays = (p.normal,)
        elif isinstance(p, SERelation):
            arrays = (p.head_matrix, p.tail_matrix)
        elif isinstance(p, TransRRelation):
            arrays = (p.matrix,)
        else:
            continue
        for a in arrays:
            if not np.all(np.isfinite(a)):
                raise NumericError(f"non-finite relation parameters (relation {i})")


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------


def _state_arrays(state: ModelState) -> list[tuple[str, np.ndarray]]:
    out = [
        ("input", state.store.input_vectors),
        ("output", state.store.output_vectors),
        ("relations", state.store.relation_vectors),
    ]
    for i, p in enumerate(state.params):
        if isinstance(p, LowRankRelation):
            out += [
                (f"rel{i}.head.weights", p.head_proj.weights),
                (f"rel{i}.head.out", p.head_proj.out_factors),
                (f"rel{i}.head.in", p.head_proj.in_factors),
                (f"rel{i}.tail.weights", p.tail_proj.weights),
                (f"rel{i}.tail.out", p.tail_proj.out_factors),
                (f"rel{i}.tail.in", p.tail_proj.in_factors),
            ]
        elif isinstance(p, TransHRelation):
            out.append((f"rel{i}.normal", p.normal))
        elif isinstance(p, SERelation):
            out += [
                (f"rel{i}.head_matrix", p.head_matrix),
                (f"rel{i}.tail_matrix", p.tail_matrix),
            ]
        elif isinstance(p, TransRRelation):
            out.append((f"rel{i}.matrix", p.matrix))
    return out


def save_checkpoint(state: ModelState, path: str | Path) -> None:
    """Binary dump of the full model state; load_checkpoint restores it
    bitwise."""
    arrays = _state_arrays(state)
    header = {
        "model": asdict(state.model_config),
        "train": asdict(state.train_config),
        "vocab": {
            "tokens": state.vocab.tokens,
            "counts": state.vocab.counts.tolist(),
            "min_count": state.vocab.min_count,
            "lexicon": sorted(state.vocab.phrase_lexicon),
        },
        "relations": state.relation_names,
        "arrays": [
            {"name": n, "dtype": a.dtype.str, "shape": list(a.shape)}
            for n, a in arrays
        ],
    }
    blob = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(blob)))
        fh.write(blob)
        for _, a in arrays:
            fh.write(np.ascontiguousarray(a).tobytes())


def load_checkpoint(path: str | Path) -> ModelState:
    with open(path, "rb") as fh:
        magic = fh.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise CheckpointError(f"{path}: not a kgvec checkpoint")
        head = fh.read(8)
        if len(head) != 8:
            raise CheckpointError(f"{path}: truncated checkpoint header")
        version, blob_len = struct.unpack("<II", head)
        if version != CHECKPOINT_VERSION:
            raise CheckpointError(
                f"{path}: unsupported checkpoint version {version}"
            )
        blob = fh.read(blob_len)
        if len(blob) != blob_len:
            raise CheckpointError(f"{path}: truncated checkpoint header")
        try:
            header = json.loads(blob.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CheckpointError(f"{path}: corrupt checkpoint header") from exc

        arrays: dict[str, np.ndarray] = {}
        for spec in header["arrays"]:
            dtype = np.dtype(spec["dtype"])
            shape = tuple(spec["shape"])
            nbytes = dtype.itemsize * int(np.prod(shape)) if shape else dtype.itemsize
            raw = fh.read(nbytes)
            if len(raw) != nbytes:
                raise CheckpointError(
                    f"{path}: truncated checkpoint (array {spec['name']})"
                )
            arrays[spec["name"]] = (
                np.frombuffer(raw, dtype=dtype).reshape(shape).copy()
            )

    model_config = ModelConfig(**header["model"])
    train_config = TrainConfig(**header["train"])
    v = header["vocab"]
    vocab = Vocabulary(
        v["tokens"],
        np.asarray(v["counts"], dtype=np.int64),
        v["min_count"],
        frozenset(v["lexicon"]),
    )
    relation_names = list(header["relations"])

    store = EmbeddingStore(arrays["input"], arrays["output"], arrays["relations"])
    params: list[RelationParams] = []
    for i in range(len(relation_names)):
        if model_config.variant == "lowrank":
            params.append(
                LowRankRelation(
                    LowRankProjection(
                        arrays[f"rel{i}.head.weights"],
                        arrays[f"rel{i}.head.out"],
                        arrays[f"rel{i}.head.in"],
                    ),
                    LowRankProjection(
                        arrays[f"rel{i}.tail.weights"],
                        arrays[f"rel{i}.tail.out"],
                        arrays[f"rel{i}.tail.in"],
                    ),
                )
            )
        elif model_config.variant == "transh":
            params.append(TransHRelation(arrays[f"rel{i}.normal"]))
        elif model_config.variant == "se":
            params.append(
                SERelation(arrays[f"rel{i}.head_matrix"], arrays[f"rel{i}.tail_matrix"])
            )
        elif model_config.variant == "transr":
            params.append(TransRRelation(arrays[f"rel{i}.matrix"]))
        elif model_config.variant == "transe":
            params.append(None)
    if model_config.variant == "sg":
        params = []
    return ModelState(model_config, train_config, vocab, relation_names, store, params)
