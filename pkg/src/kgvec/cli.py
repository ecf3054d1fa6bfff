"""Command-line pipeline: vocabulary, KG stats, training, evaluation, export.

Exit codes: 0 success, 1 usage/configuration error, 2 data error,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import evaluation
from .corpus import (
    Vocabulary,
    build_vocabulary,
    load_phrase_lexicon,
    merge_phrases,
    tokenize,
)
from .errors import (
    CheckpointError,
    ConfigError,
    CorruptionExhaustedError,
    DegenerateDistributionError,
    EmptyCorpusError,
    EmptyKGError,
    NumericError,
    ParseError,
    UndefinedCorrelationError,
)
from .kg import compute_mapping_stats, load_triples
from .model import ModelConfig, VARIANTS, save_embeddings_text
from .trainer import TrainConfig, load_checkpoint, save_checkpoint, train

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

_DATA_ERRORS = (
    OSError,
    ParseError,
    EmptyCorpusError,
    EmptyKGError,
    CheckpointError,
    CorruptionExhaustedError,
    DegenerateDistributionError,
    UndefinedCorrelationError,
    UnicodeDecodeError,
)

# Paper-default sweep grid for the rank experiment.
DEFAULT_RANK_GRID = "10,20,30,40,50,60,70,80,90,95,100"
DEFAULT_ALPHA_GRID = "0.01,0.05,0.1,0.2,0.5"

_MODEL_DEFAULTS = ModelConfig()
_TRAIN_DEFAULTS = TrainConfig()


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit 1 instead of argparse's 2
        raise _UsageError(f"{self.prog}: {message}")


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (_UsageError, ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def _build_parser() -> _Parser:
    parser = _Parser(prog="kgvec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-vocab", help="build a vocabulary file from a corpus")
    p.add_argument("--corpus", required=True, help="UTF-8 text corpus")
    p.add_argument("--lexicon", help="phrase lexicon, one entity name per line")
    p.add_argument(
        "--min-count", type=int, default=5, help="frequency threshold (default: 5)"
    )
    p.add_argument("--output", required=True, help="vocabulary file to write")
    p.set_defaults(func=cmd_build_vocab)

    p = sub.add_parser("stats", help="per-relation mapping-cardinality statistics")
    p.add_argument("--triples", required=True, help="head<TAB>relation<TAB>tail TSV")
    p.add_argument("--vocab", help="optional vocabulary file used as entity filter")
    p.add_argument("--output", default="-", help="output TSV (default: stdout)")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train", help="jointly train text and knowledge objectives")
    _add_train_flags(p)
    p.add_argument("--checkpoint", required=True, help="binary checkpoint to write")
    p.add_argument("--export", help="also write embeddings in word2vec text format")
    p.add_argument("--report", default="-", help="per-epoch TSV report (default: stdout)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval-analogy", help="analogical reasoning accuracy")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--questions", required=True, help="word2vec questions file")
    p.add_argument(
        "--mode",
        choices=("relational", "3cosadd"),
        default="relational",
        help="two-step relational inference or plain vector offset "
        "(default: relational; falls back to 3cosadd when the model "
        "has no relation projections)",
    )
    p.add_argument("--output", default="-")
    p.set_defaults(func=cmd_eval_analogy)

    p = sub.add_parser("eval-similarity", help="Spearman rho on a similarity file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--pairs", required=True, help="word1<TAB>word2<TAB>score file")
    p.add_argument("--dataset", default="similarity", help="label for the report row")
    p.add_argument("--output", default="-")
    p.set_defaults(func=cmd_eval_similarity)

    p = sub.add_parser("rank-sweep", help="accuracy grid over projection ranks")
    _add_train_flags(p)
    p.add_argument("--questions", required=True)
    p.add_argument(
        "--head-ranks",
        default=DEFAULT_RANK_GRID,
        help=f"comma list of head ranks (default: {DEFAULT_RANK_GRID})",
    )
    p.add_argument(
        "--tail-ranks",
        default=DEFAULT_RANK_GRID,
        help=f"comma list of tail ranks (default: {DEFAULT_RANK_GRID})",
    )
    p.add_argument("--output", default="-")
    p.set_defaults(func=cmd_rank_sweep)

    p = sub.add_parser("export", help="write checkpoint embeddings as text")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_export)
    return parser


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    """Flags shared by train and rank-sweep.

    Value resolution is flags > config file > defaults, so every flag's
    argparse default is None and the real default shows in the help text.
    """
    md, td = _MODEL_DEFAULTS, _TRAIN_DEFAULTS
    p.add_argument("--config", help="key=value configuration file")
    p.add_argument("--corpus", help="UTF-8 text corpus (required unless alpha=1)")
    p.add_argument("--triples", help="triple TSV (required unless alpha=0)")
    p.add_argument("--vocab", help="vocabulary file; built from corpus if omitted")
    p.add_argument("--lexicon", help="phrase lexicon file")
    p.add_argument(
        "--min-count",
        type=int,
        default=None,
        help="vocabulary threshold when building from the corpus (default: 5)",
    )
    p.add_argument(
        "--variant",
        choices=VARIANTS,
        default=None,
        help=f"knowledge model variant; 'sg' is text-only (default: {md.variant})",
    )
    p.add_argument("--dim", type=int, default=None, help=f"embedding size d (default: {md.dim})")
    p.add_argument(
        "--head-rank", type=int, default=None,
        help=f"rank bound of the head projection (default: {md.head_rank})",
    )
    p.add_argument(
        "--tail-rank", type=int, default=None,
        help=f"rank bound of the tail projection (default: {md.tail_rank})",
    )
    p.add_argument(
        "--negatives", type=int, default=None,
        help=f"noise words per text update (default: {md.negatives})",
    )
    p.add_argument(
        "--margin", type=float, default=None,
        help=f"ranking-loss margin gamma (default: {md.margin})",
    )
    p.add_argument(
        "--alpha", type=float, default=None,
        help="knowledge share of the joint objective in [0,1]; 0 is plain "
        f"skip-gram (default: {td.alpha}; paper grid {DEFAULT_ALPHA_GRID})",
    )
    p.add_argument(
        "--lr", type=float, default=None,
        help=f"initial learning rate, decays linearly (default: {td.initial_lr})",
    )
    p.add_argument("--epochs", type=int, default=None, help=f"(default: {td.epochs})")
    p.add_argument(
        "--window", type=int, default=None,
        help=f"context window radius (default: {td.window})",
    )
    p.add_argument("--seed", type=int, default=None, help=f"(default: {td.seed})")
    p.add_argument("--workers", type=int, default=None, help=f"(default: {td.workers})")
    p.add_argument(
        "--deterministic", choices=("true", "false"), default=None,
        help=f"serialize updates for bitwise-reproducible runs (default: {str(td.deterministic).lower()})",
    )
    p.add_argument(
        "--subsample", type=float, default=None,
        help=f"frequent-word subsampling rate, 0 disables (default: {td.subsample})",
    )
    p.add_argument(
        "--float32", choices=("true", "false"), default=None,
        help=f"train in 32-bit floats (default: {str(td.use_float32).lower()})",
    )


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(f"{path}: line {lineno}: expected key=value")
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    return values


def _resolve(args, cfg: dict[str, str], key: str, cast, default):
    flag = getattr(args, key.replace("-", "_"), None)
    if flag is not None:
        return cast(flag) if isinstance(flag, str) else flag
    if key in cfg:
        return cast(cfg[key])
    return default


def _parse_bool(text: str) -> bool:
    if text.lower() in ("true", "1", "yes"):
        return True
    if text.lower() in ("false", "0", "no"):
        return False
    raise ValueError(f"expected true/false, got {text!r}")


def _build_configs(args) -> tuple[ModelConfig, TrainConfig, dict[str, str]]:
    cfg = _read_config_file(args.config) if args.config else {}
    md, td = _MODEL_DEFAULTS, _TRAIN_DEFAULTS
    dim = _resolve(args, cfg, "dim", int, md.dim)
    # Rank defaults keep the reference d=100 proportions (50/100 and 90/100)
    # when the user picks another dimension without pinning the ranks.
    model = ModelConfig(
        variant=_resolve(args, cfg, "variant", str, md.variant),
        dim=dim,
        head_rank=_resolve(args, cfg, "head-rank", int, max(1, dim // 2)),
        tail_rank=_resolve(args, cfg, "tail-rank", int, max(1, (dim * 9) // 10)),
        negatives=_resolve(args, cfg, "negatives", int, md.negatives),
        margin=_resolve(args, cfg, "margin", float, md.margin),
    )
    # sg defaults to a pure-text run; an explicit contradictory --alpha still
    # reaches TrainConfig/train and fails loudly there.
    alpha_default = 0.0 if model.variant == "sg" else td.alpha
    alpha = _resolve(args, cfg, "alpha", float, alpha_default)
    tcfg = TrainConfig(
        alpha=alpha,
        initial_lr=_resolve(args, cfg, "lr", float, td.initial_lr),
        epochs=_resolve(args, cfg, "epochs", int, td.epochs),
        window=_resolve(args, cfg, "window", int, td.window),
        seed=_resolve(args, cfg, "seed", int, td.seed),
        workers=_resolve(args, cfg, "workers", int, td.workers),
        deterministic=_resolve(args, cfg, "deterministic", _parse_bool, td.deterministic),
        subsample=_resolve(args, cfg, "subsample", float, td.subsample),
        use_float32=_resolve(args, cfg, "float32", _parse_bool, td.use_float32),
    )
    return model, tcfg, cfg


def _load_inputs(args, cfg, train_config):
    """Read corpus/lexicon/vocab/triples per the resolved configuration."""
    corpus_path = _resolve(args, cfg, "corpus", str, None)
    triples_path = _resolve(args, cfg, "triples", str, None)
    vocab_path = _resolve(args, cfg, "vocab", str, None)
    lexicon_path = _resolve(args, cfg, "lexicon", str, None)
    min_count = _resolve(args, cfg, "min-count", int, 5)

    need_text = train_config.alpha < 1.0
    need_kg = train_config.alpha > 0.0
    if need_text and corpus_path is None:
        raise ConfigError("--corpus is required when alpha < 1")
    if need_kg and triples_path is None:
        raise ConfigError("--triples is required when alpha > 0")

    lexicon = load_phrase_lexicon(lexicon_path) if lexicon_path else []
    if vocab_path:
        vocab = Vocabulary.load(vocab_path)
        if not lexicon:
            lexicon = [tuple(t.split("_")) for t in sorted(vocab.phrase_lexicon)]
    elif corpus_path:
        with open(corpus_path, encoding="utf-8") as fh:
            vocab = build_vocabulary(fh, min_count, lexicon)
    else:
        raise ConfigError("need --vocab or --corpus to define the vocabulary")

    tokens: list[str] = []
    if corpus_path:
        with open(corpus_path, encoding="utf-8") as fh:
            for line in fh:
                tokens.extend(merge_phrases(tokenize(line), lexicon))

    triples = load_triples(triples_path, vocab) if triples_path else None
    return tokens, vocab, triples


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_build_vocab(args) -> int:
    lexicon = load_phrase_lexicon(args.lexicon) if args.lexicon else []
    with open(args.corpus, encoding="utf-8") as fh:
        vocab = build_vocabulary(fh, args.min_count, lexicon)
    vocab.save(args.output)
    print(f"wrote {len(vocab)} tokens to {args.output}")
    return EXIT_OK


def cmd_stats(args) -> int:
    vocab = Vocabulary.load(args.vocab) if args.vocab else None
    triples = load_triples(args.triples, vocab)
    stats = compute_mapping_stats(triples)
    _write_text(args.output, stats.to_tsv())
    return EXIT_OK


def cmd_train(args) -> int:
    model_config, train_config, cfg = _build_configs(args)
    tokens, vocab, triples = _load_inputs(args, cfg, train_config)
    state, report = train(tokens, vocab, triples, model_config, train_config)
    save_checkpoint(state, args.checkpoint)
    if args.export:
        save_embeddings_text(vocab.tokens, state.store.input_vectors, args.export)
    header = (
        "# kgvec train report\n"
        f"# seed\t{train_config.seed}\n"
        f"# variant\t{model_config.variant}\td\t{model_config.dim}"
        f"\tlr\t{train_config.initial_lr}\tgamma\t{model_config.margin}"
        f"\talpha\t{train_config.alpha}\n"
    )
    _write_text(args.report, header + report.to_tsv())
    return EXIT_OK


def cmd_eval_analogy(args) -> int:
    state = load_checkpoint(args.checkpoint)
    questions = evaluation.load_analogy_questions(args.questions)
    predict = evaluation.make_analogy_predictor(state, args.mode)
    report = evaluation.run_analogy_suite(questions, predict, state.vocab)
    _write_text(args.output, report.to_tsv())
    return EXIT_OK


def cmd_eval_similarity(args) -> int:
    state = load_checkpoint(args.checkpoint)
    pairs = evaluation.load_similarity_pairs(args.pairs)
    report = evaluation.run_similarity_suite(
        pairs, state.vocab, state.store.input_vectors, args.dataset
    )
    _write_text(args.output, report.to_tsv())
    return EXIT_OK


def _parse_grid(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ValueError(f"bad rank grid {text!r}; expected comma-separated ints") from None


def cmd_rank_sweep(args) -> int:
    model_config, train_config, cfg = _build_configs(args)
    tokens, vocab, triples = _load_inputs(args, cfg, train_config)
    if triples is None:
        raise ConfigError("rank-sweep requires --triples")
    questions = evaluation.load_analogy_questions(args.questions)
    rows = evaluation.rank_sweep(
        tokens,
        vocab,
        triples,
        questions,
        model_config,
        train_config,
        _parse_grid(args.head_ranks),
        _parse_grid(args.tail_ranks),
    )
    header = f"# kgvec rank sweep\n# seed\t{train_config.seed}\n"
    _write_text(args.output, header + evaluation.sweep_to_tsv(rows))
    return EXIT_OK


def cmd_export(args) -> int:
    state = load_checkpoint(args.checkpoint)
    save_embeddings_text(state.vocab.tokens, state.store.input_vectors, args.output)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
