import numpy as np
import pytest

from kgvec.cli import main
from kgvec.corpus import Vocabulary, build_vocabulary
from kgvec.evaluation import analogy_3cosadd
from kgvec.model import EmbeddingStore, LowRankRelation, ModelConfig, load_embeddings_text
from kgvec.projection import identity_projection
from kgvec.trainer import ModelState, TrainConfig, load_checkpoint, save_checkpoint


CORPUS = (
    "the king rules the old land and the queen rules the new land\n"
    "a king and a queen met a man and a woman in the old town\n"
    "paris is in france while london is in england\n"
    "the man walked to paris and the woman walked to london\n"
) * 12


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


@pytest.fixture
def corpus_file(tmp_path):
    return write(tmp_path / "corpus.txt", CORPUS)


@pytest.fixture
def triples_file(tmp_path):
    return write(
        tmp_path / "kg.tsv",
        "paris\tcapital_of\tfrance\n"
        "london\tcapital_of\tengland\n"
        "king\tgender_of\tman\n"
        "queen\tgender_of\twoman\n",
    )


class TestBuildVocab:
    def test_matches_library_oracle(self, tmp_path, corpus_file, capsys):
        out = tmp_path / "vocab.tsv"
        assert main(["build-vocab", "--corpus", corpus_file, "--min-count", "2",
                     "--output", str(out)]) == 0
        with open(corpus_file, encoding="utf-8") as fh:
            expected = build_vocabulary(fh, min_count=2)
        got = Vocabulary.load(out)
        assert got.tokens == expected.tokens
        assert got.counts.tolist() == expected.counts.tolist()

    def test_missing_corpus_names_path(self, tmp_path, capsys):
        missing = str(tmp_path / "nope.txt")
        rc = main(["build-vocab", "--corpus", missing, "--output", str(tmp_path / "v")])
        assert rc == 2
        assert missing in capsys.readouterr().err

    def test_min_count_one_keeps_all_non_digit_tokens(self, tmp_path, capsys):
        corpus = write(tmp_path / "c.txt", "alpha beta 42 gamma\n")
        out = tmp_path / "vocab.tsv"
        assert main(["build-vocab", "--corpus", corpus, "--min-count", "1",
                     "--output", str(out)]) == 0
        got = Vocabulary.load(out)
        assert sorted(got.tokens) == ["alpha", "beta", "gamma"]


class TestStats:
    def test_two_triple_fixture(self, tmp_path, capsys):
        path = write(tmp_path / "kg.tsv", "h1\tr\tt\nh2\tr\tt\n")
        assert main(["stats", "--triples", path]) == 0
        out = capsys.readouterr().out
        mean_row = [l for l in out.splitlines() if l.startswith("MEAN")][0]
        assert mean_row.split("\t") == ["MEAN", "1", "2"]

    def test_single_triple(self, tmp_path, capsys):
        path = write(tmp_path / "kg.tsv", "h\tr\tt\n")
        assert main(["stats", "--triples", path]) == 0
        out = capsys.readouterr().out
        assert "MEAN\t1\t1" in out
        assert "STD\t0\t0" in out

    def test_malformed_file_is_data_error(self, tmp_path, capsys):
        path = write(tmp_path / "kg.tsv", "not tab separated\n")
        assert main(["stats", "--triples", path]) == 2


class TestTrain:
    def test_defaults_recorded_in_report_header(self, tmp_path, corpus_file,
                                                 triples_file, capsys):
        ck = tmp_path / "model.kgv"
        rc = main(["train", "--corpus", corpus_file, "--triples", triples_file,
                   "--min-count", "1", "--checkpoint", str(ck)])
        assert rc == 0
        out = capsys.readouterr().out
        header = [l for l in out.splitlines() if l.startswith("#")]
        joined = "\n".join(header)
        assert "seed\t1" in joined
        assert "d\t100" in joined
        assert "lr\t0.025" in joined
        assert "gamma\t1.0" in joined
        state = load_checkpoint(ck)
        assert state.model_config.dim == 100

    def test_sg_variant_needs_no_triples(self, tmp_path, corpus_file, capsys):
        ck = tmp_path / "model.kgv"
        rc = main(["train", "--corpus", corpus_file, "--variant", "sg",
                   "--min-count", "1", "--dim", "16", "--checkpoint", str(ck),
                   "--report", str(tmp_path / "rep.tsv")])
        assert rc == 0
        state = load_checkpoint(ck)
        assert state.params == []
        assert state.train_config.alpha == 0.0

    def test_deterministic_repeat_runs_are_bitwise_identical(
        self, tmp_path, corpus_file, triples_file
    ):
        args = ["train", "--corpus", corpus_file, "--triples", triples_file,
                "--min-count", "1", "--dim", "12", "--head-rank", "4",
                "--tail-rank", "8", "--epochs", "2", "--report", "-"]
        ck1, ck2 = tmp_path / "a.kgv", tmp_path / "b.kgv"
        assert main(args + ["--checkpoint", str(ck1)]) == 0
        assert main(args + ["--checkpoint", str(ck2)]) == 0
        assert ck1.read_bytes() == ck2.read_bytes()

    def test_export_writes_text_embeddings(self, tmp_path, corpus_file,
                                           triples_file, capsys):
        ck = tmp_path / "model.kgv"
        vec = tmp_path / "vectors.txt"
        rc = main(["train", "--corpus", corpus_file, "--triples", triples_file,
                   "--min-count", "1", "--dim", "8", "--checkpoint", str(ck),
                   "--export", str(vec), "--report", str(tmp_path / "r.tsv")])
        assert rc == 0
        tokens, vectors = load_embeddings_text(vec)
        state = load_checkpoint(ck)
        assert tokens == state.vocab.tokens
        assert vectors.shape == (len(tokens), 8)

    def test_config_file_with_flag_override(self, tmp_path, corpus_file,
                                            triples_file, capsys):
        cfg = write(
            tmp_path / "run.cfg",
            "dim=12\nalpha=0.5\nepochs=1\nmin-count=1\n"
            f"corpus={corpus_file}\ntriples={triples_file}\n",
        )
        ck = tmp_path / "model.kgv"
        rc = main(["train", "--config", cfg, "--dim", "8",
                   "--checkpoint", str(ck), "--report", str(tmp_path / "r.tsv")])
        assert rc == 0
        state = load_checkpoint(ck)
        assert state.model_config.dim == 8  # flag beats file
        assert state.train_config.alpha == 0.5  # file beats default

    def test_alpha_validation_is_usage_error(self, tmp_path, corpus_file,
                                             triples_file, capsys):
        rc = main(["train", "--corpus", corpus_file, "--triples", triples_file,
                   "--alpha", "1.5", "--checkpoint", str(tmp_path / "x.kgv")])
        assert rc == 1

    def test_diverging_run_is_numeric_failure(self, tmp_path, corpus_file,
                                              triples_file, capsys):
        # an absurd learning rate blows the bilinear factors up to non-finite
        # scores; the finiteness guard must surface as exit code 3
        with np.errstate(all="ignore"):
            rc = main(["train", "--corpus", corpus_file, "--triples", triples_file,
                       "--min-count", "1", "--dim", "8", "--alpha", "0.9",
                       "--lr", "1e6", "--epochs", "1",
                       "--checkpoint", str(tmp_path / "x.kgv")])
        assert rc == 3


def perfect_analogy_state():
    """Hand-built state whose single relation maps each x_i exactly to y_i."""
    tokens = ["x1", "y1", "x2", "y2", "other"]
    vocab = Vocabulary(tokens, np.ones(len(tokens), dtype=np.int64))
    d = 2
    vectors = np.array(
        [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0], [-3.0, -3.0]]
    )
    store = EmbeddingStore(vectors, np.zeros_like(vectors), np.array([[0.0, 1.0]]))
    params = [LowRankRelation(identity_projection(d), identity_projection(d))]
    cfg = ModelConfig(variant="lowrank", dim=d, head_rank=d, tail_rank=d)
    return ModelState(cfg, TrainConfig(), vocab, ["maps"], store, params)


class TestEvalCommands:
    def test_perfect_analogy_fixture_scores_100(self, tmp_path, capsys):
        state = perfect_analogy_state()
        ck = tmp_path / "model.kgv"
        save_checkpoint(state, ck)
        questions = write(
            tmp_path / "q.txt", ": maps\nx1 y1 x2 y2\nx2 y2 x1 y1\n"
        )
        rc = main(["eval-analogy", "--checkpoint", str(ck),
                   "--questions", questions])
        assert rc == 0
        out = capsys.readouterr().out
        assert "TOTAL\t2\t1.0000" in out

    def test_3cosadd_mode_matches_library(self, tmp_path, capsys):
        state = perfect_analogy_state()
        ck = tmp_path / "model.kgv"
        save_checkpoint(state, ck)
        questions = write(tmp_path / "q.txt", "x1 y1 x2 y2\n")
        rc = main(["eval-analogy", "--checkpoint", str(ck),
                   "--questions", questions, "--mode", "3cosadd"])
        assert rc == 0
        out = capsys.readouterr().out
        want = analogy_3cosadd(
            "x1", "y1", "x2", state.vocab, state.store.input_vectors
        )
        expected = "1.0000" if want == "y2" else "0.0000"
        assert f"TOTAL\t1\t{expected}" in out

    def test_similarity_reversed_ordering_gives_minus_one(self, tmp_path, capsys):
        state = perfect_analogy_state()
        ck = tmp_path / "model.kgv"
        save_checkpoint(state, ck)
        # model cosines from y2: y1 0.707 > x1 0.0 > other -1.0;
        # the human scores rank them in exactly the opposite order
        pairs = write(
            tmp_path / "sim.tsv",
            "y2\ty1\t1.0\ny2\tx1\t5.0\ny2\tother\t9.0\n",
        )
        rc = main(["eval-similarity", "--checkpoint", str(ck), "--pairs", pairs])
        assert rc == 0
        out = capsys.readouterr().out
        assert out.strip().endswith("-1.0000")

    def test_missing_checkpoint_is_data_error(self, tmp_path, capsys):
        rc = main(["eval-analogy", "--checkpoint", str(tmp_path / "none.kgv"),
                   "--questions", str(tmp_path / "none.txt")])
        assert rc == 2


class TestRankSweepCommand:
    def test_two_by_two_grid(self, tmp_path, corpus_file, triples_file, capsys):
        questions = write(tmp_path / "q.txt", "paris france london england\n"
                                              "london england paris france\n")
        rc = main(["rank-sweep", "--corpus", corpus_file, "--triples", triples_file,
                   "--questions", questions, "--min-count", "1", "--dim", "8",
                   "--epochs", "1", "--head-ranks", "2,8", "--tail-ranks", "4,8"])
        assert rc == 0
        out = capsys.readouterr().out
        rows = [l for l in out.splitlines() if l and not l.startswith(("#", "head_rank"))]
        assert len(rows) == 4
        assert out.startswith("# kgvec rank sweep\n# seed\t1\n")


class TestExport:
    def test_round_trip(self, tmp_path, capsys):
        state = perfect_analogy_state()
        ck = tmp_path / "model.kgv"
        save_checkpoint(state, ck)
        out = tmp_path / "vectors.txt"
        assert main(["export", "--checkpoint", str(ck), "--output", str(out)]) == 0
        tokens, vectors = load_embeddings_text(out)
        assert tokens == state.vocab.tokens
        assert np.allclose(vectors, state.store.input_vectors, atol=1e-5)


class TestUsage:
    def test_unknown_flag_is_usage_error(self, capsys):
        assert main(["build-vocab", "--frobnicate"]) == 1

    def test_missing_subcommand_is_usage_error(self, capsys):
        assert main([]) == 1

    def test_help_lists_paper_defaults(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["train", "--help"])
        assert exc.value.code == 0
        text = " ".join(capsys.readouterr().out.split())
        assert "default: 100" in text  # embedding size
        assert "default: 0.025" in text  # learning rate
        assert "default: 1.0" in text  # margin
        assert "0.01,0.05,0.1,0.2,0.5" in text  # alpha grid

    def test_rank_sweep_help_shows_grid(self, capsys):
        with pytest.raises(SystemExit):
            main(["rank-sweep", "--help"])
        assert "10,20,30,40,50,60,70,80,90,95,100" in capsys.readouterr().out
