import numpy as np
import pytest

from gradcheck import assert_grad_matches, param_grad_pairs, random_relation_params
from kgvec.errors import NumericError
from kgvec.model import (
    EmbeddingStore,
    LowRankRelation,
    ModelConfig,
    SERelation,
    TransHRelation,
    TransRRelation,
    init_relation_params,
    knowledge_loss_grad,
    load_embeddings_text,
    save_embeddings_text,
    score_triple,
    skipgram_ns_loss_grad,
)
from kgvec.projection import LowRankProjection, identity_projection


class TestModelConfig:
    def test_rank_bounds_validated(self):
        with pytest.raises(ValueError):
            ModelConfig(variant="lowrank", dim=4, head_rank=5, tail_rank=2)

    def test_margin_positive(self):
        with pytest.raises(ValueError):
            ModelConfig(margin=0.0)

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            ModelConfig(variant="transz")


class TestScoreTriple:
    def test_lowrank_exact_translation_scores_zero(self):
        d = 4
        cfg = ModelConfig(variant="lowrank", dim=d, head_rank=d, tail_rank=d)
        params = LowRankRelation(identity_projection(d), identity_projection(d))
        h = np.array([1.0, 2.0, 0.0, -1.0])
        r = np.array([0.5, 0.0, 1.0, 0.0])
        assert score_triple(cfg, params, h, r, h + r) == 0.0

    def test_translation_hand_value(self):
        cfg = ModelConfig(variant="transe", dim=2)
        h = np.array([1.0, 0.0])
        r = np.array([0.0, 1.0])
        t = np.array([0.0, 0.0])
        assert score_triple(cfg, None, h, r, t) == 2.0

    def test_transh_hand_projection(self):
        cfg = ModelConfig(variant="transh", dim=2)
        params = TransHRelation(np.array([1.0, 0.0]))
        h = np.array([3.0, 1.0])
        t = np.array([5.0, 1.0])
        r = np.zeros(2)
        assert score_triple(cfg, params, h, r, t) == 0.0

    def test_se_l1_norm_no_relation_term(self):
        cfg = ModelConfig(variant="se", dim=2)
        params = SERelation(np.eye(2), np.eye(2))
        h = np.array([1.0, -2.0])
        t = np.array([0.0, 1.0])
        # relation vector must not matter
        for r in (np.zeros(2), np.array([100.0, -3.0])):
            assert score_triple(cfg, params, h, r, t) == 4.0

    def test_transr_shared_matrix(self):
        cfg = ModelConfig(variant="transr", dim=2)
        params = TransRRelation(np.array([[2.0, 0.0], [0.0, 0.0]]))
        h = np.array([1.0, 5.0])
        t = np.array([0.0, -3.0])
        r = np.array([-2.0, 1.0])
        # M(h - t) + r = (2, 0) + (-2, 1) = (0, 1)
        assert score_triple(cfg, params, h, r, t) == 1.0

    def test_non_finite_input_raises(self):
        cfg = ModelConfig(variant="transe", dim=2)
        with pytest.raises(NumericError):
            score_triple(cfg, None, np.array([np.nan, 0.0]), np.zeros(2), np.zeros(2))


class TestSpecialCaseReductions:
    def test_identity_projections_reproduce_plain_translation(self):
        rng = np.random.default_rng(0)
        d = 6
        low = ModelConfig(variant="lowrank", dim=d, head_rank=d, tail_rank=d)
        plain = ModelConfig(variant="transe", dim=d)
        params = LowRankRelation(identity_projection(d), identity_projection(d))
        for _ in range(50):
            h, r, t = (rng.standard_normal(d) for _ in range(3))
            assert score_triple(low, params, h, r, t) == score_triple(
                plain, None, h, r, t
            )

    def test_full_rank_shared_factors_reproduce_transr(self):
        # write M as sum_i e_i (M_i.)^T: full-rank factors, left = right
        rng = np.random.default_rng(1)
        d = 5
        M = rng.standard_normal((d, d))
        proj = LowRankProjection(np.ones(d), np.eye(d), M.copy())
        params = LowRankRelation(proj, proj)
        low = ModelConfig(variant="lowrank", dim=d, head_rank=d, tail_rank=d)
        tr = ModelConfig(variant="transr", dim=d)
        for _ in range(50):
            h, r, t = (rng.standard_normal(d) for _ in range(3))
            got = score_triple(low, params, h, r, t)
            want = score_triple(tr, TransRRelation(M), h, r, t)
            assert got == pytest.approx(want, rel=1e-12)


class TestKnowledgeLossGrad:
    def test_inactive_hinge_zero_everything(self):
        d = 4
        cfg = ModelConfig(variant="transe", dim=d, margin=1.0)
        h = np.zeros(d)
        r = np.zeros(d)
        t = np.zeros(d)
        ch = np.full(d, 10.0)  # corrupted score far above margin
        g = knowledge_loss_grad(cfg, None, h, t, ch, t, r)
        assert g.loss == 0.0
        assert not g.active
        for arr in (g.head, g.tail, g.corrupt_head, g.corrupt_tail, g.relation):
            assert np.all(arr == 0.0)

    def test_hand_hinge_value(self):
        # margin 1, f_golden = 1.0, f_corrupt = 1.2 -> loss 0.8
        d = 1
        cfg = ModelConfig(variant="transe", dim=d, margin=1.0)
        h = np.array([1.0])
        r = np.zeros(1)
        t = np.zeros(1)  # f_golden = 1.0
        ch = np.array([np.sqrt(1.2)])  # f_corrupt = 1.2
        g = knowledge_loss_grad(cfg, None, h, t, ch, t, r)
        assert g.loss == pytest.approx(0.8, abs=1e-12)

    def test_loss_bounds(self):
        rng = np.random.default_rng(2)
        d = 6
        for variant in ("lowrank", "transe", "transh", "se", "transr"):
            cfg, params = random_relation_params(variant, d, rng)
            for _ in range(20):
                h, t, ch, ct, r = (rng.standard_normal(d) for _ in range(5))
                f_g = score_triple(cfg, params, h, r, t)
                g = knowledge_loss_grad(cfg, params, h, t, ch, ct, r)
                assert 0.0 <= g.loss <= cfg.margin + f_g + 1e-12

    @pytest.mark.parametrize("variant", ["lowrank", "transe", "transh", "se", "transr"])
    def test_gradients_match_finite_differences(self, variant):
        rng = np.random.default_rng(hash(variant) % 2**32)
        d = 8
        cfg, params = random_relation_params(variant, d, rng)
        for _ in range(5):
            h, t, ch, ct, r = (rng.standard_normal(d) for _ in range(5))
            g = knowledge_loss_grad(cfg, params, h, t, ch, ct, r)
            if not g.active:
                continue

            def loss_fn():
                f_g = score_triple(cfg, params, h, r, t)
                f_c = score_triple(cfg, params, ch, r, ct)
                return max(0.0, cfg.margin + f_g - f_c)

            assert_grad_matches(loss_fn, h, g.head)
            assert_grad_matches(loss_fn, t, g.tail)
            assert_grad_matches(loss_fn, ch, g.corrupt_head)
            assert_grad_matches(loss_fn, ct, g.corrupt_tail)
            assert_grad_matches(loss_fn, r, g.relation)
            for arr, grad in param_grad_pairs(params, g.params):
                assert_grad_matches(loss_fn, arr, grad)

    def test_bad_margin_rejected(self):
        cfg = ModelConfig(variant="transe", dim=2)
        z = np.zeros(2)
        with pytest.raises(ValueError):
            knowledge_loss_grad(cfg, None, z, z, z, z, z, margin=-1.0)


class TestSkipGramLoss:
    def test_all_zero_vectors(self):
        d = 3
        g = skipgram_ns_loss_grad(np.zeros(d), np.zeros(d), np.zeros((1, d)))
        assert g.loss == pytest.approx(2 * np.log(2.0), abs=1e-12)

    def test_hand_value(self):
        center = np.array([1.0, 0.0])
        context = np.array([1.0, 0.0])
        neg = np.array([[-1.0, 0.0]])
        g = skipgram_ns_loss_grad(center, context, neg)
        expected = -2 * np.log(1.0 / (1.0 + np.exp(-1.0)))
        assert g.loss == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.6265, abs=1e-4)

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            d = int(rng.integers(2, 10))
            k = int(rng.integers(1, 6))
            center = rng.standard_normal(d)
            context = rng.standard_normal(d)
            negs = rng.standard_normal((k, d))
            g = skipgram_ns_loss_grad(center, context, negs)

            def loss_fn():
                s = 1.0 / (1.0 + np.exp(-(context @ center)))
                sn = 1.0 / (1.0 + np.exp(-(negs @ center)))
                return -np.log(s) - np.log(1.0 - sn).sum()

            assert_grad_matches(loss_fn, center, g.center)
            assert_grad_matches(loss_fn, context, g.context)
            assert_grad_matches(loss_fn, negs, g.negatives)

    def test_saturated_logits_do_not_overflow(self):
        d = 2
        center = np.full(d, 100.0)
        context = np.full(d, 100.0)
        negs = np.full((2, d), 100.0)
        g = skipgram_ns_loss_grad(center, context, negs)
        assert np.isfinite(g.loss)
        assert np.all(np.isfinite(g.center))

    def test_requires_a_negative(self):
        with pytest.raises(ValueError):
            skipgram_ns_loss_grad(np.zeros(2), np.zeros(2), np.zeros((0, 2)))


class TestEmbeddingStore:
    def test_init_shapes_and_ranges(self):
        rng = np.random.default_rng(3)
        store = EmbeddingStore.init(7, 2, 10, rng)
        assert store.input_vectors.shape == (7, 10)
        assert store.output_vectors.shape == (7, 10)
        assert store.relation_vectors.shape == (2, 10)
        assert np.all(np.abs(store.input_vectors) <= 0.05)
        assert np.all(store.output_vectors == 0.0)
        store.check_finite()

    def test_float32_mode(self):
        store = EmbeddingStore.init(3, 1, 4, np.random.default_rng(0), np.float32)
        assert store.input_vectors.dtype == np.float32

    def test_check_finite_raises(self):
        store = EmbeddingStore.init(3, 1, 4, np.random.default_rng(0))
        store.input_vectors[1, 2] = np.inf
        with pytest.raises(NumericError):
            store.check_finite()


class TestInitRelationParams:
    def test_variant_structures(self):
        rng = np.random.default_rng(4)
        cfg = ModelConfig(variant="lowrank", dim=6, head_rank=2, tail_rank=3)
        params = init_relation_params(cfg, 4, rng)
        assert len(params) == 4
        assert params[0].head_proj.rank_bound == 2
        assert params[0].tail_proj.rank_bound == 3

        transh = init_relation_params(ModelConfig(variant="transh", dim=6), 2, rng)
        assert all(abs(np.linalg.norm(p.normal) - 1) < 1e-12 for p in transh)

        assert init_relation_params(ModelConfig(variant="transe", dim=6), 3, rng) == [
            None,
            None,
            None,
        ]
        assert init_relation_params(ModelConfig(variant="sg", dim=6), 3, rng) == []


class TestEmbeddingExport:
    def test_round_trip_at_six_significant_digits(self, tmp_path):
        rng = np.random.default_rng(5)
        tokens = ["alpha", "beta_gamma", "delta"]
        vectors = rng.standard_normal((3, 4))
        path = tmp_path / "vectors.txt"
        save_embeddings_text(tokens, vectors, path)
        first = path.read_text().splitlines()[0]
        assert first == "3 4"
        toks2, vecs2 = load_embeddings_text(path)
        assert toks2 == tokens
        assert np.allclose(vecs2, vectors, rtol=1e-5)

    def test_count_mismatch(self, tmp_path):
        with pytest.raises(ValueError):
            save_embeddings_text(["a"], np.zeros((2, 2)), tmp_path / "x.txt")
