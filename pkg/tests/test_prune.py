import numpy as np
import pytest

from lclab.compress.prune import (
    apply_prune,
    calibrate,
    prune_magnitude,
    prune_random,
    prune_wanda,
)
from lclab.compress.specs import PruneSpec
from lclab.errors import ConfigurationError, DimensionError
from lclab.model import ModelConfig, forward, gen_toy_model
from lclab.model.config import projection_names

SMALL = ModelConfig(
    n_layers=2, d_model=32, n_heads=2, d_head=16, d_ff=48,
    vocab_size=256, max_context=512,
)


class TestMagnitude:
    def test_hand_example_per_layer(self):
        w = np.array([[0.1, -2.0], [3.0, 0.05]], dtype=np.float32)
        out = prune_magnitude(w, 0.5, "per_layer")
        assert np.array_equal(out, [[0.0, -2.0], [3.0, 0.0]])

    def test_hand_example_per_row(self):
        w = np.array([[0.1, -2.0], [3.0, 0.05]], dtype=np.float32)
        out = prune_magnitude(w, 0.5, "per_row")
        assert np.array_equal(out, [[0.0, -2.0], [3.0, 0.0]])

    def test_tie_prunes_lower_index_first(self):
        w = np.array([[1.0, -1.0, 1.0, 2.0]], dtype=np.float32)
        out = prune_magnitude(w, 0.5, "per_layer")
        assert np.array_equal(out, [[0.0, 0.0, 1.0, 2.0]])

    def test_exact_sparsity(self):
        rng = np.random.default_rng(0)
        for ratio in (0.1, 0.25, 0.5, 0.9):
            w = rng.standard_normal((17, 23)).astype(np.float32)
            out = prune_magnitude(w, ratio, "per_layer")
            assert int((out == 0).sum()) == int(ratio * w.size)

    def test_exact_sparsity_per_row(self):
        rng = np.random.default_rng(1)
        w = rng.standard_normal((9, 31)).astype(np.float32)
        out = prune_magnitude(w, 0.5, "per_row")
        assert np.all((out == 0).sum(axis=1) == 31 // 2)

    def test_survivors_bit_identical(self):
        rng = np.random.default_rng(2)
        w = rng.standard_normal((8, 8)).astype(np.float32)
        out = prune_magnitude(w, 0.5, "per_layer")
        kept = out != 0
        assert np.array_equal(out[kept], w[kept])

    def test_mask_invariant_under_positive_scaling(self):
        rng = np.random.default_rng(3)
        w = rng.standard_normal((12, 20)).astype(np.float32)
        m1 = prune_magnitude(w, 0.3, "per_layer") == 0
        m2 = prune_magnitude(w * np.float32(7.5), 0.3, "per_layer") == 0
        assert np.array_equal(m1, m2)

    def test_ratio_zero_is_identity(self):
        w = np.ones((3, 3), dtype=np.float32)
        assert np.array_equal(prune_magnitude(w, 0.0), w)

    def test_bad_ratio(self):
        with pytest.raises(ConfigurationError):
            prune_magnitude(np.ones((2, 2)), 1.0)
        with pytest.raises(ConfigurationError):
            prune_magnitude(np.ones((2, 2)), -0.1)


class TestWanda:
    def test_hand_example_with_tie(self):
        w = np.array([[1.0, -2.0], [3.0, -4.0]], dtype=np.float32)
        norms = np.array([2.0, 1.0])
        # scores [[2, 2], [6, 4]]; row 0 ties, lower column goes first
        out = prune_wanda(w, norms, 0.5)
        assert np.array_equal(out, [[0.0, -2.0], [3.0, 0.0]])

    def test_unit_norms_reduce_to_magnitude_per_row(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            w = rng.standard_normal((10, 16)).astype(np.float32)
            a = prune_wanda(w, np.ones(16), 0.5)
            b = prune_magnitude(w, 0.5, "per_row")
            assert np.array_equal(a, b)

    def test_norm_length_mismatch(self):
        with pytest.raises(DimensionError):
            prune_wanda(np.ones((2, 3), dtype=np.float32), np.ones(2), 0.5)

    def test_large_norm_protects_column(self):
        w = np.array([[0.01, 1.0, 1.0]], dtype=np.float32)
        out = prune_wanda(w, np.array([1000.0, 1.0, 1.0]), 1 / 3)
        assert out[0, 0] != 0.0  # tiny weight kept, its input is huge
        assert out[0, 1] == 0.0  # tie at score 1.0, lower index pruned


class TestRandom:
    def test_exact_count(self):
        w = np.ones((13, 17), dtype=np.float32)
        out = prune_random(w, 0.25, seed=5)
        assert int((out == 0).sum()) == int(0.25 * w.size)

    def test_deterministic_per_seed(self):
        w = np.ones((10, 10), dtype=np.float32)
        assert np.array_equal(prune_random(w, 0.3, 7), prune_random(w, 0.3, 7))
        assert not np.array_equal(prune_random(w, 0.3, 7), prune_random(w, 0.3, 8))

    def test_survivors_unchanged(self):
        rng = np.random.default_rng(6)
        w = rng.standard_normal((10, 10)).astype(np.float32)
        out = prune_random(w, 0.4, seed=1)
        kept = out != 0
        assert np.array_equal(out[kept], w[kept])


class TestCalibrate:
    def test_matches_direct_hook_accumulation(self):
        ckpt = gen_toy_model(SMALL, seed=9)
        seqs = [[1, 2, 3, 4], [5, 6]]
        norms = calibrate(ckpt, seqs)
        sums = {}

        def hook(name, x):
            sums.setdefault(name, 0.0)
            sums[name] = sums[name] + np.sum(np.square(x.astype(np.float64)), axis=0)

        for s in seqs:
            forward(ckpt, s, activation_hook=hook)
        assert set(norms) == set(sums) == set(projection_names(SMALL))
        for name in norms:
            assert np.allclose(norms[name], np.sqrt(sums[name]), atol=0)

    def test_empty_calibration_rejected(self):
        with pytest.raises(ConfigurationError):
            calibrate(gen_toy_model(SMALL, seed=9), [])


class TestApplyPrune:
    def test_projections_only_by_default(self):
        ckpt = gen_toy_model(SMALL, seed=10)
        out = apply_prune(ckpt, PruneSpec(method="magnitude", ratio=0.5))
        assert np.array_equal(out.tensors["tok_embed"], ckpt.tensors["tok_embed"])
        assert np.array_equal(out.tensors["lm_head"], ckpt.tensors["lm_head"])
        for name in projection_names(SMALL):
            w = out.tensors[name]
            assert int((w == 0).sum()) >= int(0.5 * w.size)

    def test_targets_all_touches_embeddings(self):
        ckpt = gen_toy_model(SMALL, seed=10)
        out = apply_prune(
            ckpt, PruneSpec(method="magnitude", ratio=0.5, targets="all")
        )
        assert not np.array_equal(out.tensors["tok_embed"], ckpt.tensors["tok_embed"])

    def test_random_masks_differ_across_matrices(self):
        ckpt = gen_toy_model(SMALL, seed=10)
        out = apply_prune(ckpt, PruneSpec(method="random", ratio=0.5, seed=3))
        m1 = out.tensors["layers.0.attn.wq"] == 0
        m2 = out.tensors["layers.0.attn.wk"] == 0
        assert not np.array_equal(m1, m2)

    def test_wanda_requires_norms(self):
        ckpt = gen_toy_model(SMALL, seed=10)
        with pytest.raises(ConfigurationError):
            apply_prune(ckpt, PruneSpec(method="wanda", ratio=0.5))

    def test_spec_defaults(self):
        assert PruneSpec(method="wanda", ratio=0.5).granularity == "per_row"
        assert PruneSpec(method="magnitude", ratio=0.5).granularity == "per_layer"
        with pytest.raises(ConfigurationError):
            PruneSpec(method="random", ratio=0.5)  # no seed
