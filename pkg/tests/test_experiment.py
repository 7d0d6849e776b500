import json

import pytest

from lclab.errors import ConfigurationError
from lclab.experiment import (
    ExperimentConfig,
    resolve_model,
    resolve_samples,
    run_experiment,
    synthetic_sequences,
)
from lclab.model import ModelConfig

SMALL_MODEL = {
    "generate": {
        "config": {
            "n_layers": 1, "d_model": 32, "n_heads": 2, "d_head": 16,
            "d_ff": 48, "vocab_size": 256, "max_context": 256,
        },
        "seed": 4,
    }
}


def tiny_config(**overrides):
    base = dict(
        seed=7,
        model=SMALL_MODEL,
        methods=[
            {"label": "identity", "type": "identity"},
            {"label": "w4", "type": "quant", "weight_bits": 4},
        ],
        lengths=[16, 32],
        samples={"synthetic": {"seed": 1}},
        n_samples=2,
    )
    base.update(overrides)
    return ExperimentConfig.from_dict(base)


class TestConfigValidation:
    def test_valid_config_parses(self):
        cfg = tiny_config()
        assert cfg.eval_mode == "last" and cfg.n_samples == 2

    def test_duplicate_labels_rejected(self):
        with pytest.raises(ConfigurationError):
            tiny_config(methods=[
                {"label": "a", "type": "identity"},
                {"label": "a", "type": "quant", "weight_bits": 4},
            ])

    def test_comma_in_label_rejected(self):
        with pytest.raises(ConfigurationError):
            tiny_config(methods=[{"label": "a,b", "type": "identity"}])

    def test_non_increasing_lengths_rejected(self):
        with pytest.raises(ConfigurationError):
            tiny_config(lengths=[32, 16])
        with pytest.raises(ConfigurationError):
            tiny_config(lengths=[16, 16])

    def test_tail_k_mode(self):
        cfg = tiny_config(eval_mode={"tail_k": 4})
        assert cfg.eval_mode == "tail_k" and cfg.tail_k == 4

    def test_bad_eval_mode_rejected(self):
        with pytest.raises(ConfigurationError):
            tiny_config(eval_mode="median")

    def test_unknown_field_rejected(self):
        with pytest.raises(ConfigurationError):
            tiny_config(bogus=1)

    def test_from_json_file(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(dict(
            seed=7, model=SMALL_MODEL,
            methods=[{"label": "identity", "type": "identity"}],
            lengths=[16], samples={"synthetic": {"seed": 1}}, n_samples=1,
        )))
        cfg = ExperimentConfig.from_json_file(path)
        assert cfg.lengths == [16]


class TestSamples:
    def test_synthetic_sequences_deterministic(self):
        a = synthetic_sequences(1, 3, 16, 256)
        b = synthetic_sequences(1, 3, 16, 256)
        assert a == b
        assert synthetic_sequences(2, 3, 16, 256) != a

    def test_sequences_in_vocab(self):
        seqs = synthetic_sequences(1, 2, 100, 256)
        assert all(0 <= t < 256 for s in seqs for t in s)

    def test_eval_and_calib_disjoint(self):
        cfg = tiny_config()
        model_cfg = resolve_model(cfg).config
        samples, calib = resolve_samples(cfg, model_cfg)
        assert len(samples) == 2
        assert len(calib) == 8
        eval_set = {s.tokens for s in samples}
        assert all(tuple(c) not in eval_set for c in calib)

    def test_token_file_samples(self, tmp_path):
        path = tmp_path / "toks.txt"
        lines = [" ".join(str((i + j) % 256) for j in range(40)) for i in range(3)]
        path.write_text("\n".join(lines) + "\n")
        cfg = tiny_config(samples={"token_file": str(path)}, n_samples=2, lengths=[16])
        model_cfg = resolve_model(cfg).config
        samples, calib = resolve_samples(cfg, model_cfg)
        assert len(samples) == 2 and len(calib) == 1

    def test_length_beyond_context_rejected(self):
        cfg = tiny_config(lengths=[16, 512])
        with pytest.raises(ConfigurationError):
            resolve_samples(cfg, resolve_model(cfg).config)


class TestRunExperiment:
    def test_records_cover_all_methods_and_lengths(self):
        records = run_experiment(tiny_config())
        got = {(r.method_label, r.context_length) for r in records}
        assert got == {("identity", 16), ("identity", 32), ("w4", 16), ("w4", 32)}

    def test_identity_kl_is_zero(self):
        records = run_experiment(tiny_config())
        for r in records:
            if r.method_label == "identity":
                assert r.kl_mean == 0.0 and r.kl_std == 0.0

    def test_deterministic_and_thread_independent(self):
        r1 = run_experiment(tiny_config(), threads=1)
        r2 = run_experiment(tiny_config(), threads=4)
        assert r1 == r2

    def test_wanda_method_runs(self):
        cfg = tiny_config(methods=[
            {"label": "wanda-50", "type": "prune", "method": "wanda", "ratio": 0.5},
        ])
        records = run_experiment(cfg)
        assert all(r.method_label == "wanda-50" for r in records)

    def test_model_config_resolution(self):
        cfg = tiny_config()
        model = resolve_model(cfg)
        assert model.config == ModelConfig(
            n_layers=1, d_model=32, n_heads=2, d_head=16, d_ff=48,
            vocab_size=256, max_context=256,
        )
