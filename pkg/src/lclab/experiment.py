"""Experiment configuration and orchestration for the context sweep.

The config is one JSON document:

    {
      "seed": 7,
      "model": {"generate": {"config": {...ModelConfig fields...},
                             "seed": 42,
                             "outlier_fraction": 0.005,
                             "outlier_scale": 20.0}}
               | {"load": "path/to/model.lcmp"},
      "methods": [{"label": "identity", "type": "identity"},
                  {"label": "magnitude-50", "type": "prune",
                   "method": "magnitude", "ratio": 0.5}, ...],
      "lengths": [256, 512, 1024, 2048, 4096],
      "samples": {"synthetic": {"seed": 1}} | {"token_file": "path"},
      "n_samples": 20,
      "eval_mode": "last" | {"tail_k": 8},
      "out_dir": "results"      # optional, CLI --out overrides
    }

Sample policy: the first n_samples sequences are the evaluation set;
the next (up to) 8 sequences, truncated to 512 tokens, are the Wanda
calibration set, so calibration never overlaps evaluation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .compress.estimators import WandaPruner, compressor_from_spec
from .errors import ConfigurationError
from .harness import BaseProbsCache, EvalSample, SweepRecord, run_sweep
from .model import Checkpoint, ModelConfig, gen_toy_model, load_checkpoint, load_token_file
from .model.rng import fnv1a64, splitmix64_mix

CALIB_SEQUENCES = 8
CALIB_TOKENS = 512


@dataclass
class ExperimentConfig:
    seed: int
    model: dict
    methods: list
    lengths: list
    samples: dict
    n_samples: int = 20
    eval_mode: str = "last"
    tail_k: int = 8
    out_dir: Optional[str] = None

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        mode = d.pop("eval_mode", "last")
        tail_k = 8
        if isinstance(mode, dict):
            if set(mode) != {"tail_k"}:
                raise ConfigurationError(f"bad eval_mode {mode!r}")
            tail_k = int(mode["tail_k"])
            mode = "tail_k"
        elif mode not in ("last", "tail_k"):
            raise ConfigurationError(f"bad eval_mode {mode!r}")
        try:
            cfg = cls(eval_mode=mode, tail_k=tail_k, **d)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from None
        cfg.validate()
        return cfg

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                return cls.from_dict(json.load(fh))
            except json.JSONDecodeError as exc:
                raise ConfigurationError(f"{path}: {exc}") from None

    def validate(self) -> None:
        labels = [m.get("label") for m in self.methods]
        if not labels:
            raise ConfigurationError("methods list is empty")
        if any(not isinstance(l, str) or not l or "," in l for l in labels):
            raise ConfigurationError("every method needs a comma-free label")
        if len(set(labels)) != len(labels):
            raise ConfigurationError("method labels must be unique")
        if not self.lengths or list(self.lengths) != sorted(set(self.lengths)):
            raise ConfigurationError("lengths must be strictly increasing")
        if self.n_samples < 1:
            raise ConfigurationError("n_samples must be >= 1")
        if not isinstance(self.model, dict) or len(self.model) != 1 or not (
            set(self.model) <= {"generate", "load"}
        ):
            raise ConfigurationError("model must be {'generate': ...} or {'load': ...}")
        if not isinstance(self.samples, dict) or len(self.samples) != 1 or not (
            set(self.samples) <= {"synthetic", "token_file"}
        ):
            raise ConfigurationError(
                "samples must be {'synthetic': ...} or {'token_file': ...}"
            )


def resolve_model(cfg: ExperimentConfig) -> Checkpoint:
    if "load" in cfg.model:
        return load_checkpoint(cfg.model["load"])
    gen = dict(cfg.model["generate"])
    mc = gen.pop("config", None)
    config = ModelConfig.from_dict(mc) if mc else ModelConfig.desk_default()
    try:
        return gen_toy_model(config, **gen)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from None


def synthetic_sequences(seed: int, count: int, length: int, vocab_size: int):
    """Deterministic uniform token sequences from a Philox stream."""
    key = splitmix64_mix((seed & (2**64 - 1)) ^ fnv1a64("samples"))
    gen = np.random.Generator(np.random.Philox(key=key))
    return [
        [int(t) for t in gen.integers(0, vocab_size, size=length)]
        for _ in range(count)
    ]


def resolve_samples(
    cfg: ExperimentConfig, model_config: ModelConfig
) -> tuple[list[EvalSample], list[list[int]]]:
    """(evaluation samples, calibration sequences)."""
    max_len = max(cfg.lengths)
    if max_len > model_config.max_context:
        raise ConfigurationError(
            f"sweep length {max_len} exceeds max_context {model_config.max_context}"
        )
    if "token_file" in cfg.samples:
        seqs = load_token_file(cfg.samples["token_file"], model_config.vocab_size)
        if len(seqs) < cfg.n_samples:
            raise ConfigurationError(
                f"token file has {len(seqs)} sequences, need {cfg.n_samples}"
            )
        eval_seqs = seqs[: cfg.n_samples]
        calib = [s[:CALIB_TOKENS] for s in seqs[cfg.n_samples :][:CALIB_SEQUENCES]]
    else:
        syn = dict(cfg.samples["synthetic"])
        sample_seed = int(syn.pop("seed", cfg.seed))
        if syn:
            raise ConfigurationError(f"unknown synthetic sample fields: {sorted(syn)}")
        all_seqs = synthetic_sequences(
            sample_seed,
            cfg.n_samples + CALIB_SEQUENCES,
            max_len,
            model_config.vocab_size,
        )
        eval_seqs = all_seqs[: cfg.n_samples]
        calib = [s[:CALIB_TOKENS] for s in all_seqs[cfg.n_samples :]]
    samples = [
        EvalSample(id=f"sample-{i:03d}", tokens=tuple(s))
        for i, s in enumerate(eval_seqs)
    ]
    return samples, calib


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> list[SweepRecord]:
    """Run every labeled method over the length ladder; deterministic per
    (config, seed) and independent of the thread count."""
    base = resolve_model(cfg)
    samples, calib = resolve_samples(cfg, base.config)
    cache = BaseProbsCache(base, mode=cfg.eval_mode, tail_k=cfg.tail_k)
    records: list[SweepRecord] = []
    for method in cfg.methods:
        method = dict(method)
        label = method.pop("label")
        compressor = compressor_from_spec(method)
        if isinstance(compressor, WandaPruner):
            if not calib:
                raise ConfigurationError(
                    f"method {label!r} needs calibration sequences"
                )
            compressor.fit(base, calib=calib)
        else:
            compressor.fit(base)
        records.extend(
            run_sweep(
                base,
                None,
                cfg.lengths,
                samples,
                label=label,
                mode=cfg.eval_mode,
                tail_k=cfg.tail_k,
                threads=threads,
                base_cache=cache,
                compressor=compressor,
            )
        )
    return records
