"""Context-length divergence sweep.

Runs the base and a compressed model teacher-forced over shared samples
truncated to a ladder of context lengths, and records the KL divergence
KL(compressed || base) of next-token distributions per length. By
default only the final position is scored (one scalar per length);
tail_k mode averages over the last k positions instead.
"""

from __future__ import annotations

import io
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DimensionError,
    EmptyEvaluationError,
    InputError,
)
from .model import Checkpoint, forward
from .compress.estimators import BaseCompressor, compressor_from_spec

log = logging.getLogger(__name__)

Q_CLAMP = 1e-10  # fake-quant models can zero out tail probabilities
CSV_HEADER = "method_label,context_length,kl_mean,kl_std,n_samples"


@dataclass(frozen=True)
class EvalSample:
    id: str
    tokens: tuple


@dataclass(frozen=True)
class SweepRecord:
    method_label: str
    context_length: int
    kl_mean: float
    kl_std: float
    n_samples: int


def kl_divergence(p: np.ndarray, q: np.ndarray) -> float:
    """Sum p_i ln(p_i / q_i) in nats.

    Terms with p_i = 0 contribute 0; q is clamped below at Q_CLAMP before
    division. Positions where p_i == q_i contribute exactly 0 regardless
    of the clamp, so KL(p, p) == 0 even when p has sub-clamp entries.
    """
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    q = np.asarray(q, dtype=np.float64).reshape(-1)
    if p.shape != q.shape:
        raise DimensionError(f"length mismatch: {p.shape} vs {q.shape}")
    for name, v in (("p", p), ("q", q)):
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise InputError(f"{name} is not a probability vector")
        if abs(v.sum() - 1.0) > 1e-4:
            raise InputError(f"{name} sums to {v.sum()!r}, outside tolerance 1e-4")
    qc = np.maximum(q, Q_CLAMP)
    active = (p > 0) & (p != q)
    terms = np.zeros_like(p)
    terms[active] = p[active] * (np.log(p[active]) - np.log(qc[active]))
    return float(terms.sum())


def logits_to_probs(logits: np.ndarray) -> np.ndarray:
    """Stable softmax at temperature 1 over the last axis, float64."""
    x = np.asarray(logits, dtype=np.float64)
    m = np.max(x, axis=-1, keepdims=True)
    e = np.exp(x - m)
    return e / np.sum(e, axis=-1, keepdims=True)


def _positions(length: int, mode: str, tail_k: int) -> list[int]:
    if mode == "last":
        return [length - 1]
    if mode == "tail_k":
        return list(range(max(0, length - tail_k), length))
    raise InputError(f"unknown eval mode {mode!r}")


class BaseProbsCache:
    """Per-(sample, length) next-token distributions of the base model.

    Lets one base forward pass serve every compression method in a
    sweep. Not thread-safe for writes; populate sequentially or guard
    externally.
    """

    def __init__(self, base: Checkpoint, mode: str = "last", tail_k: int = 8):
        self.base = base
        self.mode = mode
        self.tail_k = tail_k
        self._cache: dict[tuple[str, int], np.ndarray] = {}

    def probs(self, sample: EvalSample, length: int) -> np.ndarray:
        key = (sample.id, length)
        if key not in self._cache:
            logits = forward(self.base, sample.tokens[:length])
            pos = _positions(length, self.mode, self.tail_k)
            self._cache[key] = logits_to_probs(logits[pos])
        return self._cache[key]


def eval_kl_at_length(
    base: Checkpoint,
    compressed: Checkpoint,
    samples: Sequence[EvalSample],
    length: int,
    mode: str = "last",
    tail_k: int = 8,
    activation_transform=None,
    threads: int = 1,
    base_cache: Optional[BaseProbsCache] = None,
) -> tuple[float, float, int]:
    """(mean, std, n) of per-sample KL(compressed || base) at one length.

    Samples shorter than `length` are skipped with a warning; if all are
    skipped the evaluation is empty and raises. The std is the
    population standard deviation over samples (ddof=0).
    """
    usable = []
    for s in samples:
        if len(s.tokens) < length:
            log.warning("sample %s has %d tokens, skipping at length %d",
                        s.id, len(s.tokens), length)
        else:
            usable.append(s)
    if not usable:
        raise EmptyEvaluationError(f"no sample long enough for length {length}")
    if base_cache is None:
        base_cache = BaseProbsCache(base, mode=mode, tail_k=tail_k)
    for s in usable:  # populate sequentially; the cache is not locked
        base_cache.probs(s, length)

    def one(sample: EvalSample) -> float:
        logits = forward(
            compressed, sample.tokens[:length],
            activation_transform=activation_transform,
        )
        pos = _positions(length, mode, tail_k)
        p = logits_to_probs(logits[pos])
        q = base_cache.probs(sample, length)
        kls = [kl_divergence(p[i], q[i]) for i in range(p.shape[0])]
        return float(np.mean(kls))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(one, usable))
    else:
        values = [one(s) for s in usable]
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std(ddof=0)), len(usable)


def run_sweep(
    base: Checkpoint,
    spec,
    lengths: Sequence[int],
    samples: Sequence[EvalSample],
    label: Optional[str] = None,
    mode: str = "last",
    tail_k: int = 8,
    threads: int = 1,
    base_cache: Optional[BaseProbsCache] = None,
    compressor: Optional[BaseCompressor] = None,
    fit_kwargs: Optional[dict] = None,
) -> list[SweepRecord]:
    """Compress once, evaluate at every length, return per-length records."""
    if compressor is None:
        compressor = compressor_from_spec(spec)
        compressor.fit(base, **(fit_kwargs or {}))
    compressed = compressor.transform(base)
    transform = compressor.activation_transform()
    if label is None:
        label = type(compressor).__name__
    records = []
    for length in lengths:
        mean, std, n = eval_kl_at_length(
            base, compressed, samples, length,
            mode=mode, tail_k=tail_k,
            activation_transform=transform,
            threads=threads, base_cache=base_cache,
        )
        records.append(SweepRecord(label, int(length), mean, std, n))
    return records


def fit_slope(records: Sequence[SweepRecord]) -> tuple[float, float, float]:
    """Ordinary least squares of kl_mean against context_length.

    Returns (slope per token, intercept, r^2).
    """
    x = np.asarray([r.context_length for r in records], dtype=np.float64)
    y = np.asarray([r.kl_mean for r in records], dtype=np.float64)
    return ols_fit(x, y)


def ols_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    if x.size < 2:
        raise InputError("need at least two points to fit a line")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2


def records_to_csv(records: Sequence[SweepRecord]) -> str:
    """Exact sweep CSV: fixed header, LF endings, repr floats."""
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for r in records:
        buf.write(
            f"{r.method_label},{r.context_length},{r.kl_mean!r},"
            f"{r.kl_std!r},{r.n_samples}\n"
        )
    return buf.getvalue()


def records_from_csv(text: str) -> list[SweepRecord]:
    lines = text.split("\n")
    if not lines or lines[0] != CSV_HEADER:
        raise InputError(f"bad sweep CSV header: {lines[0] if lines else ''!r}")
    records = []
    for line in lines[1:]:
        if not line:
            continue
        label, length, mean, std, n = line.split(",")
        records.append(
            SweepRecord(label, int(length), float(mean), float(std), int(n))
        )
    return records
